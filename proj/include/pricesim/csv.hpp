#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pricesim {

// Splits one CSV line on commas. No quoting support: none of our formats
// quote fields (ids are alphanumeric, everything else is numeric).
std::vector<std::string> split_csv(const std::string& line);

// Strict numeric parsers; `what` names the field in the error message.
std::int64_t parse_i64(const std::string& s, const std::string& what);
double parse_f64(const std::string& s, const std::string& what);

// Calls `fn(line_number, line)` for each line, transparently inflating
// files whose name ends in ".gz". Line numbers start at 1; trailing \r is
// stripped. Throws std::runtime_error if the file cannot be opened/read.
void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, const std::string&)>& fn);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace pricesim
