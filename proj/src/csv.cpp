#include "pricesim/csv.hpp"

#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pricesim {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::int64_t parse_i64(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("bad integer for " + what + ": '" + s + "'");
  }
}

double parse_f64(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("bad number for " + what + ": '" + s + "'");
  }
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void emit_lines(std::string& buf, std::size_t& line_no, bool flush,
                const std::function<void(std::size_t, const std::string&)>& fn) {
  std::size_t start = 0;
  while (true) {
    std::size_t nl = buf.find('\n', start);
    if (nl == std::string::npos) break;
    std::string line = buf.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(++line_no, line);
    start = nl + 1;
  }
  buf.erase(0, start);
  if (flush && !buf.empty()) {
    std::string line = buf;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(++line_no, line);
    buf.clear();
  }
}

}  // namespace

void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, const std::string&)>& fn) {
  std::size_t line_no = 0;
  std::string buf;
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    char chunk[1 << 16];
    int n;
    while ((n = gzread(f, chunk, sizeof chunk)) > 0) {
      buf.append(chunk, static_cast<std::size_t>(n));
      emit_lines(buf, line_no, false, fn);
    }
    bool bad = n < 0;
    gzclose(f);
    if (bad) throw std::runtime_error("gzip read error in " + path);
  } else {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    char chunk[1 << 16];
    while (f.read(chunk, sizeof chunk) || f.gcount() > 0) {
      buf.append(chunk, static_cast<std::size_t>(f.gcount()));
      emit_lines(buf, line_no, false, fn);
    }
  }
  emit_lines(buf, line_no, true, fn);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace pricesim
