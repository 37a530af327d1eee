#include "pricesim/core.hpp"

#include <cstdio>
#include <stdexcept>

namespace pricesim {

// Howard Hinnant's days-from-civil algorithm; exact for all int32 dates.
CivilDate CivilDate::from_ymd(int y, int m, int d) {
  if (m < 1 || m > 12) throw std::invalid_argument("month out of range");
  static constexpr int kDaysInMonth[12] = {31, 28, 31, 30, 31, 30,
                                           31, 31, 30, 31, 30, 31};
  bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  int dim = kDaysInMonth[m - 1] + (m == 2 && leap ? 1 : 0);
  if (d < 1 || d > dim) throw std::invalid_argument("day out of range");

  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
      static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return CivilDate(era * 146097 + static_cast<int>(doe) - 719468);
}

void CivilDate::to_ymd(int& year, int& month, int& day) const {
  std::int64_t z = days_ + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

std::optional<CivilDate> parse_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
  }
  int y = std::stoi(s.substr(0, 4));
  int m = std::stoi(s.substr(5, 2));
  int d = std::stoi(s.substr(8, 2));
  try {
    return CivilDate::from_ymd(y, m, d);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

std::string format_date(CivilDate d) {
  int y, m, day;
  d.to_ymd(y, m, day);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, day);
  return buf;
}

void validate_criteria(const SearchCriteria& c, const CriteriaBounds& b) {
  if (c.checkout <= c.checkin)
    throw std::invalid_argument("checkout must be after checkin");
  if (c.checkout - c.checkin > b.max_stay_nights)
    throw std::invalid_argument("stay longer than max_stay_nights");
  if (c.adults < 1 || c.adults > b.max_adults)
    throw std::invalid_argument("adults out of range");
  if (c.children < 0 || c.children > b.max_children)
    throw std::invalid_argument("children out of range");
  if (c.rooms < 1 || c.rooms > b.max_rooms)
    throw std::invalid_argument("rooms out of range");
}

std::uint64_t hash_itinerary(const Itinerary& it) {
  std::uint64_t h = fnv1a64(it.hotel_id);
  h = fnv1a64_u64(
      static_cast<std::uint64_t>(
          static_cast<std::uint32_t>(it.criteria.checkin.days_since_epoch())),
      h);
  h = fnv1a64_u64(
      static_cast<std::uint64_t>(
          static_cast<std::uint32_t>(it.criteria.checkout.days_since_epoch())),
      h);
  std::uint64_t occ = (static_cast<std::uint64_t>(it.criteria.adults) << 32) |
                      (static_cast<std::uint64_t>(it.criteria.children) << 16) |
                      static_cast<std::uint64_t>(it.criteria.rooms);
  return fnv1a64_u64(occ, h);
}

void validate_outcome(const SearchOutcome& o) {
  auto check = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
  };
  check(o.p_display, "p_display");
  check(o.p_book, "p_book");
  check(o.p_accurate, "p_accurate");
}

double expected_bookings(std::span<const SearchOutcome> outcomes) {
  double total = 0.0;
  for (const auto& o : outcomes) {
    validate_outcome(o);
    total += o.p_display * o.p_book * o.p_accurate;
  }
  return total;
}

}  // namespace pricesim
