#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace pricesim {

// Simulation time in whole seconds from the start of the run.
using SimTime = std::int64_t;

inline constexpr SimTime kSecondsPerDay = 86400;
inline constexpr SimTime kSecondsPerHour = 3600;

// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
// Only whole days; time-of-day lives in SimTime.
class CivilDate {
 public:
  CivilDate() = default;
  explicit constexpr CivilDate(std::int32_t days_since_epoch)
      : days_(days_since_epoch) {}

  static CivilDate from_ymd(int year, int month, int day);
  void to_ymd(int& year, int& month, int& day) const;

  constexpr std::int32_t days_since_epoch() const { return days_; }

  friend constexpr bool operator==(CivilDate a, CivilDate b) {
    return a.days_ == b.days_;
  }
  friend constexpr bool operator!=(CivilDate a, CivilDate b) {
    return a.days_ != b.days_;
  }
  friend constexpr bool operator<(CivilDate a, CivilDate b) {
    return a.days_ < b.days_;
  }
  friend constexpr bool operator<=(CivilDate a, CivilDate b) {
    return a.days_ <= b.days_;
  }
  friend constexpr bool operator>(CivilDate a, CivilDate b) {
    return a.days_ > b.days_;
  }
  friend constexpr bool operator>=(CivilDate a, CivilDate b) {
    return a.days_ >= b.days_;
  }

  // Difference in whole days.
  friend constexpr std::int32_t operator-(CivilDate a, CivilDate b) {
    return a.days_ - b.days_;
  }
  friend constexpr CivilDate operator+(CivilDate d, std::int32_t days) {
    return CivilDate(d.days_ + days);
  }

 private:
  std::int32_t days_ = 0;
};

// "YYYY-MM-DD"; returns nullopt on malformed input or out-of-range fields.
std::optional<CivilDate> parse_date(const std::string& s);
std::string format_date(CivilDate d);

// Date reached after `t` seconds of simulation starting at `start`.
inline CivilDate date_at(CivilDate start, SimTime t) {
  return start + static_cast<std::int32_t>(t / kSecondsPerDay);
}

}  // namespace pricesim
