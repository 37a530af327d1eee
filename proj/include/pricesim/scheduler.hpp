#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pricesim/cache.hpp"
#include "pricesim/core.hpp"
#include "pricesim/smartttl.hpp"

namespace pricesim {

// Daily fetch count that keeps an itinerary continuously cached: ceil of
// day / ttl. Throws on nonpositive ttl.
std::int64_t itinerary_frequency(SimTime ttl);

// Expected bookings per day from always-cached serving: sum of p_b * p_a
// over the day's searches (display probability is 1 by construction).
// Throws std::invalid_argument on probabilities outside [0, 1].
double itinerary_value(std::span<const std::pair<double, double>> searches);

struct ItineraryPlanEntry {
  Itinerary itinerary;
  SimTime ttl = 0;
  std::int64_t frequency = 0;  // == itinerary_frequency(ttl)
  double value = 0.0;          // expected bookings per day if always cached
  double value_per_request = 0.0;
};

ItineraryPlanEntry make_plan_entry(Itinerary it, SimTime ttl, double value);

enum class AdmissionGranularity {
  kAtomic,      // an itinerary enters with all f of its requests or not at all
  kPerRequest,  // study mode: the last itinerary may enter partially
};

// Greedy by value-per-request (descending); every later entry that still
// fits is admitted. Ties: higher value first, then original input order.
// With kPerRequest, an entry that does not fit whole is admitted with its
// frequency cut to the leftover budget and its value prorated; the ttl is
// kept as-is so audits surface the coverage gap honestly.
std::vector<ItineraryPlanEntry> select_top_requests(
    std::vector<ItineraryPlanEntry> entries, std::int64_t budget,
    AdmissionGranularity granularity = AdmissionGranularity::kAtomic);

// One day of planned fetches at one-second resolution.
struct SchedulePlan {
  struct Item {
    Itinerary itinerary;
    SimTime ttl = 0;
    std::int64_t frequency = 0;
  };

  std::vector<Item> items;
  // buckets[second] lists indices into `items`.
  std::vector<std::vector<std::uint32_t>> buckets;
  std::uint64_t total_sends = 0;

  // second,hotel_id,checkin,checkout,adults,children,rooms
  std::string to_csv() const;
  // `ttl_table` (optional) restores per-item TTLs so gap audits can run;
  // `plan_date` anchors the checkin-lead lookup.
  static SchedulePlan from_csv_file(const std::string& path,
                                    const TtlTable* ttl_table,
                                    CivilDate plan_date);
};

// Spreads the selected entries evenly: entries grouped by (frequency, ttl)
// and placed densest group first; an entry takes the first slot of its
// floor(86400/f)-second window whose repeats (offsets floor(m*86400/f)) all
// have spare capacity, which keeps every consecutive send (wrap included)
// within ttl. Throws std::invalid_argument if total sends exceed
// mu * 86400, and std::runtime_error naming the entry if frequency mixes
// leave no collision-free slot for it (cannot happen when every frequency
// divides 86400).
SchedulePlan build_schedule(std::span<const ItineraryPlanEntry> selected,
                            int mu);

struct PlanAudit {
  bool ok = true;
  std::uint32_t max_second_load = 0;
  std::uint64_t total_sends = 0;
  std::vector<std::string> violations;
};

// Checks the SchedulePlan invariants: per-second load <= mu, total sends <=
// mu * 86400, per-itinerary consecutive-send gaps (wrap-around included)
// <= ttl, and send count == frequency. Gap/frequency checks are skipped for
// items whose ttl is unknown (0).
PlanAudit audit_plan(const SchedulePlan& plan, int mu);

// The aggressive-LRU per-second refresh batch: whatever budget passive
// traffic left this second goes to the residents closest to expiry.
// Throws std::invalid_argument if mu_passive_this_second > mu.
std::vector<Itinerary> lru_refresh_batch(const LruSearchCache& cache, int mu,
                                         int mu_passive_this_second,
                                         SimTime now);

}  // namespace pricesim
