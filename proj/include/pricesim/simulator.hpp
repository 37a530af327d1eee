#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pricesim/core.hpp"
#include "pricesim/scheduler.hpp"
#include "pricesim/smartttl.hpp"
#include "pricesim/supplier.hpp"
#include "pricesim/trace.hpp"

namespace pricesim {

struct PolicySpec {
  enum class Variant {
    kPassiveFixedTtl,          // fetch on miss, constant TTL
    kPassiveSmartTtl,          // fetch on miss, TTL from the cluster table
    kAggressiveLru,            // passive + leftover budget refreshes the LRU
    kAggressiveSmartScheduler  // pre-planned fetches only (unless reserved)
  };

  Variant variant = Variant::kPassiveFixedTtl;
  SimTime fixed_ttl = 900;
  std::size_t lru_capacity = 4096;
  bool lru_use_smart_ttl = true;  // refresh TTLs from the table when present
  // Fraction of the budget withheld from the plan so misses can still fetch
  // (study knob; 0 reproduces the fully aggressive scheduler).
  double reserve_passive_fraction = 0.0;

  static PolicySpec passive_fixed_ttl(SimTime ttl);
  static PolicySpec passive_smart_ttl();
  static PolicySpec aggressive_lru(std::size_t capacity);
  static PolicySpec aggressive_smart_scheduler();

  std::string name() const;
  void validate() const;
};

struct DayMetrics {
  std::uint64_t searches = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t fetches_sent = 0;
  std::uint64_t fetches_rejected = 0;
  std::uint64_t booking_attempts = 0;
  std::uint64_t bookings = 0;

  double cache_hit_rate() const {
    return searches == 0
               ? 0.0
               : static_cast<double>(hits) / static_cast<double>(searches);
  }
  double accuracy_at_booking() const {
    return booking_attempts == 0 ? 0.0
                                 : static_cast<double>(bookings) /
                                       static_cast<double>(booking_attempts);
  }
  DayMetrics& operator+=(const DayMetrics& o);
};

struct Metrics {
  std::vector<DayMetrics> days;
  DayMetrics total;
  std::uint64_t first_occurrence_searches = 0;
  // Served quotes whose price differed from ground truth at their fetch
  // time; must stay 0 (accounting invariant).
  std::uint64_t served_price_mismatches = 0;
  UtilizationReport utilization;

  // day,arm,searches,hits,hit_rate,fetches,rejected,attempts,bookings,accuracy
  std::string to_csv(const std::string& arm) const;
  static std::string csv_header();
  void append_csv_rows(const std::string& arm, std::string& out) const;
};

// Per-itinerary value estimates feeding the scheduler.
struct ValueTable {
  struct Row {
    Itinerary itinerary;
    double p_b = 0.0;
    double p_a = 1.0;
    double daily_searches = 0.0;
  };

  std::vector<Row> rows;

  // hotel_id,checkin,checkout,adults,children,rooms,p_b,p_a,daily_searches
  std::string to_csv() const;
  static ValueTable from_csv_file(const std::string& path);
};

struct RunInputs {
  SearchStreamFactory trace_factory;
  SupplierConfig supplier;
  const PriceBook* prices = nullptr;
  const TtlTable* ttl_table = nullptr;      // smart variants
  const ValueTable* value_table = nullptr;  // scheduler variant
  std::function<double(const Itinerary&)> booking_propensity;
  CivilDate start_date;
  SimTime horizon = 14 * kSecondsPerDay;
  std::uint64_t seed = 1;
};

// Drives one policy over the trace. Deterministic given the inputs; throws
// std::invalid_argument on config inconsistencies and std::logic_error if
// the post-run QPS audit ever failed (it cannot, by construction).
Metrics run(const RunInputs& inputs, const PolicySpec& policy);

struct AbResult {
  std::string arm_a_name;
  std::string arm_b_name;
  Metrics arm_a;
  Metrics arm_b;

  std::string to_csv() const;  // both arms' day rows
  // day,bookings_a,bookings_b,delta_bookings,hit_rate_a,hit_rate_b,delta_hit_rate
  std::string deltas_csv() const;
};

// Splits users 50/50 by stable hash of user_id; each arm gets half the
// supplier budget and replays its half of the same trace against the same
// price book. Throws if the horizon is shorter than one day.
AbResult ab_compare(const RunInputs& inputs, const PolicySpec& arm_a,
                    const PolicySpec& arm_b);

// --- probability estimation (training phase) ----------------------------

struct ServingStats {
  struct ItineraryStat {
    Itinerary itinerary;
    std::uint64_t served = 0;
    std::uint64_t attempts = 0;
    CivilDate first_seen;
  };

  std::vector<ItineraryStat> items;  // insertion (first-seen) order
  std::vector<SearchObservation> observations;  // reusable for gap samples
  std::unordered_map<ClusterKey, double, ClusterKeyHash> cluster_attempt_rate;
  double global_attempt_rate = 0.0;
  std::uint64_t total_served = 0;
  std::uint64_t total_attempts = 0;
};

// Oracle-serving pass over a training trace: every search is served, booking
// attempts are rolled with the ground-truth propensity (same roll stream the
// simulator uses).
ServingStats collect_serving_stats(
    SearchStream& training,
    const std::function<double(const Itinerary&)>& propensity,
    std::uint64_t seed, CivilDate start_date);

// Smoothed per-itinerary estimates: p_b shrunk toward the cluster mean with
// `shrinkage_weight` pseudo-searches; p_a from the cluster's duration
// samples at its assigned TTL.
ValueTable make_value_table(const ServingStats& stats, const TtlModel& model,
                            SimTime training_horizon,
                            double shrinkage_weight = 10.0);

struct EstimateResult {
  ServingStats stats;
  TtlModel model;
  ValueTable table;
};

// Full training pipeline: serving stats -> TTL model (gaps from the trace,
// durations from the fetch log, cluster attempt rates wired in) -> value
// table.
EstimateResult estimate_probabilities(
    SearchStream& training, std::span<const FetchRecord> fetch_log,
    const std::function<double(const Itinerary&)>& propensity,
    CivilDate start_date, SimTime training_horizon, std::uint64_t seed,
    const TtlModelOptions& ttl_options = {}, double shrinkage_weight = 10.0);

}  // namespace pricesim
