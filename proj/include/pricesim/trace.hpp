#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pricesim/core.hpp"
#include "pricesim/rng.hpp"
#include "pricesim/smartttl.hpp"  // FetchRecord

namespace pricesim {

// Parametric scalar distribution used for gaps, durations, leads, prices.
struct DistSpec {
  enum class Kind {
    kConstant,
    kUniform,      // [a, b)
    kExponential,  // mean a
    kLognormal,    // log-space mean a, sigma b
    kEmpirical,    // weighted histogram of values
    kMixture,      // weighted components
  };

  Kind kind = Kind::kConstant;
  double a = 0.0;
  double b = 0.0;
  std::vector<std::pair<double, double>> histogram;  // (value, weight)
  std::vector<double> mixture_weights;
  std::vector<DistSpec> mixture_components;

  static DistSpec constant(double v);
  static DistSpec uniform(double lo, double hi);
  static DistSpec exponential(double mean);
  static DistSpec lognormal(double log_mean, double log_sigma);
  static DistSpec empirical(std::vector<std::pair<double, double>> hist);
  static DistSpec mixture(std::vector<double> weights,
                          std::vector<DistSpec> components);

  void validate() const;  // throws std::invalid_argument
  double sample(Rng& rng) const;
  double mean() const;
};

// Hourly rate multipliers, piecewise-linear in between, wrapping midnight.
struct DiurnalProfile {
  std::vector<double> hourly = std::vector<double>(24, 1.0);

  void validate() const;
  double rate_at(double second_of_day) const;
  double max_rate() const;
};

struct WorkloadConfig {
  int n_hotels = 50;
  int variants_per_hotel = 2;  // distinct criteria per hotel in the pool
  int n_users = 500;
  SimTime horizon = kSecondsPerDay;
  double popularity_skew = 1.0;  // Zipf exponent over the itinerary pool
  double base_rate_per_sec = 0.5;  // fresh-session arrivals per DC at multiplier 1
  DistSpec gap_time_distribution = DistSpec::exponential(3600);
  DistSpec checkin_lead_distribution;  // days; default uniform 3..60
  DistSpec stay_nights_distribution = DistSpec::constant(1);
  double repeat_probability = 0.6;  // chance a session searches again later
  std::vector<DiurnalProfile> dc_traffic_profiles = {DiurnalProfile{}};

  // kSessions: Poisson session starts shaped by the diurnal profiles, each
  // session re-searching its itinerary with gap_time gaps. kRenewal: one
  // standing renewal process per pool itinerary — consecutive-search gaps
  // are then exactly i.i.d. gap_time draws.
  enum class ArrivalModel { kSessions, kRenewal };
  ArrivalModel arrival_model = ArrivalModel::kSessions;

  CivilDate start_date = CivilDate(20454);  // 2026-01-01
  double booking_propensity_mean = 0.08;
  double booking_propensity_spread = 0.75;  // relative half-width
  std::uint64_t seed = 1;
  // Salts the event stream only; the itinerary pool and propensities stay
  // tied to `seed`, so training and evaluation traces share one universe.
  std::uint64_t stream_salt = 0;

  void validate() const;
};

WorkloadConfig default_workload_config();

// The universe of itineraries a workload draws from, with Zipf weights.
struct ItineraryPool {
  std::vector<Itinerary> items;
  std::vector<double> cumulative_weight;  // for popularity sampling

  std::size_t pick(double unit) const;  // unit in [0,1) -> index
};

ItineraryPool build_itinerary_pool(const WorkloadConfig& config);

// Ground-truth booking propensity, a pure hash of (seed, itinerary).
double booking_propensity(const WorkloadConfig& config, const Itinerary& it);

struct TraceEvent {
  UserSearch search;
  int dc_id = 0;
};

// Pull-based event source; events arrive in nondecreasing timestamp order.
class SearchStream {
 public:
  virtual ~SearchStream() = default;
  virtual std::optional<TraceEvent> next() = 0;
};

using SearchStreamFactory = std::function<std::unique_ptr<SearchStream>()>;

std::unique_ptr<SearchStream> generate_searches(const WorkloadConfig& config);

class VectorSearchStream : public SearchStream {
 public:
  explicit VectorSearchStream(std::vector<TraceEvent> events);
  std::optional<TraceEvent> next() override;

 private:
  std::vector<TraceEvent> events_;
  std::size_t pos_ = 0;
};

// Applies `keep` to each inner event.
class FilteredSearchStream : public SearchStream {
 public:
  FilteredSearchStream(std::unique_ptr<SearchStream> inner,
                       std::function<bool(const TraceEvent&)> keep);
  std::optional<TraceEvent> next() override;

 private:
  std::unique_ptr<SearchStream> inner_;
  std::function<bool(const TraceEvent&)> keep_;
};

// CSV trace file (gzip by extension). Errors name the offending line; out-
// of-order timestamps are rejected.
std::unique_ptr<SearchStream> ingest_trace(const std::string& path);

// timestamp_s,user_id,hotel_id,checkin,checkout,adults,children,rooms,dc_id
std::string trace_to_csv(SearchStream& stream);

// --- ground-truth price process ----------------------------------------

struct LeadBand {
  int lead_min = 0;
  int lead_max = 365;
  DistSpec duration;
};

struct PriceProcessConfig {
  DistSpec default_duration = DistSpec::exponential(7200);
  std::vector<LeadBand> lead_bands;  // first match on trace-start lead wins
  DistSpec price_level = DistSpec::uniform(8000, 40000);  // minor units
  double sold_out_probability = 0.0;  // a segment's price is 0 (sold out)
  CivilDate anchor_date = CivilDate(20454);  // for lead-band selection

  void validate() const;
  const DistSpec& duration_for_lead(int lead_days) const;
};

// Piecewise-constant ground truth for one itinerary.
class PriceTimeline {
 public:
  PriceTimeline(std::vector<std::pair<SimTime, std::int64_t>> segments,
                SimTime horizon);
  std::int64_t price_at(SimTime t) const;
  std::size_t segment_count() const { return segments_.size(); }
  const std::vector<std::pair<SimTime, std::int64_t>>& segments() const {
    return segments_;
  }

 private:
  std::vector<std::pair<SimTime, std::int64_t>> segments_;  // (start, price)
  SimTime horizon_;
};

PriceTimeline generate_price_timeline(const PriceProcessConfig& config,
                                      const Itinerary& it, SimTime horizon,
                                      std::uint64_t seed);

// Lazily materialized timelines for a whole run; one shared ground truth
// serves every policy arm.
class PriceBook {
 public:
  PriceBook(PriceProcessConfig config, SimTime horizon, std::uint64_t seed);
  std::int64_t price_at(const Itinerary& it, SimTime t) const;

 private:
  PriceProcessConfig config_;
  SimTime horizon_;
  std::uint64_t seed_;
  mutable std::unordered_map<Itinerary, PriceTimeline, ItineraryHash> cache_;
};

// Emulates a historical polling pipeline: fetches every pool itinerary at a
// fixed interval (per-itinerary phase offset) against the price book and
// returns the time-sorted log. Used to bootstrap TTL estimation.
std::vector<FetchRecord> synthesize_fetch_log(const ItineraryPool& pool,
                                              const PriceBook& prices,
                                              SimTime horizon,
                                              SimTime poll_interval,
                                              std::uint64_t seed);

// timestamp_s,hotel_id,checkin,checkout,adults,children,rooms,price_minor
std::string fetch_log_to_csv(std::span<const FetchRecord> log);

}  // namespace pricesim
