#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pricesim/core.hpp"

namespace pricesim {

// Leads beyond this collapse into one bucket, bounding cluster cardinality
// at (cap + 1) * 2.
inline constexpr int kLeadDayCap = 365;
inline constexpr SimTime kMinTtlSeconds = 900;
inline constexpr SimTime kMaxTtlSeconds = 86400;
inline constexpr SimTime kTtlGridStep = 900;

// One record of the historical supplier fetch log.
struct FetchRecord {
  SimTime timestamp = 0;
  Itinerary itinerary;
  std::int64_t price_minor = 0;
};

struct DurationSample {
  Itinerary itinerary;
  SimTime duration = 0;
  SimTime observed_at = 0;  // start of the interval the sample measures
  bool available = true;    // the price that lasted was nonzero
  // True for "price held at least this long" samples emitted for the last
  // observation of an itinerary (only when the study flag asks for them).
  bool censored = false;
};

struct ClusterKey {
  int checkin_lead = 0;
  bool available = true;

  friend bool operator==(const ClusterKey&, const ClusterKey&) = default;
  friend bool operator<(const ClusterKey& a, const ClusterKey& b) {
    if (a.checkin_lead != b.checkin_lead)
      return a.checkin_lead < b.checkin_lead;
    return a.available < b.available;
  }
};

struct ClusterKeyHash {
  std::size_t operator()(const ClusterKey& k) const {
    return static_cast<std::size_t>(k.checkin_lead) * 2 +
           (k.available ? 1 : 0);
  }
};

// Throws std::invalid_argument when checkin precedes the search date.
// Leads beyond kLeadDayCap clamp to it.
ClusterKey cluster_for(const Itinerary& it, CivilDate search_date,
                       bool available);

// Serving-time variant: a checkin that slipped into the past clamps to lead
// 0 instead of throwing (live traffic may race the date boundary).
ClusterKey cluster_for_clamped(const Itinerary& it, CivilDate search_date,
                               bool available);

// Every observed price change yields one sample: the time from the first
// fetch that saw the outgoing price to the fetch that saw it replaced
// (confirming fetches extend the run; a price's first observation alone
// yields nothing). With emit_censored, the trailing run of each itinerary
// adds a censored "held at least this long" sample.
// Throws std::invalid_argument if the log is not time-sorted per itinerary.
std::vector<DurationSample> extract_durations(
    std::span<const FetchRecord> fetch_log, bool emit_censored = false);

// Empirical CDF over a sample multiset; at(x) = fraction of samples <= x.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples);
  double at(double x) const;
  std::size_t sample_count() const { return sorted_.size(); }
  double max_sample() const { return sorted_.back(); }

 private:
  std::vector<double> sorted_;
};

// hit(TTL) = fraction of same-itinerary search gaps <= TTL.
// Throws std::invalid_argument on empty samples.
EmpiricalCdf miss_ratio_curve(std::span<const SimTime> gap_samples);

// (sum of min(1, d_i / ttl)) / n. Throws on empty samples or ttl <= 0.
double accuracy_estimate(std::span<const SimTime> duration_samples,
                         SimTime ttl);

struct Cluster {
  ClusterKey key;
  std::vector<SimTime> duration_samples;
  std::vector<SimTime> gap_samples;
  double p_b_mean = 1.0;
  SimTime assigned_ttl = 0;  // output of assignment
};

// 900 s .. 86400 s in 900 s steps.
std::vector<SimTime> default_ttl_grid();

// argmax over the grid of hit(ttl) * p_b_mean * accuracy(ttl); ties go to
// the smaller TTL. Throws on empty samples or grid.
SimTime assign_ttl(const Cluster& cluster, double p_b_mean,
                   std::span<const SimTime> ttl_grid);

// Dense (lead, available) -> TTL lookup with sample counts retained for
// reporting.
class TtlTable {
 public:
  struct Row {
    ClusterKey key;
    SimTime ttl_seconds = 0;
    std::size_t n_duration_samples = 0;
    std::size_t n_gap_samples = 0;
  };

  TtlTable() = default;
  explicit TtlTable(std::vector<Row> rows);

  // Resolved TTL for the key; keys never observed fall back to the nearest
  // lead with the same availability, then any availability, then the
  // default TTL. Negative leads clamp to 0, large leads to the cap.
  SimTime lookup(int checkin_lead, bool available) const;
  SimTime lookup(const ClusterKey& k) const {
    return lookup(k.checkin_lead, k.available);
  }

  const std::vector<Row>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  SimTime default_ttl() const { return default_ttl_; }
  void set_default_ttl(SimTime ttl) { default_ttl_ = ttl; }

  // checkin_lead,available,ttl_seconds,n_duration_samples,n_gap_samples
  std::string to_csv() const;
  static TtlTable from_csv_file(const std::string& path);

 private:
  std::vector<Row> rows_;  // sorted by key
  SimTime default_ttl_ = kMinTtlSeconds;
};

struct TtlModelOptions {
  std::vector<SimTime> ttl_grid = default_ttl_grid();
  std::size_t min_duration_samples = 30;
  std::size_t min_gap_samples = 1;
  bool emit_censored = false;
  SimTime fallback_ttl = kMinTtlSeconds;
};

// Full pipeline output: per-cluster samples plus the assignment table.
struct TtlModel {
  std::vector<Cluster> clusters;  // sorted by key; only observed clusters
  TtlTable table;

  const Cluster* find_cluster(const ClusterKey& k) const;
};

// A search event reduced to what gap extraction needs.
struct SearchObservation {
  SimTime timestamp = 0;
  Itinerary itinerary;
};

// Builds duration clusters from the fetch log and gap clusters from the
// search history, assigns TTLs on the grid, and resolves sparse clusters by
// inheriting the nearest adequately-sampled lead.
// `cluster_p_b`: optional empirical booking-attempt rate per cluster
// (missing clusters fall back to the global mean / 1.0).
TtlModel build_ttl_model(
    std::span<const FetchRecord> fetch_log,
    std::span<const SearchObservation> searches, CivilDate trace_start,
    const TtlModelOptions& options = {},
    const std::unordered_map<ClusterKey, double, ClusterKeyHash>* cluster_p_b =
        nullptr);

std::vector<FetchRecord> load_fetch_log(const std::string& path);

}  // namespace pricesim
