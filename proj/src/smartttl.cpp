#include "pricesim/smartttl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pricesim/csv.hpp"

namespace pricesim {

namespace {

int lead_days(const Itinerary& it, CivilDate search_date) {
  return it.criteria.checkin - search_date;
}

}  // namespace

ClusterKey cluster_for(const Itinerary& it, CivilDate search_date,
                       bool available) {
  int lead = lead_days(it, search_date);
  if (lead < 0)
    throw std::invalid_argument("checkin before search date (lead " +
                                std::to_string(lead) + ")");
  return ClusterKey{std::min(lead, kLeadDayCap), available};
}

ClusterKey cluster_for_clamped(const Itinerary& it, CivilDate search_date,
                               bool available) {
  int lead = std::clamp(lead_days(it, search_date), 0, kLeadDayCap);
  return ClusterKey{lead, available};
}

std::vector<DurationSample> extract_durations(
    std::span<const FetchRecord> fetch_log, bool emit_censored) {
  struct Last {
    SimTime timestamp;   // most recent fetch
    std::int64_t price;  // price it reported
    SimTime run_start;   // when that price was first observed
  };
  std::unordered_map<Itinerary, Last, ItineraryHash> last;
  std::vector<DurationSample> out;
  for (const auto& rec : fetch_log) {
    auto found = last.find(rec.itinerary);
    if (found == last.end()) {
      last.emplace(rec.itinerary,
                   Last{rec.timestamp, rec.price_minor, rec.timestamp});
      continue;
    }
    if (rec.timestamp < found->second.timestamp)
      throw std::invalid_argument(
          "fetch log not time-sorted within itinerary " +
          rec.itinerary.hotel_id);
    if (rec.price_minor != found->second.price) {
      // The outgoing price held from its first observation until this
      // change was noticed, confirming fetches in between included.
      DurationSample s;
      s.itinerary = rec.itinerary;
      s.duration = rec.timestamp - found->second.run_start;
      s.observed_at = found->second.run_start;
      s.available = found->second.price > 0;
      out.push_back(std::move(s));
      found->second = Last{rec.timestamp, rec.price_minor, rec.timestamp};
    } else {
      // Same price confirmed: the run extends, its start stays put.
      found->second.timestamp = rec.timestamp;
    }
  }
  if (emit_censored) {
    // The final price run of each itinerary held for at least
    // (last confirming fetch - run start). Keyed map iteration order is not
    // deterministic, so emit in order of each itinerary's last appearance.
    std::size_t first_censored = out.size();
    std::unordered_map<Itinerary, bool, ItineraryHash> done;
    for (auto rit = fetch_log.rbegin(); rit != fetch_log.rend(); ++rit) {
      if (!done.emplace(rit->itinerary, true).second) continue;
      const Last& l = last.at(rit->itinerary);
      if (l.timestamp <= l.run_start) continue;  // never confirmed
      DurationSample s;
      s.itinerary = rit->itinerary;
      s.duration = l.timestamp - l.run_start;
      s.observed_at = l.run_start;
      s.available = l.price > 0;
      s.censored = true;
      out.push_back(std::move(s));
    }
    std::reverse(out.begin() + static_cast<std::ptrdiff_t>(first_censored),
                 out.end());
  }
  return out;
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples)
    : sorted_(std::move(samples)) {
  if (sorted_.empty())
    throw std::invalid_argument("empirical CDF needs at least one sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::at(double x) const {
  auto above = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(above - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

EmpiricalCdf miss_ratio_curve(std::span<const SimTime> gap_samples) {
  if (gap_samples.empty())
    throw std::invalid_argument("miss_ratio_curve needs gap samples");
  std::vector<double> vals;
  vals.reserve(gap_samples.size());
  for (SimTime g : gap_samples) vals.push_back(static_cast<double>(g));
  return EmpiricalCdf(std::move(vals));
}

double accuracy_estimate(std::span<const SimTime> duration_samples,
                         SimTime ttl) {
  if (ttl <= 0) throw std::invalid_argument("ttl must be > 0");
  if (duration_samples.empty())
    throw std::invalid_argument("accuracy_estimate needs duration samples");
  double total = 0.0;
  for (SimTime d : duration_samples)
    total += std::min(1.0, static_cast<double>(d) / static_cast<double>(ttl));
  return total / static_cast<double>(duration_samples.size());
}

std::vector<SimTime> default_ttl_grid() {
  std::vector<SimTime> grid;
  for (SimTime t = kMinTtlSeconds; t <= kMaxTtlSeconds; t += kTtlGridStep)
    grid.push_back(t);
  return grid;
}

SimTime assign_ttl(const Cluster& cluster, double p_b_mean,
                   std::span<const SimTime> ttl_grid) {
  if (ttl_grid.empty()) throw std::invalid_argument("empty ttl grid");
  if (cluster.duration_samples.empty() || cluster.gap_samples.empty())
    throw std::invalid_argument("assign_ttl needs duration and gap samples");
  EmpiricalCdf hit = miss_ratio_curve(cluster.gap_samples);
  SimTime best_ttl = 0;
  double best_score = -1.0;
  for (SimTime ttl : ttl_grid) {
    double score = hit.at(static_cast<double>(ttl)) * p_b_mean *
                   accuracy_estimate(cluster.duration_samples, ttl);
    if (score > best_score ||
        (score == best_score && (best_ttl == 0 || ttl < best_ttl))) {
      best_score = score;
      best_ttl = ttl;
    }
  }
  return best_ttl;
}

TtlTable::TtlTable(std::vector<Row> rows) : rows_(std::move(rows)) {
  std::sort(rows_.begin(), rows_.end(),
            [](const Row& a, const Row& b) { return a.key < b.key; });
  for (const Row& r : rows_) {
    if (r.ttl_seconds <= 0)
      throw std::invalid_argument("ttl table row with nonpositive ttl");
  }
}

SimTime TtlTable::lookup(int checkin_lead, bool available) const {
  if (rows_.empty()) return default_ttl_;
  int lead = std::clamp(checkin_lead, 0, kLeadDayCap);
  const Row* best = nullptr;
  int best_dist = 0;
  for (const Row& r : rows_) {
    if (r.key.available != available) continue;
    int dist = std::abs(r.key.checkin_lead - lead);
    if (!best || dist < best_dist ||
        (dist == best_dist && r.key.checkin_lead < best->key.checkin_lead)) {
      best = &r;
      best_dist = dist;
    }
  }
  if (!best) {
    for (const Row& r : rows_) {
      int dist = std::abs(r.key.checkin_lead - lead);
      if (!best || dist < best_dist ||
          (dist == best_dist && r.key.checkin_lead < best->key.checkin_lead)) {
        best = &r;
        best_dist = dist;
      }
    }
  }
  return best->ttl_seconds;
}

std::string TtlTable::to_csv() const {
  std::string out =
      "checkin_lead,available,ttl_seconds,n_duration_samples,n_gap_samples\n";
  char buf[128];
  for (const Row& r : rows_) {
    std::snprintf(buf, sizeof buf, "%d,%d,%lld,%zu,%zu\n", r.key.checkin_lead,
                  r.key.available ? 1 : 0,
                  static_cast<long long>(r.ttl_seconds), r.n_duration_samples,
                  r.n_gap_samples);
    out += buf;
  }
  return out;
}

TtlTable TtlTable::from_csv_file(const std::string& path) {
  std::vector<Row> rows;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (line.empty()) return;
    if (line_no == 1) {
      if (line.rfind("checkin_lead,", 0) != 0)
        throw std::runtime_error(path + ": unexpected ttl table header");
      return;
    }
    auto fields = split_csv(line);
    if (fields.size() != 5)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 5 fields");
    Row r;
    r.key.checkin_lead =
        static_cast<int>(parse_i64(fields[0], "checkin_lead"));
    r.key.available = parse_i64(fields[1], "available") != 0;
    r.ttl_seconds = parse_i64(fields[2], "ttl_seconds");
    r.n_duration_samples =
        static_cast<std::size_t>(parse_i64(fields[3], "n_duration_samples"));
    r.n_gap_samples =
        static_cast<std::size_t>(parse_i64(fields[4], "n_gap_samples"));
    rows.push_back(std::move(r));
  });
  return TtlTable(std::move(rows));
}

const Cluster* TtlModel::find_cluster(const ClusterKey& k) const {
  auto it = std::lower_bound(
      clusters.begin(), clusters.end(), k,
      [](const Cluster& c, const ClusterKey& key) { return c.key < key; });
  if (it == clusters.end() || !(it->key == k)) return nullptr;
  return &*it;
}

TtlModel build_ttl_model(
    std::span<const FetchRecord> fetch_log,
    std::span<const SearchObservation> searches, CivilDate trace_start,
    const TtlModelOptions& options,
    const std::unordered_map<ClusterKey, double, ClusterKeyHash>*
        cluster_p_b) {
  std::unordered_map<ClusterKey, Cluster, ClusterKeyHash> by_key;
  auto bucket = [&](const ClusterKey& k) -> Cluster& {
    auto [it, inserted] = by_key.try_emplace(k);
    if (inserted) it->second.key = k;
    return it->second;
  };

  for (const DurationSample& s :
       extract_durations(fetch_log, options.emit_censored)) {
    CivilDate seen = date_at(trace_start, s.observed_at);
    if (s.itinerary.criteria.checkin < seen) continue;  // stale log rows
    bucket(cluster_for(s.itinerary, seen, s.available))
        .duration_samples.push_back(s.duration);
  }

  // Search history carries no availability signal; gaps land in the
  // available bucket, which is also what serving-time lookups ask for.
  {
    struct LastSeen {
      SimTime timestamp;
    };
    std::unordered_map<Itinerary, LastSeen, ItineraryHash> last;
    for (const auto& s : searches) {
      auto found = last.find(s.itinerary);
      if (found != last.end()) {
        if (s.timestamp < found->second.timestamp)
          throw std::invalid_argument("search history not time-sorted");
        CivilDate seen = date_at(trace_start, found->second.timestamp);
        if (seen <= s.itinerary.criteria.checkin) {
          bucket(cluster_for(s.itinerary, seen, true))
              .gap_samples.push_back(s.timestamp - found->second.timestamp);
        }
        found->second.timestamp = s.timestamp;
      } else {
        last.emplace(s.itinerary, LastSeen{s.timestamp});
      }
    }
  }

  TtlModel model;
  model.clusters.reserve(by_key.size());
  for (auto& [key, cluster] : by_key) model.clusters.push_back(std::move(cluster));
  std::sort(model.clusters.begin(), model.clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.key < b.key; });

  double global_p_b = 1.0;
  if (cluster_p_b && !cluster_p_b->empty()) {
    double sum = 0.0;
    for (const auto& [k, v] : *cluster_p_b) sum += v;
    global_p_b = sum / static_cast<double>(cluster_p_b->size());
  }

  // First pass: clusters with enough of both sample kinds get their own
  // assignment.
  for (Cluster& c : model.clusters) {
    if (cluster_p_b) {
      auto found = cluster_p_b->find(c.key);
      c.p_b_mean = found != cluster_p_b->end() ? found->second : global_p_b;
    }
    if (c.duration_samples.size() >= options.min_duration_samples &&
        c.gap_samples.size() >= options.min_gap_samples) {
      c.assigned_ttl = assign_ttl(c, c.p_b_mean, options.ttl_grid);
    }
  }

  // Second pass: sparse clusters inherit the nearest assigned lead, same
  // availability preferred; ties toward the smaller lead.
  for (Cluster& c : model.clusters) {
    if (c.assigned_ttl > 0) continue;
    const Cluster* donor = nullptr;
    int donor_dist = 0;
    for (int pass = 0; pass < 2 && !donor; ++pass) {
      for (const Cluster& cand : model.clusters) {
        if (cand.assigned_ttl <= 0) continue;
        if (pass == 0 && cand.key.available != c.key.available) continue;
        int dist = std::abs(cand.key.checkin_lead - c.key.checkin_lead);
        if (!donor || dist < donor_dist ||
            (dist == donor_dist &&
             cand.key.checkin_lead < donor->key.checkin_lead)) {
          donor = &cand;
          donor_dist = dist;
        }
      }
    }
    c.assigned_ttl = donor ? donor->assigned_ttl : options.fallback_ttl;
  }

  std::vector<TtlTable::Row> rows;
  rows.reserve(model.clusters.size());
  for (const Cluster& c : model.clusters) {
    rows.push_back(TtlTable::Row{c.key, c.assigned_ttl,
                                 c.duration_samples.size(),
                                 c.gap_samples.size()});
  }
  model.table = TtlTable(std::move(rows));
  model.table.set_default_ttl(options.fallback_ttl);
  return model;
}

std::vector<FetchRecord> load_fetch_log(const std::string& path) {
  std::vector<FetchRecord> log;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (line.empty()) return;
    if (line_no == 1) {
      if (line.rfind("timestamp_s,", 0) != 0)
        throw std::runtime_error(path + ": unexpected fetch log header");
      return;
    }
    auto f = split_csv(line);
    if (f.size() != 8)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 8 fields");
    FetchRecord rec;
    rec.timestamp = parse_i64(f[0], "timestamp_s");
    rec.itinerary.hotel_id = f[1];
    auto checkin = parse_date(f[2]);
    auto checkout = parse_date(f[3]);
    if (!checkin || !checkout)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad date");
    rec.itinerary.criteria.checkin = *checkin;
    rec.itinerary.criteria.checkout = *checkout;
    rec.itinerary.criteria.adults = static_cast<int>(parse_i64(f[4], "adults"));
    rec.itinerary.criteria.children =
        static_cast<int>(parse_i64(f[5], "children"));
    rec.itinerary.criteria.rooms = static_cast<int>(parse_i64(f[6], "rooms"));
    rec.price_minor = parse_i64(f[7], "price_minor");
    log.push_back(std::move(rec));
  });
  std::stable_sort(log.begin(), log.end(),
                   [](const FetchRecord& a, const FetchRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return log;
}

}  // namespace pricesim
