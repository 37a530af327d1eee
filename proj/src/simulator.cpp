#include "pricesim/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <unordered_set>

#include "pricesim/csv.hpp"

namespace pricesim {

namespace {

constexpr std::uint64_t kBookingTag = fnv1a64("booking");

// Counter-based booking roll: a pure function of (seed, user, itinerary,
// second, occurrence#), so identical traffic rolls identically in every arm
// and in the training estimator.
double booking_roll(std::uint64_t seed, const std::string& user,
                    const Itinerary& it, SimTime t, std::uint32_t occurrence) {
  std::uint64_t a = mix64(seed ^ kBookingTag, fnv1a64(user), hash_itinerary(it));
  return unit_from_bits(mix64(a, static_cast<std::uint64_t>(t), occurrence));
}

struct OccurrenceCounter {
  std::unordered_map<std::uint64_t, std::uint32_t> counts;

  std::uint32_t next(const std::string& user, const Itinerary& it, SimTime t) {
    std::uint64_t key =
        mix64(fnv1a64(user), hash_itinerary(it), static_cast<std::uint64_t>(t));
    return counts[key]++;
  }
};

}  // namespace

PolicySpec PolicySpec::passive_fixed_ttl(SimTime ttl) {
  PolicySpec p;
  p.variant = Variant::kPassiveFixedTtl;
  p.fixed_ttl = ttl;
  return p;
}

PolicySpec PolicySpec::passive_smart_ttl() {
  PolicySpec p;
  p.variant = Variant::kPassiveSmartTtl;
  return p;
}

PolicySpec PolicySpec::aggressive_lru(std::size_t capacity) {
  PolicySpec p;
  p.variant = Variant::kAggressiveLru;
  p.lru_capacity = capacity;
  return p;
}

PolicySpec PolicySpec::aggressive_smart_scheduler() {
  PolicySpec p;
  p.variant = Variant::kAggressiveSmartScheduler;
  return p;
}

std::string PolicySpec::name() const {
  switch (variant) {
    case Variant::kPassiveFixedTtl:
      return "passive_fixed_ttl_" + std::to_string(fixed_ttl);
    case Variant::kPassiveSmartTtl:
      return "passive_smart_ttl";
    case Variant::kAggressiveLru:
      return "aggressive_lru";
    case Variant::kAggressiveSmartScheduler:
      return "aggressive_smart_scheduler";
  }
  return "unknown";
}

void PolicySpec::validate() const {
  if (fixed_ttl <= 0) throw std::invalid_argument("fixed_ttl must be > 0");
  if (variant == Variant::kAggressiveLru && lru_capacity == 0)
    throw std::invalid_argument("lru_capacity must be > 0");
  if (!(reserve_passive_fraction >= 0.0 && reserve_passive_fraction <= 1.0))
    throw std::invalid_argument("reserve_passive_fraction must be in [0, 1]");
}

DayMetrics& DayMetrics::operator+=(const DayMetrics& o) {
  searches += o.searches;
  hits += o.hits;
  misses += o.misses;
  fetches_sent += o.fetches_sent;
  fetches_rejected += o.fetches_rejected;
  booking_attempts += o.booking_attempts;
  bookings += o.bookings;
  return *this;
}

std::string Metrics::csv_header() {
  return "day,arm,searches,hits,hit_rate,fetches,rejected,attempts,bookings,"
         "accuracy\n";
}

void Metrics::append_csv_rows(const std::string& arm, std::string& out) const {
  char buf[256];
  for (std::size_t d = 0; d < days.size(); ++d) {
    const DayMetrics& m = days[d];
    std::snprintf(buf, sizeof buf,
                  "%zu,%s,%llu,%llu,%.6f,%llu,%llu,%llu,%llu,%.6f\n", d,
                  arm.c_str(), static_cast<unsigned long long>(m.searches),
                  static_cast<unsigned long long>(m.hits), m.cache_hit_rate(),
                  static_cast<unsigned long long>(m.fetches_sent),
                  static_cast<unsigned long long>(m.fetches_rejected),
                  static_cast<unsigned long long>(m.booking_attempts),
                  static_cast<unsigned long long>(m.bookings),
                  m.accuracy_at_booking());
    out += buf;
  }
}

std::string Metrics::to_csv(const std::string& arm) const {
  std::string out = csv_header();
  append_csv_rows(arm, out);
  return out;
}

std::string ValueTable::to_csv() const {
  std::string out =
      "hotel_id,checkin,checkout,adults,children,rooms,p_b,p_a,"
      "daily_searches\n";
  char buf[256];
  for (const Row& r : rows) {
    const auto& c = r.itinerary.criteria;
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%d,%d,%d,%.6f,%.6f,%.6f\n",
                  r.itinerary.hotel_id.c_str(),
                  format_date(c.checkin).c_str(),
                  format_date(c.checkout).c_str(), c.adults, c.children,
                  c.rooms, r.p_b, r.p_a, r.daily_searches);
    out += buf;
  }
  return out;
}

ValueTable ValueTable::from_csv_file(const std::string& path) {
  ValueTable table;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (line.empty()) return;
    if (line_no == 1) {
      if (line.rfind("hotel_id,", 0) != 0)
        throw std::runtime_error(path + ": unexpected value table header");
      return;
    }
    auto f = split_csv(line);
    if (f.size() != 9)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 9 fields");
    Row r;
    r.itinerary.hotel_id = f[0];
    auto checkin = parse_date(f[1]);
    auto checkout = parse_date(f[2]);
    if (!checkin || !checkout)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad date");
    r.itinerary.criteria.checkin = *checkin;
    r.itinerary.criteria.checkout = *checkout;
    r.itinerary.criteria.adults = static_cast<int>(parse_i64(f[3], "adults"));
    r.itinerary.criteria.children =
        static_cast<int>(parse_i64(f[4], "children"));
    r.itinerary.criteria.rooms = static_cast<int>(parse_i64(f[5], "rooms"));
    r.p_b = parse_f64(f[6], "p_b");
    r.p_a = parse_f64(f[7], "p_a");
    r.daily_searches = parse_f64(f[8], "daily_searches");
    table.rows.push_back(std::move(r));
  });
  return table;
}

namespace {

class Runner {
 public:
  Runner(const RunInputs& in, const PolicySpec& policy)
      : in_(in),
        policy_(policy),
        supplier_(in.supplier,
                  [this](const Itinerary& it, SimTime t) {
                    return in_.prices->price_at(it, t);
                  }) {
    policy_.validate();
    if (!in_.prices) throw std::invalid_argument("run needs a price book");
    if (!in_.trace_factory)
      throw std::invalid_argument("run needs a trace factory");
    if (!in_.booking_propensity)
      throw std::invalid_argument("run needs a booking propensity");
    if (in_.horizon <= 0) throw std::invalid_argument("horizon must be > 0");
    if (policy_.variant == PolicySpec::Variant::kPassiveSmartTtl &&
        !in_.ttl_table)
      throw std::invalid_argument("smart-ttl policy needs a ttl table");
    if (policy_.variant == PolicySpec::Variant::kAggressiveSmartScheduler) {
      if (!in_.value_table)
        throw std::invalid_argument("scheduler policy needs a value table");
      if (!in_.ttl_table)
        throw std::invalid_argument("scheduler policy needs a ttl table");
    }
    if (policy_.variant == PolicySpec::Variant::kAggressiveLru)
      lru_.emplace(policy_.lru_capacity);
    mu_effective_ = supplier_.effective_qps();
    mu_plan_ = static_cast<int>(
        static_cast<double>(mu_effective_) *
        (1.0 - policy_.reserve_passive_fraction));
    auto n_days =
        static_cast<std::size_t>((in_.horizon + kSecondsPerDay - 1) /
                                 kSecondsPerDay);
    metrics_.days.resize(n_days);
  }

  Metrics finish() {
    auto stream = in_.trace_factory();
    auto pending = stream->next();
    const bool scheduled =
        policy_.variant == PolicySpec::Variant::kAggressiveSmartScheduler;

    for (SimTime t = 0; t < in_.horizon; ++t) {
      if (scheduled && t % kSecondsPerDay == 0) rebuild_plan(t);
      if (scheduled) dispatch_planned(t);
      while (pending && pending->search.timestamp <= t) {
        if (pending->search.timestamp < t)
          throw std::runtime_error("trace timestamps out of order");
        process_search(*pending, t);
        pending = stream->next();
      }
      // LRU refresh runs after the second's searches so the leftover budget
      // (mu - passive use) is known.
      if (lru_) dispatch_lru_refresh(t);
    }

    metrics_.utilization = supplier_.report();
    if (metrics_.utilization.max_total_accepted_per_second() >
        static_cast<std::uint32_t>(in_.supplier.qps_limit))
      throw std::logic_error("QPS cap breached");  // unreachable by design
    for (const DayMetrics& d : metrics_.days) metrics_.total += d;
    return std::move(metrics_);
  }

 private:
  DayMetrics& day_of(SimTime t) {
    return metrics_.days[static_cast<std::size_t>(t / kSecondsPerDay)];
  }

  SimTime policy_ttl(const Itinerary& it, SimTime t, bool available) const {
    switch (policy_.variant) {
      case PolicySpec::Variant::kPassiveFixedTtl:
        return policy_.fixed_ttl;
      case PolicySpec::Variant::kPassiveSmartTtl:
        return in_.ttl_table->lookup(
            cluster_for_clamped(it, date_at(in_.start_date, t), available));
      case PolicySpec::Variant::kAggressiveLru:
      case PolicySpec::Variant::kAggressiveSmartScheduler:
        if (policy_.lru_use_smart_ttl && in_.ttl_table)
          return in_.ttl_table->lookup(
              cluster_for_clamped(it, date_at(in_.start_date, t), available));
        return policy_.fixed_ttl;
    }
    return policy_.fixed_ttl;
  }

  void store_quote(PriceQuote q, SimTime ttl, SimTime t) {
    q.ttl = ttl;
    db_.put(q);
    if (lru_) lru_->update_quote(q.itinerary, t, ttl);
  }

  void process_search(const TraceEvent& ev, SimTime t) {
    DayMetrics& day = day_of(t);
    ++day.searches;
    if (seen_.insert(ev.search.itinerary).second)
      ++metrics_.first_occurrence_searches;

    auto quote = db_.get(ev.search.itinerary, t);
    if (quote) {
      ++day.hits;
      if (quote->price_minor !=
          in_.prices->price_at(ev.search.itinerary, quote->fetched_at))
        ++metrics_.served_price_mismatches;
      if (quote->price_minor > 0) {  // sold-out entries take no attempts
        double p_b = in_.booking_propensity(ev.search.itinerary);
        std::uint32_t occ =
            occurrences_.next(ev.search.user_id, ev.search.itinerary, t);
        double u = booking_roll(in_.seed, ev.search.user_id,
                                ev.search.itinerary, t, occ);
        if (u < p_b) {
          ++day.booking_attempts;
          if (quote->price_minor ==
              in_.prices->price_at(ev.search.itinerary, t))
            ++day.bookings;
        }
      }
    } else {
      ++day.misses;
      if (passive_fetch_allowed()) {
        int dc = ev.dc_id % in_.supplier.n_datacentres;
        auto fetched = supplier_.fetch(ev.search.itinerary, dc, t);
        if (fetched) {
          ++day.fetches_sent;
          store_quote(*fetched,
                      policy_ttl(ev.search.itinerary, t,
                                 fetched->price_minor > 0),
                      t);
        } else {
          ++day.fetches_rejected;
        }
      }
    }
    if (lru_) lru_->admit(ev.search.itinerary);
  }

  bool passive_fetch_allowed() const {
    if (policy_.variant == PolicySpec::Variant::kAggressiveSmartScheduler)
      return policy_.reserve_passive_fraction > 0.0;
    return true;
  }

  // Planned fetches fill DC allocations lowest id first.
  void dispatch_batch(const std::vector<const SchedulePlan::Item*>& batch,
                      SimTime t) {
    int dc = 0;
    DayMetrics& day = day_of(t);
    for (const SchedulePlan::Item* item : batch) {
      while (dc + 1 < in_.supplier.n_datacentres &&
             supplier_.remaining_in_dc(dc, t) <= 0)
        ++dc;
      auto fetched = supplier_.fetch(item->itinerary, dc, t);
      if (fetched) {
        ++day.fetches_sent;
        store_quote(*fetched, item->ttl, t);
      } else {
        ++day.fetches_rejected;
      }
    }
  }

  void rebuild_plan(SimTime t) {
    CivilDate today = date_at(in_.start_date, t);
    std::vector<ItineraryPlanEntry> entries;
    entries.reserve(in_.value_table->rows.size());
    for (const ValueTable::Row& row : in_.value_table->rows) {
      int lead = row.itinerary.criteria.checkin - today;
      if (lead < 0) continue;  // stay already started
      double value = row.daily_searches * row.p_b * row.p_a;
      if (value <= 0) continue;
      SimTime ttl = in_.ttl_table->lookup(lead, true);
      entries.push_back(make_plan_entry(row.itinerary, ttl, value));
    }
    std::int64_t budget =
        static_cast<std::int64_t>(mu_plan_) * kSecondsPerDay;
    auto selected = select_top_requests(std::move(entries), budget);
    // Mixed frequency groups can overload single seconds through ceil
    // rounding; shed the least dense tail until the plan fits.
    while (true) {
      try {
        plan_ = build_schedule(selected, std::max(mu_plan_, 1));
        break;
      } catch (const std::runtime_error&) {
        if (selected.empty()) throw;
        selected.pop_back();
      }
    }
  }

  void dispatch_planned(SimTime t) {
    if (plan_.buckets.empty()) return;
    const auto& bucket =
        plan_.buckets[static_cast<std::size_t>(t % kSecondsPerDay)];
    if (bucket.empty()) return;
    std::vector<const SchedulePlan::Item*> batch;
    batch.reserve(bucket.size());
    for (std::uint32_t idx : bucket) batch.push_back(&plan_.items[idx]);
    dispatch_batch(batch, t);
  }

  void dispatch_lru_refresh(SimTime t) {
    int passive_used = static_cast<int>(supplier_.accepted_in_second(t));
    auto itineraries =
        lru_refresh_batch(*lru_, mu_effective_, passive_used, t);
    if (itineraries.empty()) return;
    DayMetrics& day = day_of(t);
    int dc = 0;
    for (const Itinerary& it : itineraries) {
      while (dc + 1 < in_.supplier.n_datacentres &&
             supplier_.remaining_in_dc(dc, t) <= 0)
        ++dc;
      auto fetched = supplier_.fetch(it, dc, t);
      if (fetched) {
        ++day.fetches_sent;
        store_quote(*fetched, policy_ttl(it, t, fetched->price_minor > 0), t);
      } else {
        ++day.fetches_rejected;
      }
    }
  }

  const RunInputs& in_;
  PolicySpec policy_;
  Supplier supplier_;
  PriceDb db_;
  std::optional<LruSearchCache> lru_;
  SchedulePlan plan_;
  Metrics metrics_;
  OccurrenceCounter occurrences_;
  std::unordered_set<Itinerary, ItineraryHash> seen_;
  int mu_effective_ = 0;
  int mu_plan_ = 0;
};

}  // namespace

Metrics run(const RunInputs& inputs, const PolicySpec& policy) {
  Runner runner(inputs, policy);
  return runner.finish();
}

std::string AbResult::to_csv() const {
  std::string out = Metrics::csv_header();
  arm_a.append_csv_rows(arm_a_name, out);
  arm_b.append_csv_rows(arm_b_name, out);
  return out;
}

std::string AbResult::deltas_csv() const {
  std::string out =
      "day,bookings_a,bookings_b,delta_bookings,hit_rate_a,hit_rate_b,"
      "delta_hit_rate\n";
  char buf[192];
  std::size_t n = std::min(arm_a.days.size(), arm_b.days.size());
  for (std::size_t d = 0; d < n; ++d) {
    const DayMetrics& a = arm_a.days[d];
    const DayMetrics& b = arm_b.days[d];
    std::snprintf(buf, sizeof buf, "%zu,%llu,%llu,%lld,%.6f,%.6f,%.6f\n", d,
                  static_cast<unsigned long long>(a.bookings),
                  static_cast<unsigned long long>(b.bookings),
                  static_cast<long long>(b.bookings) -
                      static_cast<long long>(a.bookings),
                  a.cache_hit_rate(), b.cache_hit_rate(),
                  b.cache_hit_rate() - a.cache_hit_rate());
    out += buf;
  }
  return out;
}

AbResult ab_compare(const RunInputs& inputs, const PolicySpec& arm_a,
                    const PolicySpec& arm_b) {
  if (inputs.horizon < kSecondsPerDay)
    throw std::invalid_argument("A/B horizon must cover at least one day");
  if (inputs.supplier.qps_limit < 2)
    throw std::invalid_argument(
        "A/B needs a supplier budget of at least 2 qps to split");

  // Budget split 50/50; both arms floor so the split stays symmetric.
  SupplierConfig half = inputs.supplier;
  half.qps_limit = inputs.supplier.qps_limit / 2;
  auto alloc = inputs.supplier.resolved_allocation();
  half.per_dc_allocation.clear();
  int alloc_sum = 0;
  for (int a : alloc) {
    half.per_dc_allocation.push_back(a / 2);
    alloc_sum += a / 2;
  }
  if (alloc_sum == 0) {
    // Degenerate split (every DC rounded to zero): give DC 0 the arm budget.
    half.per_dc_allocation[0] = half.qps_limit;
  }

  auto arm_inputs = [&](bool arm_is_b) {
    RunInputs r = inputs;
    r.supplier = half;
    SearchStreamFactory base = inputs.trace_factory;
    r.trace_factory = [base, arm_is_b]() -> std::unique_ptr<SearchStream> {
      return std::make_unique<FilteredSearchStream>(
          base(), [arm_is_b](const TraceEvent& e) {
            return ((fnv1a64(e.search.user_id) & 1ull) != 0) == arm_is_b;
          });
    };
    return r;
  };

  AbResult result;
  result.arm_a_name = arm_a.name();
  result.arm_b_name = arm_b.name();
  RunInputs ia = arm_inputs(false);
  RunInputs ib = arm_inputs(true);
  result.arm_a = run(ia, arm_a);
  result.arm_b = run(ib, arm_b);
  return result;
}

ServingStats collect_serving_stats(
    SearchStream& training,
    const std::function<double(const Itinerary&)>& propensity,
    std::uint64_t seed, CivilDate start_date) {
  ServingStats stats;
  std::unordered_map<Itinerary, std::size_t, ItineraryHash> index;
  OccurrenceCounter occurrences;
  struct ClusterAgg {
    std::uint64_t served = 0;
    std::uint64_t attempts = 0;
  };
  std::unordered_map<ClusterKey, ClusterAgg, ClusterKeyHash> clusters;

  while (auto ev = training.next()) {
    const Itinerary& it = ev->search.itinerary;
    SimTime t = ev->search.timestamp;
    auto [slot, inserted] = index.try_emplace(it, stats.items.size());
    if (inserted) {
      ServingStats::ItineraryStat s;
      s.itinerary = it;
      s.first_seen = date_at(start_date, t);
      stats.items.push_back(std::move(s));
    }
    ServingStats::ItineraryStat& item = stats.items[slot->second];
    ++item.served;
    ++stats.total_served;
    stats.observations.push_back(SearchObservation{t, it});

    std::uint32_t occ = occurrences.next(ev->search.user_id, it, t);
    double u = booking_roll(seed, ev->search.user_id, it, t, occ);
    bool attempted = u < propensity(it);
    if (attempted) {
      ++item.attempts;
      ++stats.total_attempts;
    }
    ClusterKey key = cluster_for_clamped(it, item.first_seen, true);
    ClusterAgg& agg = clusters[key];
    ++agg.served;
    if (attempted) ++agg.attempts;
  }

  for (const auto& [key, agg] : clusters) {
    stats.cluster_attempt_rate[key] =
        agg.served == 0 ? 0.0
                        : static_cast<double>(agg.attempts) /
                              static_cast<double>(agg.served);
  }
  stats.global_attempt_rate =
      stats.total_served == 0 ? 0.0
                              : static_cast<double>(stats.total_attempts) /
                                    static_cast<double>(stats.total_served);
  return stats;
}

ValueTable make_value_table(const ServingStats& stats, const TtlModel& model,
                            SimTime training_horizon,
                            double shrinkage_weight) {
  if (training_horizon <= 0)
    throw std::invalid_argument("training_horizon must be > 0");
  double training_days = static_cast<double>(training_horizon) /
                         static_cast<double>(kSecondsPerDay);

  // Pooled fallback for clusters that never observed a price change.
  std::vector<SimTime> pooled_durations;
  for (const Cluster& c : model.clusters) {
    pooled_durations.insert(pooled_durations.end(),
                            c.duration_samples.begin(),
                            c.duration_samples.end());
  }

  ValueTable table;
  table.rows.reserve(stats.items.size());
  for (const auto& item : stats.items) {
    ClusterKey key = cluster_for_clamped(item.itinerary, item.first_seen, true);
    auto rate = stats.cluster_attempt_rate.find(key);
    double cluster_mean = rate != stats.cluster_attempt_rate.end()
                              ? rate->second
                              : stats.global_attempt_rate;
    ValueTable::Row row;
    row.itinerary = item.itinerary;
    row.p_b = (static_cast<double>(item.attempts) +
               shrinkage_weight * cluster_mean) /
              (static_cast<double>(item.served) + shrinkage_weight);
    SimTime ttl = model.table.lookup(key);
    const Cluster* cluster = model.find_cluster(key);
    const std::vector<SimTime>& durations =
        cluster && !cluster->duration_samples.empty()
            ? cluster->duration_samples
            : pooled_durations;
    row.p_a = durations.empty() ? 1.0 : accuracy_estimate(durations, ttl);
    row.daily_searches = static_cast<double>(item.served) / training_days;
    table.rows.push_back(std::move(row));
  }
  return table;
}

EstimateResult estimate_probabilities(
    SearchStream& training, std::span<const FetchRecord> fetch_log,
    const std::function<double(const Itinerary&)>& propensity,
    CivilDate start_date, SimTime training_horizon, std::uint64_t seed,
    const TtlModelOptions& ttl_options, double shrinkage_weight) {
  EstimateResult result;
  result.stats = collect_serving_stats(training, propensity, seed, start_date);
  result.model =
      build_ttl_model(fetch_log, result.stats.observations, start_date,
                      ttl_options, &result.stats.cluster_attempt_rate);
  result.table = make_value_table(result.stats, result.model,
                                  training_horizon, shrinkage_weight);
  return result;
}

}  // namespace pricesim
