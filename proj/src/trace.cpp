#include "pricesim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <stdexcept>

#include <zlib.h>

#include "pricesim/csv.hpp"

namespace pricesim {

namespace {

// Stream tags keep per-purpose substreams independent of each other.
constexpr std::uint64_t kPoolTag = fnv1a64("pool");
constexpr std::uint64_t kEventTag = fnv1a64("events");
constexpr std::uint64_t kPropensityTag = fnv1a64("propensity");
constexpr std::uint64_t kPriceTag = fnv1a64("price");
constexpr std::uint64_t kPollTag = fnv1a64("poll");

}  // namespace

DistSpec DistSpec::constant(double v) {
  DistSpec d;
  d.kind = Kind::kConstant;
  d.a = v;
  return d;
}

DistSpec DistSpec::uniform(double lo, double hi) {
  DistSpec d;
  d.kind = Kind::kUniform;
  d.a = lo;
  d.b = hi;
  return d;
}

DistSpec DistSpec::exponential(double mean) {
  DistSpec d;
  d.kind = Kind::kExponential;
  d.a = mean;
  return d;
}

DistSpec DistSpec::lognormal(double log_mean, double log_sigma) {
  DistSpec d;
  d.kind = Kind::kLognormal;
  d.a = log_mean;
  d.b = log_sigma;
  return d;
}

DistSpec DistSpec::empirical(std::vector<std::pair<double, double>> hist) {
  DistSpec d;
  d.kind = Kind::kEmpirical;
  d.histogram = std::move(hist);
  return d;
}

DistSpec DistSpec::mixture(std::vector<double> weights,
                           std::vector<DistSpec> components) {
  DistSpec d;
  d.kind = Kind::kMixture;
  d.mixture_weights = std::move(weights);
  d.mixture_components = std::move(components);
  return d;
}

void DistSpec::validate() const {
  switch (kind) {
    case Kind::kConstant:
      return;
    case Kind::kUniform:
      if (!(a < b)) throw std::invalid_argument("uniform: needs lo < hi");
      return;
    case Kind::kExponential:
      if (!(a > 0)) throw std::invalid_argument("exponential: mean must be > 0");
      return;
    case Kind::kLognormal:
      if (!(b >= 0)) throw std::invalid_argument("lognormal: sigma must be >= 0");
      return;
    case Kind::kEmpirical: {
      if (histogram.empty())
        throw std::invalid_argument("empirical: histogram is empty");
      double total = 0;
      for (const auto& [value, weight] : histogram) {
        (void)value;
        if (!(weight >= 0)) throw std::invalid_argument("empirical: negative weight");
        total += weight;
      }
      if (!(total > 0)) throw std::invalid_argument("empirical: zero total weight");
      return;
    }
    case Kind::kMixture: {
      if (mixture_components.empty() ||
          mixture_weights.size() != mixture_components.size())
        throw std::invalid_argument("mixture: weights/components mismatch");
      double total = 0;
      for (double w : mixture_weights) {
        if (!(w >= 0)) throw std::invalid_argument("mixture: negative weight");
        total += w;
      }
      if (!(total > 0)) throw std::invalid_argument("mixture: zero total weight");
      for (const auto& c : mixture_components) c.validate();
      return;
    }
  }
  throw std::invalid_argument("unknown distribution kind");
}

double DistSpec::sample(Rng& rng) const {
  switch (kind) {
    case Kind::kConstant:
      return a;
    case Kind::kUniform:
      return rng.uniform(a, b);
    case Kind::kExponential:
      return rng.exponential(a);
    case Kind::kLognormal:
      return rng.lognormal(a, b);
    case Kind::kEmpirical: {
      double total = 0;
      for (const auto& [value, weight] : histogram) {
        (void)value;
        total += weight;
      }
      double u = rng.next_unit() * total;
      double acc = 0;
      for (const auto& [value, weight] : histogram) {
        acc += weight;
        if (u < acc) return value;
      }
      return histogram.back().first;
    }
    case Kind::kMixture: {
      double total = 0;
      for (double w : mixture_weights) total += w;
      double u = rng.next_unit() * total;
      double acc = 0;
      for (std::size_t i = 0; i < mixture_weights.size(); ++i) {
        acc += mixture_weights[i];
        if (u < acc) return mixture_components[i].sample(rng);
      }
      return mixture_components.back().sample(rng);
    }
  }
  throw std::logic_error("unknown distribution kind");
}

double DistSpec::mean() const {
  switch (kind) {
    case Kind::kConstant:
      return a;
    case Kind::kUniform:
      return 0.5 * (a + b);
    case Kind::kExponential:
      return a;
    case Kind::kLognormal:
      return std::exp(a + 0.5 * b * b);
    case Kind::kEmpirical: {
      double total = 0, weighted = 0;
      for (const auto& [value, weight] : histogram) {
        total += weight;
        weighted += value * weight;
      }
      return weighted / total;
    }
    case Kind::kMixture: {
      double total = 0, weighted = 0;
      for (std::size_t i = 0; i < mixture_weights.size(); ++i) {
        total += mixture_weights[i];
        weighted += mixture_weights[i] * mixture_components[i].mean();
      }
      return weighted / total;
    }
  }
  throw std::logic_error("unknown distribution kind");
}

void DiurnalProfile::validate() const {
  if (hourly.size() != 24)
    throw std::invalid_argument("diurnal profile needs 24 hourly multipliers");
  for (double h : hourly) {
    if (!(h >= 0)) throw std::invalid_argument("negative rate multiplier");
  }
}

double DiurnalProfile::rate_at(double second_of_day) const {
  double pos = second_of_day / 3600.0;
  int h0 = static_cast<int>(pos) % 24;
  int h1 = (h0 + 1) % 24;
  double frac = pos - std::floor(pos);
  return hourly[static_cast<std::size_t>(h0)] * (1.0 - frac) +
         hourly[static_cast<std::size_t>(h1)] * frac;
}

double DiurnalProfile::max_rate() const {
  double best = 0;
  for (double h : hourly) best = std::max(best, h);
  return best;
}

void WorkloadConfig::validate() const {
  if (n_hotels <= 0) throw std::invalid_argument("n_hotels must be > 0");
  if (variants_per_hotel <= 0)
    throw std::invalid_argument("variants_per_hotel must be > 0");
  if (n_users <= 0) throw std::invalid_argument("n_users must be > 0");
  if (horizon <= 0) throw std::invalid_argument("horizon must be > 0");
  if (!(popularity_skew >= 0))
    throw std::invalid_argument("popularity_skew must be >= 0");
  if (!(base_rate_per_sec >= 0))
    throw std::invalid_argument("base_rate_per_sec must be >= 0");
  if (!(repeat_probability >= 0 && repeat_probability < 1))
    throw std::invalid_argument("repeat_probability must be in [0, 1)");
  if (dc_traffic_profiles.empty())
    throw std::invalid_argument("need at least one dc traffic profile");
  if (!(booking_propensity_mean >= 0 && booking_propensity_mean <= 1))
    throw std::invalid_argument("booking_propensity_mean must be in [0, 1]");
  if (!(booking_propensity_spread >= 0 && booking_propensity_spread <= 1))
    throw std::invalid_argument("booking_propensity_spread must be in [0, 1]");
  gap_time_distribution.validate();
  checkin_lead_distribution.validate();
  stay_nights_distribution.validate();
  for (const auto& p : dc_traffic_profiles) p.validate();
}

WorkloadConfig default_workload_config() {
  WorkloadConfig c;
  c.checkin_lead_distribution = DistSpec::uniform(3, 60);
  return c;
}

ItineraryPool build_itinerary_pool(const WorkloadConfig& config) {
  config.validate();
  Rng rng(mix64(config.seed, kPoolTag));
  ItineraryPool pool;
  auto count = static_cast<std::size_t>(config.n_hotels) *
               static_cast<std::size_t>(config.variants_per_hotel);
  pool.items.reserve(count);
  pool.cumulative_weight.reserve(count);
  char hotel[24];
  double acc = 0;
  for (int h = 0; h < config.n_hotels; ++h) {
    std::snprintf(hotel, sizeof hotel, "h%04d", h);
    for (int v = 0; v < config.variants_per_hotel; ++v) {
      int lead = std::clamp(
          static_cast<int>(
              std::llround(config.checkin_lead_distribution.sample(rng))),
          0, 365);
      int nights = std::max(
          1, static_cast<int>(
                 std::llround(config.stay_nights_distribution.sample(rng))));
      Itinerary it;
      it.hotel_id = hotel;
      it.criteria.checkin = config.start_date + lead;
      it.criteria.checkout = it.criteria.checkin + nights;
      pool.items.push_back(std::move(it));
      double rank = static_cast<double>(pool.items.size());
      acc += std::pow(rank, -config.popularity_skew);
      pool.cumulative_weight.push_back(acc);
    }
  }
  return pool;
}

std::size_t ItineraryPool::pick(double unit) const {
  double target = unit * cumulative_weight.back();
  auto it = std::upper_bound(cumulative_weight.begin(),
                             cumulative_weight.end(), target);
  if (it == cumulative_weight.end()) return items.size() - 1;
  return static_cast<std::size_t>(it - cumulative_weight.begin());
}

double booking_propensity(const WorkloadConfig& config, const Itinerary& it) {
  double u = unit_from_bits(
      mix64(config.seed, kPropensityTag, hash_itinerary(it)));
  double m = config.booking_propensity_mean;
  double s = config.booking_propensity_spread;
  return std::clamp(m * (1.0 - s) + u * 2.0 * s * m, 0.0, 1.0);
}

namespace {

struct PendingEvent {
  double time = 0;
  std::uint64_t seq = 0;  // FIFO among equal times
  enum class Kind { kSessionStart, kFollowUp, kRenewal } kind;
  int dc_id = 0;
  std::size_t itinerary = 0;  // pool index (kFollowUp / kRenewal)
  int user = 0;               // kFollowUp

  bool operator>(const PendingEvent& o) const {
    if (time != o.time) return time > o.time;
    return seq > o.seq;
  }
};

class GeneratedSearchStream : public SearchStream {
 public:
  explicit GeneratedSearchStream(const WorkloadConfig& config)
      : config_(config),
        pool_(build_itinerary_pool(config)),
        rng_(mix64(config.seed, kEventTag, config.stream_salt)) {
    if (config_.arrival_model == WorkloadConfig::ArrivalModel::kSessions) {
      for (int dc = 0; dc < static_cast<int>(config_.dc_traffic_profiles.size());
           ++dc) {
        double max_rate = config_.base_rate_per_sec *
                          config_.dc_traffic_profiles[dc].max_rate();
        if (max_rate <= 0) continue;
        PendingEvent e;
        e.kind = PendingEvent::Kind::kSessionStart;
        e.dc_id = dc;
        e.time = rng_.exponential(1.0 / max_rate);
        push(e);
      }
    } else {
      for (std::size_t i = 0; i < pool_.items.size(); ++i) {
        PendingEvent e;
        e.kind = PendingEvent::Kind::kRenewal;
        e.itinerary = i;
        e.dc_id = static_cast<int>(
            hash_itinerary(pool_.items[i]) %
            config_.dc_traffic_profiles.size());
        // Random phase keeps chains unsynchronized without disturbing the
        // gap distribution (only gaps between events are measured).
        e.time = rng_.next_unit() *
                 std::min<double>(static_cast<double>(config_.horizon),
                                  config_.gap_time_distribution.mean());
        push(e);
      }
    }
  }

  std::optional<TraceEvent> next() override {
    while (!heap_.empty()) {
      PendingEvent e = heap_.top();
      heap_.pop();
      if (e.time >= static_cast<double>(config_.horizon)) continue;
      switch (e.kind) {
        case PendingEvent::Kind::kSessionStart: {
          schedule_next_session_start(e);
          const auto& profile =
              config_.dc_traffic_profiles[static_cast<std::size_t>(e.dc_id)];
          double accept = profile.rate_at(
                              std::fmod(e.time, static_cast<double>(kSecondsPerDay))) /
                          profile.max_rate();
          if (rng_.next_unit() >= accept) break;  // thinned out
          std::size_t itin = pool_.pick(rng_.next_unit());
          int user = static_cast<int>(rng_.uniform_below(
              static_cast<std::uint64_t>(config_.n_users)));
          auto out = emit(e.time, itin, user, e.dc_id);
          if (!out) break;  // stay already started; session goes nowhere
          maybe_follow_up(e.time, itin, user, e.dc_id);
          return out;
        }
        case PendingEvent::Kind::kFollowUp: {
          auto out = emit(e.time, e.itinerary, e.user, e.dc_id);
          if (!out) break;
          maybe_follow_up(e.time, e.itinerary, e.user, e.dc_id);
          return out;
        }
        case PendingEvent::Kind::kRenewal: {
          PendingEvent n = e;
          n.time = e.time + config_.gap_time_distribution.sample(rng_);
          push(n);
          int user = static_cast<int>(rng_.uniform_below(
              static_cast<std::uint64_t>(config_.n_users)));
          if (auto out = emit(e.time, e.itinerary, user, e.dc_id)) return out;
          break;
        }
      }
    }
    return std::nullopt;
  }

 private:
  void push(PendingEvent e) {
    e.seq = ++seq_;
    heap_.push(e);
  }

  void schedule_next_session_start(const PendingEvent& prev) {
    double max_rate =
        config_.base_rate_per_sec *
        config_.dc_traffic_profiles[static_cast<std::size_t>(prev.dc_id)]
            .max_rate();
    PendingEvent e = prev;
    e.time = prev.time + rng_.exponential(1.0 / max_rate);
    if (e.time < static_cast<double>(config_.horizon)) push(e);
  }

  void maybe_follow_up(double now, std::size_t itin, int user, int dc) {
    if (rng_.next_unit() >= config_.repeat_probability) return;
    PendingEvent e;
    e.kind = PendingEvent::Kind::kFollowUp;
    e.time = now + config_.gap_time_distribution.sample(rng_);
    e.itinerary = itin;
    e.user = user;
    e.dc_id = dc;
    push(e);
  }

  std::optional<TraceEvent> emit(double time, std::size_t itin, int user,
                                 int dc) {
    auto ts = static_cast<SimTime>(time);
    const Itinerary& it = pool_.items[itin];
    // Searches for stays already begun make no sense; drop them.
    if (it.criteria.checkin < date_at(config_.start_date, ts))
      return std::nullopt;
    TraceEvent out;
    char user_id[24];
    std::snprintf(user_id, sizeof user_id, "u%05d", user);
    out.search.user_id = user_id;
    out.search.itinerary = it;
    out.search.timestamp = ts;
    out.dc_id = dc;
    return out;
  }

  WorkloadConfig config_;
  ItineraryPool pool_;
  Rng rng_;
  std::uint64_t seq_ = 0;
  std::priority_queue<PendingEvent, std::vector<PendingEvent>,
                      std::greater<PendingEvent>>
      heap_;
};

}  // namespace

std::unique_ptr<SearchStream> generate_searches(const WorkloadConfig& config) {
  return std::make_unique<GeneratedSearchStream>(config);
}

VectorSearchStream::VectorSearchStream(std::vector<TraceEvent> events)
    : events_(std::move(events)) {}

std::optional<TraceEvent> VectorSearchStream::next() {
  if (pos_ >= events_.size()) return std::nullopt;
  return events_[pos_++];
}

FilteredSearchStream::FilteredSearchStream(
    std::unique_ptr<SearchStream> inner,
    std::function<bool(const TraceEvent&)> keep)
    : inner_(std::move(inner)), keep_(std::move(keep)) {}

std::optional<TraceEvent> FilteredSearchStream::next() {
  while (auto e = inner_->next()) {
    if (keep_(*e)) return e;
  }
  return std::nullopt;
}

namespace {

// Lazy line-at-a-time trace reader. gzopen reads plain files transparently,
// so one code path covers .csv and .csv.gz. Traces can be large; nothing is
// buffered beyond the current line.
class IngestSearchStream : public SearchStream {
 public:
  explicit IngestSearchStream(std::string path) : path_(std::move(path)) {
    file_ = gzopen(path_.c_str(), "rb");
    if (!file_) throw std::runtime_error("cannot open trace " + path_);
  }
  ~IngestSearchStream() override {
    if (file_) gzclose(file_);
  }
  IngestSearchStream(const IngestSearchStream&) = delete;
  IngestSearchStream& operator=(const IngestSearchStream&) = delete;

  std::optional<TraceEvent> next() override {
    std::string line;
    while (read_line(line)) {
      ++line_no_;
      if (line.empty()) continue;
      if (line_no_ == 1 && line.rfind("timestamp_s,", 0) == 0) continue;
      return parse(line);
    }
    return std::nullopt;
  }

 private:
  bool read_line(std::string& line) {
    line.clear();
    char buf[4096];
    bool got = false;
    while (gzgets(file_, buf, sizeof buf)) {
      got = true;
      line += buf;
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        break;
      }
    }
    if (!got) {
      int errnum = 0;
      const char* msg = file_ ? gzerror(file_, &errnum) : "";
      if (errnum != 0 && errnum != Z_STREAM_END)
        throw std::runtime_error(path_ + ": read error: " + msg);
      return false;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  TraceEvent parse(const std::string& line) {
    auto fail = [&](const std::string& why) -> void {
      throw std::runtime_error(path_ + ":" + std::to_string(line_no_) + ": " +
                               why);
    };
    auto f = split_csv(line);
    if (f.size() != 9) fail("expected 9 fields");
    TraceEvent e;
    e.search.timestamp = parse_i64(f[0], "timestamp_s");
    e.search.user_id = f[1];
    e.search.itinerary.hotel_id = f[2];
    auto checkin = parse_date(f[3]);
    auto checkout = parse_date(f[4]);
    if (!checkin || !checkout) fail("bad date");
    e.search.itinerary.criteria.checkin = *checkin;
    e.search.itinerary.criteria.checkout = *checkout;
    e.search.itinerary.criteria.adults =
        static_cast<int>(parse_i64(f[5], "adults"));
    e.search.itinerary.criteria.children =
        static_cast<int>(parse_i64(f[6], "children"));
    e.search.itinerary.criteria.rooms =
        static_cast<int>(parse_i64(f[7], "rooms"));
    e.dc_id = static_cast<int>(parse_i64(f[8], "dc_id"));
    if (e.search.timestamp < last_ts_) fail("timestamps out of order");
    if (e.dc_id < 0) fail("negative dc_id");
    try {
      validate_criteria(e.search.itinerary.criteria);
    } catch (const std::invalid_argument& ex) {
      fail(ex.what());
    }
    last_ts_ = e.search.timestamp;
    return e;
  }

  std::string path_;
  gzFile file_ = nullptr;
  std::size_t line_no_ = 0;
  SimTime last_ts_ = -1;
};

}  // namespace

std::unique_ptr<SearchStream> ingest_trace(const std::string& path) {
  return std::make_unique<IngestSearchStream>(path);
}

std::string trace_to_csv(SearchStream& stream) {
  std::string out =
      "timestamp_s,user_id,hotel_id,checkin,checkout,adults,children,rooms,"
      "dc_id\n";
  char buf[192];
  while (auto e = stream.next()) {
    const auto& c = e->search.itinerary.criteria;
    std::snprintf(buf, sizeof buf, "%lld,%s,%s,%s,%s,%d,%d,%d,%d\n",
                  static_cast<long long>(e->search.timestamp),
                  e->search.user_id.c_str(),
                  e->search.itinerary.hotel_id.c_str(),
                  format_date(c.checkin).c_str(),
                  format_date(c.checkout).c_str(), c.adults, c.children,
                  c.rooms, e->dc_id);
    out += buf;
  }
  return out;
}

void PriceProcessConfig::validate() const {
  default_duration.validate();
  for (const auto& band : lead_bands) {
    if (band.lead_min > band.lead_max)
      throw std::invalid_argument("lead band with min > max");
    band.duration.validate();
  }
  price_level.validate();
  if (!(sold_out_probability >= 0 && sold_out_probability < 1))
    throw std::invalid_argument("sold_out_probability must be in [0, 1)");
}

const DistSpec& PriceProcessConfig::duration_for_lead(int lead_days) const {
  for (const auto& band : lead_bands) {
    if (lead_days >= band.lead_min && lead_days <= band.lead_max)
      return band.duration;
  }
  return default_duration;
}

PriceTimeline::PriceTimeline(
    std::vector<std::pair<SimTime, std::int64_t>> segments, SimTime horizon)
    : segments_(std::move(segments)), horizon_(horizon) {
  if (segments_.empty() || segments_[0].first != 0)
    throw std::invalid_argument("timeline must start at t=0");
}

std::int64_t PriceTimeline::price_at(SimTime t) const {
  if (t < 0 || t >= horizon_)
    throw std::out_of_range("price query outside horizon");
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](SimTime v, const auto& seg) { return v < seg.first; });
  return (it - 1)->second;
}

PriceTimeline generate_price_timeline(const PriceProcessConfig& config,
                                      const Itinerary& it, SimTime horizon,
                                      std::uint64_t seed) {
  config.validate();
  if (horizon <= 0) throw std::invalid_argument("horizon must be > 0");
  Rng rng(mix64(seed, kPriceTag, hash_itinerary(it)));
  int lead = it.criteria.checkin - config.anchor_date;
  const DistSpec& duration = config.duration_for_lead(std::max(lead, 0));
  std::vector<std::pair<SimTime, std::int64_t>> segments;
  SimTime t = 0;
  while (t < horizon) {
    std::int64_t price = 0;
    if (config.sold_out_probability == 0 ||
        rng.next_unit() >= config.sold_out_probability) {
      price = std::max<std::int64_t>(
          1, std::llround(config.price_level.sample(rng)));
    }
    segments.emplace_back(t, price);
    SimTime len =
        std::max<SimTime>(1, std::llround(duration.sample(rng)));
    t += len;
  }
  return PriceTimeline(std::move(segments), horizon);
}

PriceBook::PriceBook(PriceProcessConfig config, SimTime horizon,
                     std::uint64_t seed)
    : config_(std::move(config)), horizon_(horizon), seed_(seed) {
  config_.validate();
}

std::int64_t PriceBook::price_at(const Itinerary& it, SimTime t) const {
  auto found = cache_.find(it);
  if (found == cache_.end()) {
    found = cache_
                .emplace(it, generate_price_timeline(config_, it, horizon_,
                                                     seed_))
                .first;
  }
  return found->second.price_at(t);
}

std::vector<FetchRecord> synthesize_fetch_log(const ItineraryPool& pool,
                                              const PriceBook& prices,
                                              SimTime horizon,
                                              SimTime poll_interval,
                                              std::uint64_t seed) {
  if (poll_interval <= 0)
    throw std::invalid_argument("poll_interval must be > 0");
  std::vector<FetchRecord> log;
  for (const Itinerary& it : pool.items) {
    SimTime phase = static_cast<SimTime>(
        mix64(seed, kPollTag, hash_itinerary(it)) %
        static_cast<std::uint64_t>(poll_interval));
    for (SimTime t = phase; t < horizon; t += poll_interval) {
      log.push_back(FetchRecord{t, it, prices.price_at(it, t)});
    }
  }
  std::stable_sort(log.begin(), log.end(),
                   [](const FetchRecord& a, const FetchRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return log;
}

std::string fetch_log_to_csv(std::span<const FetchRecord> log) {
  std::string out =
      "timestamp_s,hotel_id,checkin,checkout,adults,children,rooms,"
      "price_minor\n";
  char buf[192];
  for (const auto& rec : log) {
    const auto& c = rec.itinerary.criteria;
    std::snprintf(buf, sizeof buf, "%lld,%s,%s,%s,%d,%d,%d,%lld\n",
                  static_cast<long long>(rec.timestamp),
                  rec.itinerary.hotel_id.c_str(),
                  format_date(c.checkin).c_str(),
                  format_date(c.checkout).c_str(), c.adults, c.children,
                  c.rooms, static_cast<long long>(rec.price_minor));
    out += buf;
  }
  return out;
}

}  // namespace pricesim
