#include "pricesim/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pricesim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& why) {
  throw std::runtime_error("config: " + where + ": " + why);
}

// Unknown keys are almost always typos; reject them loudly.
void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

CivilDate parse_date_field(const json& obj, const std::string& where) {
  if (!obj.is_string()) fail(where, "expected \"YYYY-MM-DD\"");
  auto date = parse_date(obj.get<std::string>());
  if (!date) fail(where, "bad date '" + obj.get<std::string>() + "'");
  return *date;
}

DistSpec parse_dist(const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected a distribution object");
  std::string type = obj.value("type", "");
  if (type == "constant") {
    check_keys(obj, where, {"type", "value"});
    return DistSpec::constant(obj.at("value").get<double>());
  }
  if (type == "uniform") {
    check_keys(obj, where, {"type", "lo", "hi"});
    return DistSpec::uniform(obj.at("lo").get<double>(),
                             obj.at("hi").get<double>());
  }
  if (type == "exponential") {
    check_keys(obj, where, {"type", "mean"});
    return DistSpec::exponential(obj.at("mean").get<double>());
  }
  if (type == "lognormal") {
    check_keys(obj, where, {"type", "log_mean", "log_sigma"});
    return DistSpec::lognormal(obj.at("log_mean").get<double>(),
                               obj.at("log_sigma").get<double>());
  }
  if (type == "empirical") {
    check_keys(obj, where, {"type", "values"});
    std::vector<std::pair<double, double>> hist;
    for (const auto& pair : obj.at("values")) {
      if (!pair.is_array() || pair.size() != 2)
        fail(where, "empirical values must be [value, weight] pairs");
      hist.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    return DistSpec::empirical(std::move(hist));
  }
  if (type == "mixture") {
    check_keys(obj, where, {"type", "components"});
    std::vector<double> weights;
    std::vector<DistSpec> components;
    for (const auto& comp : obj.at("components")) {
      if (!comp.is_object() || !comp.contains("weight"))
        fail(where, "mixture components need a weight");
      weights.push_back(comp.at("weight").get<double>());
      json inner = comp;
      inner.erase("weight");
      components.push_back(parse_dist(inner, where + ".components"));
    }
    return DistSpec::mixture(std::move(weights), std::move(components));
  }
  fail(where, "unknown distribution type '" + type + "'");
}

WorkloadConfig parse_workload(const json& obj, std::uint64_t default_seed) {
  check_keys(obj, "workload",
             {"n_hotels", "variants_per_hotel", "n_users", "horizon_s",
              "popularity_skew", "base_rate_per_sec", "gap_time",
              "checkin_lead", "stay_nights", "repeat_probability",
              "dc_profiles", "arrival_model", "start_date",
              "booking_propensity_mean", "booking_propensity_spread",
              "seed"});
  WorkloadConfig c = default_workload_config();
  c.seed = default_seed;
  c.n_hotels = obj.value("n_hotels", c.n_hotels);
  c.variants_per_hotel = obj.value("variants_per_hotel", c.variants_per_hotel);
  c.n_users = obj.value("n_users", c.n_users);
  c.horizon = obj.value("horizon_s", c.horizon);
  c.popularity_skew = obj.value("popularity_skew", c.popularity_skew);
  c.base_rate_per_sec = obj.value("base_rate_per_sec", c.base_rate_per_sec);
  if (obj.contains("gap_time"))
    c.gap_time_distribution = parse_dist(obj.at("gap_time"), "workload.gap_time");
  if (obj.contains("checkin_lead"))
    c.checkin_lead_distribution =
        parse_dist(obj.at("checkin_lead"), "workload.checkin_lead");
  if (obj.contains("stay_nights"))
    c.stay_nights_distribution =
        parse_dist(obj.at("stay_nights"), "workload.stay_nights");
  c.repeat_probability = obj.value("repeat_probability", c.repeat_probability);
  if (obj.contains("dc_profiles")) {
    c.dc_traffic_profiles.clear();
    for (const auto& profile : obj.at("dc_profiles")) {
      DiurnalProfile p;
      if (!profile.is_array() || profile.size() != 24)
        fail("workload.dc_profiles", "each profile needs 24 hourly values");
      p.hourly = profile.get<std::vector<double>>();
      c.dc_traffic_profiles.push_back(std::move(p));
    }
  }
  if (obj.contains("arrival_model")) {
    std::string model = obj.at("arrival_model").get<std::string>();
    if (model == "sessions")
      c.arrival_model = WorkloadConfig::ArrivalModel::kSessions;
    else if (model == "renewal")
      c.arrival_model = WorkloadConfig::ArrivalModel::kRenewal;
    else
      fail("workload.arrival_model", "expected 'sessions' or 'renewal'");
  }
  if (obj.contains("start_date"))
    c.start_date = parse_date_field(obj.at("start_date"), "workload.start_date");
  c.booking_propensity_mean =
      obj.value("booking_propensity_mean", c.booking_propensity_mean);
  c.booking_propensity_spread =
      obj.value("booking_propensity_spread", c.booking_propensity_spread);
  c.seed = obj.value("seed", c.seed);
  c.validate();
  return c;
}

PriceProcessConfig parse_price_process(const json& obj, CivilDate anchor) {
  check_keys(obj, "price_process",
             {"default_duration", "lead_bands", "price_level",
              "sold_out_probability"});
  PriceProcessConfig c;
  c.anchor_date = anchor;
  if (obj.contains("default_duration"))
    c.default_duration =
        parse_dist(obj.at("default_duration"), "price_process.default_duration");
  if (obj.contains("lead_bands")) {
    for (const auto& band : obj.at("lead_bands")) {
      check_keys(band, "price_process.lead_bands",
                 {"lead_min", "lead_max", "duration"});
      LeadBand b;
      b.lead_min = band.at("lead_min").get<int>();
      b.lead_max = band.at("lead_max").get<int>();
      b.duration = parse_dist(band.at("duration"),
                              "price_process.lead_bands.duration");
      c.lead_bands.push_back(std::move(b));
    }
  }
  if (obj.contains("price_level"))
    c.price_level = parse_dist(obj.at("price_level"), "price_process.price_level");
  c.sold_out_probability =
      obj.value("sold_out_probability", c.sold_out_probability);
  c.validate();
  return c;
}

SupplierConfig parse_supplier(const json& obj) {
  check_keys(obj, "supplier",
             {"qps_limit", "n_datacentres", "per_dc_allocation"});
  SupplierConfig c;
  c.qps_limit = obj.value("qps_limit", c.qps_limit);
  c.n_datacentres = obj.value("n_datacentres", c.n_datacentres);
  if (obj.contains("per_dc_allocation"))
    c.per_dc_allocation =
        obj.at("per_dc_allocation").get<std::vector<int>>();
  c.validate();
  return c;
}

PolicySpec parse_policy(const json& obj) {
  if (!obj.is_object()) fail("arms", "expected a policy object");
  std::string policy = obj.value("policy", "");
  if (policy == "passive_fixed_ttl") {
    check_keys(obj, "arms", {"policy", "ttl_s"});
    return PolicySpec::passive_fixed_ttl(obj.value("ttl_s", SimTime{900}));
  }
  if (policy == "passive_smart_ttl") {
    check_keys(obj, "arms", {"policy"});
    return PolicySpec::passive_smart_ttl();
  }
  if (policy == "aggressive_lru") {
    check_keys(obj, "arms",
               {"policy", "capacity", "use_smart_ttl", "fallback_ttl_s"});
    PolicySpec p = PolicySpec::aggressive_lru(
        obj.value("capacity", std::size_t{4096}));
    p.lru_use_smart_ttl = obj.value("use_smart_ttl", true);
    p.fixed_ttl = obj.value("fallback_ttl_s", SimTime{900});
    return p;
  }
  if (policy == "aggressive_smart_scheduler") {
    check_keys(obj, "arms", {"policy", "reserve_passive_fraction"});
    PolicySpec p = PolicySpec::aggressive_smart_scheduler();
    p.reserve_passive_fraction = obj.value("reserve_passive_fraction", 0.0);
    return p;
  }
  fail("arms", "unknown policy '" + policy + "'");
}

ExperimentConfig parse_experiment(const json& root) {
  check_keys(root, "config",
             {"workload", "price_process", "supplier", "horizon_days",
              "training_days", "poll_interval_s", "seed", "shrinkage_weight",
              "trace", "arms"});
  ExperimentConfig c;
  c.seed = root.value("seed", c.seed);
  c.horizon = root.value("horizon_days", 14) * kSecondsPerDay;
  c.training_horizon = root.value("training_days", 3) * kSecondsPerDay;
  c.poll_interval = root.value("poll_interval_s", c.poll_interval);
  c.shrinkage_weight = root.value("shrinkage_weight", c.shrinkage_weight);
  c.trace_path = root.value("trace", std::string{});
  c.workload = root.contains("workload")
                   ? parse_workload(root.at("workload"), c.seed)
                   : [&] {
                       WorkloadConfig w = default_workload_config();
                       w.seed = c.seed;
                       return w;
                     }();
  c.workload.horizon = c.horizon;  // the eval trace spans the experiment
  c.price_process =
      root.contains("price_process")
          ? parse_price_process(root.at("price_process"), c.workload.start_date)
          : [&] {
              PriceProcessConfig p;
              p.anchor_date = c.workload.start_date;
              return p;
            }();
  c.supplier = root.contains("supplier") ? parse_supplier(root.at("supplier"))
                                         : SupplierConfig{};
  if (root.contains("arms")) {
    for (const auto& arm : root.at("arms")) c.arms.push_back(parse_policy(arm));
  }
  if (c.horizon <= 0) fail("horizon_days", "must be positive");
  if (c.training_horizon <= 0) fail("training_days", "must be positive");
  if (c.poll_interval <= 0) fail("poll_interval_s", "must be positive");
  return c;
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  return parse_experiment(parse_json_text(json_text));
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_experiment_config(buf.str());
}

WorkloadConfig parse_workload_config(const std::string& json_text) {
  json root = parse_json_text(json_text);
  return parse_workload(root, 1);
}

}  // namespace pricesim
