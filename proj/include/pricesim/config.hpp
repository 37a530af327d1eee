#pragma once

#include <string>
#include <vector>

#include "pricesim/simulator.hpp"
#include "pricesim/supplier.hpp"
#include "pricesim/trace.hpp"

namespace pricesim {

// One experiment: a synthetic world (or external trace), a supplier budget,
// and one or two policy arms. See README for the JSON schema; every field
// has a default.
struct ExperimentConfig {
  WorkloadConfig workload;
  PriceProcessConfig price_process;
  SupplierConfig supplier;
  SimTime horizon = 14 * kSecondsPerDay;
  SimTime training_horizon = 3 * kSecondsPerDay;
  SimTime poll_interval = 900;  // historical fetch-log cadence
  std::uint64_t seed = 1;
  double shrinkage_weight = 10.0;
  std::string trace_path;  // optional external evaluation trace
  std::vector<PolicySpec> arms;
};

// Throws std::runtime_error with the offending key/path on bad input.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

WorkloadConfig parse_workload_config(const std::string& json_text);

}  // namespace pricesim
