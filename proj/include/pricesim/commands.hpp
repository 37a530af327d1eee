#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pricesim/config.hpp"
#include "pricesim/simulator.hpp"

namespace pricesim {

// Command-layer orchestration: everything the CLI does, exposed as throwing
// functions so tests can drive the exact same paths. All outputs are
// deterministic in (inputs, seed).

struct GenTraceOptions {
  std::string config_path;  // experiment JSON; empty -> defaults
  std::optional<std::uint64_t> seed;
  std::string out_trace;      // required
  std::string out_fetch_log;  // optional: also emit a polled fetch log
  SimTime poll_interval = 900;
};

struct GenTraceSummary {
  std::uint64_t events = 0;
  std::uint64_t fetch_records = 0;
};

GenTraceSummary cmd_gen_trace(const GenTraceOptions& options);

struct BuildTtlOptionsCli {
  std::string fetch_log_path;  // required
  // Optional search trace for gap samples; without it, fetch timestamps
  // stand in as search arrivals.
  std::string trace_path;
  std::string out_path;  // required
  std::string start_date = "2026-01-01";
  std::size_t min_duration_samples = 30;
};

struct BuildTtlSummary {
  std::size_t clusters = 0;
  std::size_t self_assigned = 0;
  std::size_t duration_samples = 0;
  std::size_t gap_samples = 0;
  SimTime min_ttl = 0;
  SimTime max_ttl = 0;
  std::string text() const;
};

BuildTtlSummary cmd_build_ttl(const BuildTtlOptionsCli& options);

struct BuildScheduleOptions {
  std::string ttl_table_path;
  std::string value_table_path;
  int mu = 1;
  std::string out_plan;
  std::string plan_date = "2026-01-01";
};

struct BuildScheduleSummary {
  std::size_t selected = 0;
  std::uint64_t total_sends = 0;
  std::uint64_t budget = 0;
  std::uint32_t max_second_load = 0;
  std::string text() const;
};

BuildScheduleSummary cmd_build_schedule(const BuildScheduleOptions& options);

struct AuditPlanOptions {
  std::string plan_path;
  int mu = 1;
  std::string ttl_table_path;  // optional: enables gap/frequency checks
  std::string plan_date = "2026-01-01";
};

// Returns the audit; callers map !ok to a nonzero exit.
PlanAudit cmd_audit_plan(const AuditPlanOptions& options);

struct RunOptions {
  std::string config_path;  // required
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

struct RunArtifacts {
  std::vector<std::string> arm_names;
  std::vector<Metrics> arm_metrics;
  std::string metrics_csv_path;
  std::string summary;  // printable
};

// Single- or multi-arm simulation depending on config arms (>= 1).
RunArtifacts cmd_run(const RunOptions& options);

// Paired two-arm comparison (config must declare exactly two arms).
RunArtifacts cmd_ab(const RunOptions& options);

}  // namespace pricesim
