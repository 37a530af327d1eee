// pricesim: hotel price-cache policy simulator.
//
// Subcommands: gen-trace, build-ttl, build-schedule, audit-plan, run, ab.
// All randomness flows from explicit --seed flags; reruns are byte-identical.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "pricesim/commands.hpp"

namespace {

int run_cli(int argc, char** argv) {
  CLI::App app{"Deterministic price-cache fetch-policy simulator"};
  app.require_subcommand(1);

  pricesim::GenTraceOptions gen;
  auto* gen_cmd = app.add_subcommand(
      "gen-trace", "Generate a synthetic search trace (and fetch log)");
  gen_cmd->add_option("--config", gen.config_path, "Experiment config JSON");
  std::uint64_t gen_seed = 0;
  auto* gen_seed_opt = gen_cmd->add_option("--seed", gen_seed, "Master seed");
  gen_cmd->add_option("--out", gen.out_trace, "Trace CSV path")->required();
  gen_cmd->add_option("--fetch-log", gen.out_fetch_log,
                      "Also write a polled fetch-log CSV here");
  gen_cmd->add_option("--poll-interval", gen.poll_interval,
                      "Fetch-log polling interval in seconds");

  pricesim::BuildTtlOptionsCli ttl;
  auto* ttl_cmd =
      app.add_subcommand("build-ttl", "Build a TTL table from a fetch log");
  ttl_cmd->add_option("--fetch-log", ttl.fetch_log_path, "Fetch log CSV(.gz)")
      ->required();
  ttl_cmd->add_option("--trace", ttl.trace_path,
                      "Search trace supplying gap samples");
  ttl_cmd->add_option("--out", ttl.out_path, "Output TTL table CSV")
      ->required();
  ttl_cmd->add_option("--start-date", ttl.start_date,
                      "Date of log second 0 (YYYY-MM-DD)");
  ttl_cmd->add_option("--min-duration-samples", ttl.min_duration_samples,
                      "Cluster assignment threshold");

  pricesim::BuildScheduleOptions sched;
  auto* sched_cmd = app.add_subcommand(
      "build-schedule", "Select and place the day's most valuable fetches");
  sched_cmd->add_option("--ttl-table", sched.ttl_table_path, "TTL table CSV")
      ->required();
  sched_cmd
      ->add_option("--value-table", sched.value_table_path, "Value table CSV")
      ->required();
  sched_cmd->add_option("--mu", sched.mu, "Supplier QPS budget")->required();
  sched_cmd->add_option("--out", sched.out_plan, "Output plan CSV")
      ->required();
  sched_cmd->add_option("--date", sched.plan_date, "Plan date (YYYY-MM-DD)");

  pricesim::AuditPlanOptions audit;
  auto* audit_cmd =
      app.add_subcommand("audit-plan", "Check a plan against the invariants");
  audit_cmd->add_option("--plan", audit.plan_path, "Plan CSV")->required();
  audit_cmd->add_option("--mu", audit.mu, "Supplier QPS budget")->required();
  audit_cmd->add_option("--ttl-table", audit.ttl_table_path,
                        "TTL table CSV (enables gap checks)");
  audit_cmd->add_option("--date", audit.plan_date, "Plan date (YYYY-MM-DD)");

  pricesim::RunOptions run_opts;
  auto* run_cmd =
      app.add_subcommand("run", "Simulate the configured policy arms");
  run_cmd->add_option("--config", run_opts.config_path, "Experiment JSON")
      ->required();
  std::uint64_t run_seed = 0;
  auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "Master seed");
  run_cmd->add_option("--out", run_opts.out_dir, "Output directory");

  pricesim::RunOptions ab_opts;
  auto* ab_cmd =
      app.add_subcommand("ab", "Paired A/B comparison of two arms");
  ab_cmd->add_option("--config", ab_opts.config_path, "Experiment JSON")
      ->required();
  std::uint64_t ab_seed = 0;
  auto* ab_seed_opt = ab_cmd->add_option("--seed", ab_seed, "Master seed");
  ab_cmd->add_option("--out", ab_opts.out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  if (gen_cmd->parsed()) {
    if (gen_seed_opt->count()) gen.seed = gen_seed;
    auto summary = pricesim::cmd_gen_trace(gen);
    std::printf("wrote %llu events to %s\n",
                static_cast<unsigned long long>(summary.events),
                gen.out_trace.c_str());
    if (!gen.out_fetch_log.empty())
      std::printf("wrote %llu fetch records to %s\n",
                  static_cast<unsigned long long>(summary.fetch_records),
                  gen.out_fetch_log.c_str());
    return 0;
  }
  if (ttl_cmd->parsed()) {
    auto summary = pricesim::cmd_build_ttl(ttl);
    std::fputs(summary.text().c_str(), stdout);
    return 0;
  }
  if (sched_cmd->parsed()) {
    auto summary = pricesim::cmd_build_schedule(sched);
    std::fputs(summary.text().c_str(), stdout);
    return 0;
  }
  if (audit_cmd->parsed()) {
    auto result = pricesim::cmd_audit_plan(audit);
    std::printf("max_second_load=%u total_sends=%llu\n",
                result.max_second_load,
                static_cast<unsigned long long>(result.total_sends));
    for (const auto& v : result.violations)
      std::fprintf(stderr, "violation: %s\n", v.c_str());
    return result.ok ? 0 : 1;
  }
  if (run_cmd->parsed()) {
    if (run_seed_opt->count()) run_opts.seed = run_seed;
    auto artifacts = pricesim::cmd_run(run_opts);
    std::fputs(artifacts.summary.c_str(), stdout);
    std::printf("metrics: %s\n", artifacts.metrics_csv_path.c_str());
    return 0;
  }
  if (ab_cmd->parsed()) {
    if (ab_seed_opt->count()) ab_opts.seed = ab_seed;
    auto artifacts = pricesim::cmd_ab(ab_opts);
    std::fputs(artifacts.summary.c_str(), stdout);
    std::printf("metrics: %s\n", artifacts.metrics_csv_path.c_str());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
