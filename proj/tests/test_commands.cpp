#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <pricesim/commands.hpp>
#include <pricesim/config.hpp>
#include <pricesim/csv.hpp>

using namespace pricesim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "pricesim_cmd_tests";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const char* kSmallConfig = R"({
  "seed": 5,
  "horizon_days": 2,
  "training_days": 1,
  "poll_interval_s": 1800,
  "workload": {
    "n_hotels": 8,
    "variants_per_hotel": 1,
    "n_users": 40,
    "base_rate_per_sec": 0.02,
    "checkin_lead": {"type": "uniform", "lo": 5, "hi": 20}
  },
  "price_process": {
    "default_duration": {"type": "exponential", "mean": 5400}
  },
  "supplier": {"qps_limit": 4},
  "arms": [
    {"policy": "passive_fixed_ttl", "ttl_s": 900},
    {"policy": "aggressive_lru", "capacity": 256}
  ]
})";

}  // namespace

TEST_CASE("config parsing: defaults, overrides, loud failures") {
  auto cfg = parse_experiment_config(kSmallConfig);
  CHECK(cfg.seed == 5);
  CHECK(cfg.horizon == 2 * kSecondsPerDay);
  CHECK(cfg.training_horizon == kSecondsPerDay);
  CHECK(cfg.workload.n_hotels == 8);
  CHECK(cfg.workload.horizon == cfg.horizon);  // eval trace spans the run
  CHECK(cfg.workload.seed == 5);               // seed flows into the workload
  CHECK(cfg.supplier.qps_limit == 4);
  REQUIRE(cfg.arms.size() == 2);
  CHECK(cfg.arms[0].name() == "passive_fixed_ttl_900");
  CHECK(cfg.arms[1].name() == "aggressive_lru");

  CHECK_THROWS_WITH_AS((void)parse_experiment_config("{\"horzon_days\": 3}"),
                       doctest::Contains("horzon_days"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config("{\"workload\": {\"n_hotel\": 3}}"),
      doctest::Contains("n_hotel"), std::runtime_error);
  CHECK_THROWS_AS((void)parse_experiment_config("not json"),
                  std::runtime_error);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          "{\"arms\": [{\"policy\": \"warp_drive\"}]}"),
      doctest::Contains("warp_drive"), std::runtime_error);
  CHECK_THROWS_AS((void)load_experiment_config("/no/such/file.json"),
                  std::runtime_error);
}

TEST_CASE("gen-trace: deterministic files with counted events") {
  TempDir tmp;
  write_text_file(tmp.file("cfg.json"), kSmallConfig);

  GenTraceOptions opt;
  opt.config_path = tmp.file("cfg.json");
  opt.out_trace = tmp.file("trace.csv");
  opt.out_fetch_log = tmp.file("fetch.csv");
  opt.poll_interval = 1800;

  auto sum = cmd_gen_trace(opt);
  CHECK(sum.events > 0);
  // 8 itineraries polled every 1800 s over the 2-day workload horizon.
  CHECK(sum.fetch_records == 8u * (2 * kSecondsPerDay / 1800));

  std::string trace = slurp(opt.out_trace);
  CHECK(line_count(trace) == sum.events + 1);  // header
  std::string fetch = slurp(opt.out_fetch_log);
  CHECK(line_count(fetch) == sum.fetch_records + 1);

  // Byte-identical on rerun; different under a seed override.
  GenTraceOptions again = opt;
  again.out_trace = tmp.file("trace2.csv");
  again.out_fetch_log = tmp.file("fetch2.csv");
  cmd_gen_trace(again);
  CHECK(slurp(again.out_trace) == trace);
  CHECK(slurp(again.out_fetch_log) == fetch);

  GenTraceOptions reseeded = again;
  reseeded.seed = 77;
  cmd_gen_trace(reseeded);
  CHECK(slurp(again.out_trace) != trace);

  GenTraceOptions missing;
  CHECK_THROWS_AS((void)cmd_gen_trace(missing), std::runtime_error);
}

TEST_CASE("build-ttl: table from a generated log, reruns identical") {
  TempDir tmp;
  write_text_file(tmp.file("cfg.json"), kSmallConfig);
  GenTraceOptions gen;
  gen.config_path = tmp.file("cfg.json");
  gen.out_trace = tmp.file("trace.csv");
  gen.out_fetch_log = tmp.file("fetch.csv");
  gen.poll_interval = 900;
  cmd_gen_trace(gen);

  BuildTtlOptionsCli opt;
  opt.fetch_log_path = tmp.file("fetch.csv");
  opt.trace_path = tmp.file("trace.csv");
  opt.out_path = tmp.file("ttl.csv");
  opt.min_duration_samples = 5;
  auto sum = cmd_build_ttl(opt);
  CHECK(sum.clusters >= 1);
  CHECK(sum.clusters <= 732);  // (365 + 1) leads x 2 availability states
  CHECK(sum.duration_samples > 0);
  CHECK(sum.min_ttl >= 900);
  CHECK(sum.max_ttl <= 86400);
  CHECK(!sum.text().empty());

  std::string table = slurp(opt.out_path);
  CHECK(line_count(table) == sum.clusters + 1);

  BuildTtlOptionsCli again = opt;
  again.out_path = tmp.file("ttl2.csv");
  cmd_build_ttl(again);
  CHECK(slurp(again.out_path) == table);

  // Without a trace the fetch timestamps stand in for search arrivals.
  BuildTtlOptionsCli no_trace = opt;
  no_trace.trace_path.clear();
  no_trace.out_path = tmp.file("ttl3.csv");
  auto sum2 = cmd_build_ttl(no_trace);
  CHECK(sum2.clusters >= 1);
  CHECK(sum2.gap_samples > 0);

  // Header-only log: a named failure.
  write_text_file(tmp.file("empty.csv"),
                  "timestamp_s,hotel_id,checkin,checkout,adults,children,"
                  "rooms,price_minor\n");
  BuildTtlOptionsCli empty = opt;
  empty.fetch_log_path = tmp.file("empty.csv");
  empty.out_path = tmp.file("ttl4.csv");
  CHECK_THROWS_WITH_AS((void)cmd_build_ttl(empty),
                       doctest::Contains("no duration samples"),
                       std::runtime_error);

  BuildTtlOptionsCli missing;
  CHECK_THROWS_AS((void)cmd_build_ttl(missing), std::runtime_error);
}

TEST_CASE("build-schedule and audit-plan: plan file lifecycle") {
  TempDir tmp;
  write_text_file(
      tmp.file("ttl.csv"),
      "checkin_lead,available,ttl_seconds,n_duration_samples,n_gap_samples\n"
      "10,1,21600,50,50\n");
  write_text_file(tmp.file("values.csv"),
                  "hotel_id,checkin,checkout,adults,children,rooms,p_b,p_a,"
                  "daily_searches\n"
                  "hA,2026-01-11,2026-01-12,2,0,1,0.500000,1.000000,100.0\n"
                  "hB,2026-01-11,2026-01-12,2,0,1,0.250000,1.000000,80.0\n"
                  "hC,2026-01-11,2026-01-12,2,0,1,0.100000,1.000000,60.0\n"
                  "hPast,2025-12-20,2025-12-21,2,0,1,0.900000,1.000000,50.0\n"
                  "hZero,2026-01-11,2026-01-12,2,0,1,0.000000,1.000000,10.0\n");

  BuildScheduleOptions opt;
  opt.ttl_table_path = tmp.file("ttl.csv");
  opt.value_table_path = tmp.file("values.csv");
  opt.mu = 1;
  opt.out_plan = tmp.file("plan.csv");
  opt.plan_date = "2026-01-01";
  auto sum = cmd_build_schedule(opt);
  // Past checkins and zero-value rows are excluded; 3 live entries, f=4 each.
  CHECK(sum.selected == 3);
  CHECK(sum.total_sends == 12);
  CHECK(sum.budget == 86400);
  CHECK(sum.max_second_load == 1);
  CHECK(!sum.text().empty());

  AuditPlanOptions audit;
  audit.plan_path = opt.out_plan;
  audit.mu = 1;
  audit.ttl_table_path = tmp.file("ttl.csv");
  audit.plan_date = "2026-01-01";
  auto result = cmd_audit_plan(audit);
  CHECK(result.ok);
  CHECK(result.total_sends == 12);
  CHECK(result.max_second_load == 1);

  // Corrupt the plan: a duplicate send in an occupied second overloads mu=1.
  std::string plan_csv = slurp(opt.out_plan);
  auto second_line_end = plan_csv.find('\n', plan_csv.find('\n') + 1);
  std::string first_row = plan_csv.substr(plan_csv.find('\n') + 1,
                                          second_line_end - plan_csv.find('\n'));
  write_text_file(tmp.file("broken.csv"), plan_csv + first_row);
  AuditPlanOptions broken = audit;
  broken.plan_path = tmp.file("broken.csv");
  auto bad = cmd_audit_plan(broken);
  CHECK(!bad.ok);
  CHECK(!bad.violations.empty());

  // Without the ttl table the audit still checks load invariants.
  AuditPlanOptions no_table = audit;
  no_table.ttl_table_path.clear();
  CHECK(cmd_audit_plan(no_table).ok);

  BuildScheduleOptions bad_mu = opt;
  bad_mu.mu = 0;
  CHECK_THROWS_AS((void)cmd_build_schedule(bad_mu), std::runtime_error);
  AuditPlanOptions no_plan;
  no_plan.mu = 1;
  CHECK_THROWS_AS((void)cmd_audit_plan(no_plan), std::runtime_error);
}

TEST_CASE("run: artifacts land on disk and reruns are byte-identical") {
  TempDir tmp;
  write_text_file(tmp.file("cfg.json"), kSmallConfig);

  RunOptions opt;
  opt.config_path = tmp.file("cfg.json");
  opt.out_dir = tmp.file("out");
  auto artifacts = cmd_run(opt);

  REQUIRE(artifacts.arm_names.size() == 2);
  CHECK(artifacts.arm_names[0] == "passive_fixed_ttl_900");
  CHECK(artifacts.arm_names[1] == "aggressive_lru");
  CHECK(artifacts.arm_metrics[0].total.searches > 0);
  CHECK(artifacts.arm_metrics[0].total.searches ==
        artifacts.arm_metrics[1].total.searches);  // same trace replayed
  CHECK(!artifacts.summary.empty());

  for (const char* name :
       {"metrics.csv", "ttl_table.csv", "value_table.csv",
        "qps_passive_fixed_ttl_900.csv", "qps_aggressive_lru.csv",
        "arm_passive_fixed_ttl_900.dat", "arm_aggressive_lru.dat",
        "plot.gp"})
    CHECK(fs::exists(fs::path(opt.out_dir) / name));

  std::string metrics = slurp(artifacts.metrics_csv_path);
  CHECK(metrics.rfind("day,arm,", 0) == 0);
  // 2 arms x 2 days of rows plus the header.
  CHECK(line_count(metrics) == 5);

  RunOptions again = opt;
  again.out_dir = tmp.file("out2");
  auto artifacts2 = cmd_run(again);
  CHECK(slurp(artifacts2.metrics_csv_path) == metrics);
  CHECK(slurp(tmp.file("out2/ttl_table.csv")) ==
        slurp(tmp.file("out/ttl_table.csv")));
  CHECK(slurp(tmp.file("out2/value_table.csv")) ==
        slurp(tmp.file("out/value_table.csv")));

  RunOptions reseeded = opt;
  reseeded.out_dir = tmp.file("out3");
  reseeded.seed = 99;
  auto artifacts3 = cmd_run(reseeded);
  CHECK(slurp(artifacts3.metrics_csv_path) != metrics);

  RunOptions no_config;
  CHECK_THROWS_AS((void)cmd_run(no_config), std::runtime_error);
}

TEST_CASE("ab: paired halves with deltas") {
  TempDir tmp;
  write_text_file(tmp.file("cfg.json"), kSmallConfig);
  RunOptions opt;
  opt.config_path = tmp.file("cfg.json");
  opt.out_dir = tmp.file("out");
  auto artifacts = cmd_ab(opt);

  REQUIRE(artifacts.arm_names.size() == 2);
  CHECK(artifacts.arm_metrics[0].total.searches > 0);
  CHECK(artifacts.arm_metrics[1].total.searches > 0);
  CHECK(fs::exists(fs::path(opt.out_dir) / "deltas.csv"));
  std::string deltas = slurp(tmp.file("out/deltas.csv"));
  CHECK(deltas.rfind("day,", 0) == 0);
  CHECK(line_count(deltas) == 3);  // header + one row per day

  // Each arm runs on half the supplier budget.
  CHECK(artifacts.arm_metrics[0]
            .utilization.max_total_accepted_per_second() <= 2);
  CHECK(artifacts.arm_metrics[1]
            .utilization.max_total_accepted_per_second() <= 2);

  // ab demands exactly two arms.
  std::string one_arm = kSmallConfig;
  auto arms_pos = one_arm.find("\"arms\"");
  REQUIRE(arms_pos != std::string::npos);
  one_arm = one_arm.substr(0, arms_pos) +
            "\"arms\": [{\"policy\": \"passive_fixed_ttl\"}]\n}";
  write_text_file(tmp.file("one.json"), one_arm);
  RunOptions bad = opt;
  bad.config_path = tmp.file("one.json");
  CHECK_THROWS_WITH_AS((void)cmd_ab(bad), doctest::Contains("two arms"),
                       std::runtime_error);
}

TEST_CASE("run honours an external evaluation trace") {
  TempDir tmp;
  // Generate a trace, then point the experiment at the file instead of the
  // synthetic stream. Metrics must match the generated-stream run because
  // the config uses the same workload seed.
  write_text_file(tmp.file("cfg.json"), kSmallConfig);
  GenTraceOptions gen;
  gen.config_path = tmp.file("cfg.json");
  gen.out_trace = tmp.file("trace.csv");
  cmd_gen_trace(gen);

  std::string with_trace = kSmallConfig;
  auto brace = with_trace.find('{');
  with_trace.insert(brace + 1,
                    "\n  \"trace\": \"" + tmp.file("trace.csv") + "\",");
  write_text_file(tmp.file("cfg_trace.json"), with_trace);

  RunOptions opt;
  opt.config_path = tmp.file("cfg_trace.json");
  opt.out_dir = tmp.file("out_trace");
  auto from_file = cmd_run(opt);

  RunOptions synth;
  synth.config_path = tmp.file("cfg.json");
  synth.out_dir = tmp.file("out_synth");
  auto from_stream = cmd_run(synth);

  CHECK(slurp(from_file.metrics_csv_path) ==
        slurp(from_stream.metrics_csv_path));
}
