#include "pricesim/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "pricesim/csv.hpp"

namespace pricesim {

namespace {

constexpr std::uint64_t kTrainingSalt = fnv1a64("training");
constexpr std::uint64_t kTrainingPriceTag = fnv1a64("train-prices");

ExperimentConfig load_config_or_default(const std::string& path,
                                        std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg;
  if (!path.empty()) {
    cfg = load_experiment_config(path);
  } else {
    cfg.workload = default_workload_config();
    cfg.price_process.anchor_date = cfg.workload.start_date;
  }
  if (seed) {
    cfg.seed = *seed;
    cfg.workload.seed = *seed;
  }
  return cfg;
}

CivilDate parse_date_or_throw(const std::string& text, const char* what) {
  auto date = parse_date(text);
  if (!date)
    throw std::runtime_error(std::string(what) + ": bad date '" + text + "'");
  return *date;
}

// Training world: same itinerary universe, its own event stream and its own
// "historical" price behavior.
struct TrainingData {
  std::vector<FetchRecord> fetch_log;
  EstimateResult estimates;
};

TrainingData run_training(const ExperimentConfig& cfg) {
  ItineraryPool pool = build_itinerary_pool(cfg.workload);
  PriceBook history(cfg.price_process, cfg.training_horizon,
                    mix64(cfg.seed, kTrainingPriceTag));
  TrainingData out;
  out.fetch_log = synthesize_fetch_log(pool, history, cfg.training_horizon,
                                       cfg.poll_interval, cfg.seed);

  WorkloadConfig training_workload = cfg.workload;
  training_workload.horizon = cfg.training_horizon;
  training_workload.stream_salt = kTrainingSalt;
  auto stream = generate_searches(training_workload);

  const WorkloadConfig& w = cfg.workload;
  out.estimates = estimate_probabilities(
      *stream, out.fetch_log,
      [&w](const Itinerary& it) { return booking_propensity(w, it); },
      cfg.workload.start_date, cfg.training_horizon, cfg.seed, {},
      cfg.shrinkage_weight);
  return out;
}

RunInputs make_inputs(const ExperimentConfig& cfg, const PriceBook& prices,
                      const TrainingData& training) {
  RunInputs in;
  if (!cfg.trace_path.empty()) {
    std::string path = cfg.trace_path;
    in.trace_factory = [path] { return ingest_trace(path); };
  } else {
    WorkloadConfig w = cfg.workload;
    in.trace_factory = [w] { return generate_searches(w); };
  }
  in.supplier = cfg.supplier;
  in.prices = &prices;
  in.ttl_table = &training.estimates.model.table;
  in.value_table = &training.estimates.table;
  const WorkloadConfig& w = cfg.workload;
  in.booking_propensity = [w](const Itinerary& it) {
    return booking_propensity(w, it);
  };
  in.start_date = cfg.workload.start_date;
  in.horizon = cfg.horizon;
  in.seed = cfg.seed;
  return in;
}

void write_plot_script(const std::string& out_dir,
                       const std::vector<std::string>& arms) {
  std::string gp =
      "# gnuplot script: daily bookings (bars) and cache hit rate (lines)\n"
      "set terminal pngcairo size 1100,520\n"
      "set output 'metrics.png'\n"
      "set datafile separator ','\n"
      "set key outside\n"
      "set xlabel 'day'\n"
      "set ylabel 'bookings'\n"
      "set y2label 'cache hit rate'\n"
      "set y2range [0:1]\n"
      "set y2tics\n"
      "set style data histograms\n"
      "set style fill solid 0.6\n"
      "set boxwidth 0.8\n"
      "plot ";
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (i) gp += ", \\\n     ";
    gp += "'arm_" + arms[i] + ".dat' using 2:xtic(1) title '" + arms[i] +
          " bookings', \\\n     '' using 0:3 axes x1y2 with linespoints "
          "title '" +
          arms[i] + " hit rate'";
  }
  gp += "\n";
  write_text_file(out_dir + "/plot.gp", gp);
}

void write_arm_dat(const std::string& out_dir, const std::string& arm,
                   const Metrics& m) {
  std::string dat = "day,bookings,hit_rate\n";
  char buf[96];
  for (std::size_t d = 0; d < m.days.size(); ++d) {
    std::snprintf(buf, sizeof buf, "%zu,%llu,%.6f\n", d,
                  static_cast<unsigned long long>(m.days[d].bookings),
                  m.days[d].cache_hit_rate());
    dat += buf;
  }
  write_text_file(out_dir + "/arm_" + arm + ".dat", dat);
}

std::string arm_summary_line(const std::string& arm, const Metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-28s searches=%-9llu hit_rate=%.4f attempts=%-7llu "
                "bookings=%-7llu accuracy=%.4f rejected=%llu\n",
                arm.c_str(),
                static_cast<unsigned long long>(m.total.searches),
                m.total.cache_hit_rate(),
                static_cast<unsigned long long>(m.total.booking_attempts),
                static_cast<unsigned long long>(m.total.bookings),
                m.total.accuracy_at_booking(),
                static_cast<unsigned long long>(m.total.fetches_rejected));
  return buf;
}

RunArtifacts run_experiment(const RunOptions& options, bool paired_ab) {
  if (options.config_path.empty())
    throw std::runtime_error("run: --config is required");
  ExperimentConfig cfg =
      load_config_or_default(options.config_path, options.seed);
  if (cfg.arms.empty())
    throw std::runtime_error("config: no policy arms declared");
  if (paired_ab && cfg.arms.size() != 2)
    throw std::runtime_error("ab: config must declare exactly two arms");

  std::filesystem::create_directories(options.out_dir);
  TrainingData training = run_training(cfg);
  PriceBook prices(cfg.price_process, cfg.horizon, cfg.seed);
  RunInputs inputs = make_inputs(cfg, prices, training);

  write_text_file(options.out_dir + "/ttl_table.csv",
                  training.estimates.model.table.to_csv());
  write_text_file(options.out_dir + "/value_table.csv",
                  training.estimates.table.to_csv());

  RunArtifacts artifacts;
  std::string metrics_csv = Metrics::csv_header();
  if (paired_ab) {
    AbResult result = ab_compare(inputs, cfg.arms[0], cfg.arms[1]);
    write_text_file(options.out_dir + "/deltas.csv", result.deltas_csv());
    artifacts.arm_names = {result.arm_a_name, result.arm_b_name};
    artifacts.arm_metrics = {std::move(result.arm_a), std::move(result.arm_b)};
  } else {
    for (const PolicySpec& arm : cfg.arms) {
      artifacts.arm_names.push_back(arm.name());
      artifacts.arm_metrics.push_back(run(inputs, arm));
    }
  }

  for (std::size_t i = 0; i < artifacts.arm_names.size(); ++i) {
    const std::string& arm = artifacts.arm_names[i];
    const Metrics& m = artifacts.arm_metrics[i];
    m.append_csv_rows(arm, metrics_csv);
    write_text_file(options.out_dir + "/qps_" + arm + ".csv",
                    m.utilization.to_csv());
    write_arm_dat(options.out_dir, arm, m);
    artifacts.summary += arm_summary_line(arm, m);
  }
  artifacts.metrics_csv_path = options.out_dir + "/metrics.csv";
  write_text_file(artifacts.metrics_csv_path, metrics_csv);
  write_plot_script(options.out_dir, artifacts.arm_names);
  return artifacts;
}

}  // namespace

GenTraceSummary cmd_gen_trace(const GenTraceOptions& options) {
  if (options.out_trace.empty())
    throw std::runtime_error("gen-trace: --out is required");
  ExperimentConfig cfg =
      load_config_or_default(options.config_path, options.seed);
  GenTraceSummary summary;
  {
    auto stream = generate_searches(cfg.workload);
    std::string csv = trace_to_csv(*stream);
    summary.events = static_cast<std::uint64_t>(
        std::count(csv.begin(), csv.end(), '\n') - 1);
    write_text_file(options.out_trace, csv);
  }
  if (!options.out_fetch_log.empty()) {
    SimTime poll =
        options.poll_interval > 0 ? options.poll_interval : cfg.poll_interval;
    ItineraryPool pool = build_itinerary_pool(cfg.workload);
    PriceBook history(cfg.price_process, cfg.workload.horizon,
                      mix64(cfg.seed, kTrainingPriceTag));
    auto log = synthesize_fetch_log(pool, history, cfg.workload.horizon, poll,
                                    cfg.seed);
    summary.fetch_records = log.size();
    write_text_file(options.out_fetch_log, fetch_log_to_csv(log));
  }
  return summary;
}

std::string BuildTtlSummary::text() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "clusters=%zu (self-assigned=%zu) duration_samples=%zu "
                "gap_samples=%zu ttl_range=[%lld,%lld]s\n",
                clusters, self_assigned, duration_samples, gap_samples,
                static_cast<long long>(min_ttl),
                static_cast<long long>(max_ttl));
  return buf;
}

BuildTtlSummary cmd_build_ttl(const BuildTtlOptionsCli& options) {
  if (options.fetch_log_path.empty() || options.out_path.empty())
    throw std::runtime_error("build-ttl: fetch log and --out are required");
  CivilDate start = parse_date_or_throw(options.start_date, "build-ttl");
  std::vector<FetchRecord> log = load_fetch_log(options.fetch_log_path);
  if (log.empty())
    throw std::runtime_error("build-ttl: no duration samples (empty log)");

  std::vector<SearchObservation> searches;
  if (!options.trace_path.empty()) {
    auto stream = ingest_trace(options.trace_path);
    while (auto e = stream->next())
      searches.push_back(
          SearchObservation{e->search.timestamp, e->search.itinerary});
  } else {
    // No search history: treat each polled fetch as a search arrival.
    searches.reserve(log.size());
    for (const auto& rec : log)
      searches.push_back(SearchObservation{rec.timestamp, rec.itinerary});
  }

  TtlModelOptions model_options;
  model_options.min_duration_samples = options.min_duration_samples;
  TtlModel model = build_ttl_model(log, searches, start, model_options);
  if (model.clusters.empty())
    throw std::runtime_error("build-ttl: no duration samples");

  BuildTtlSummary summary;
  summary.clusters = model.clusters.size();
  summary.min_ttl = model.table.rows().front().ttl_seconds;
  for (const Cluster& c : model.clusters) {
    summary.duration_samples += c.duration_samples.size();
    summary.gap_samples += c.gap_samples.size();
    if (c.duration_samples.size() >= model_options.min_duration_samples &&
        c.gap_samples.size() >= model_options.min_gap_samples)
      ++summary.self_assigned;
    summary.min_ttl = std::min(summary.min_ttl, c.assigned_ttl);
    summary.max_ttl = std::max(summary.max_ttl, c.assigned_ttl);
  }
  write_text_file(options.out_path, model.table.to_csv());
  return summary;
}

std::string BuildScheduleSummary::text() const {
  char buf[224];
  std::snprintf(buf, sizeof buf,
                "selected=%zu total_sends=%llu budget=%llu "
                "max_second_load=%u\n",
                selected, static_cast<unsigned long long>(total_sends),
                static_cast<unsigned long long>(budget), max_second_load);
  return buf;
}

BuildScheduleSummary cmd_build_schedule(const BuildScheduleOptions& options) {
  if (options.mu <= 0) throw std::runtime_error("build-schedule: mu must be > 0");
  if (options.ttl_table_path.empty() || options.value_table_path.empty() ||
      options.out_plan.empty())
    throw std::runtime_error(
        "build-schedule: ttl table, value table and --out are required");
  CivilDate plan_date = parse_date_or_throw(options.plan_date, "build-schedule");
  TtlTable ttl_table = TtlTable::from_csv_file(options.ttl_table_path);
  ValueTable value_table = ValueTable::from_csv_file(options.value_table_path);

  std::vector<ItineraryPlanEntry> entries;
  for (const ValueTable::Row& row : value_table.rows) {
    int lead = row.itinerary.criteria.checkin - plan_date;
    if (lead < 0) continue;
    double value = row.daily_searches * row.p_b * row.p_a;
    if (value <= 0) continue;
    SimTime ttl = ttl_table.lookup(lead, true);
    entries.push_back(make_plan_entry(row.itinerary, ttl, value));
  }
  std::int64_t budget =
      static_cast<std::int64_t>(options.mu) * kSecondsPerDay;
  auto selected = select_top_requests(std::move(entries), budget);
  SchedulePlan plan = build_schedule(selected, options.mu);
  PlanAudit audit = audit_plan(plan, options.mu);
  if (!audit.ok)
    throw std::runtime_error("build-schedule: audit failed: " +
                             (audit.violations.empty()
                                  ? std::string("unknown")
                                  : audit.violations.front()));
  write_text_file(options.out_plan, plan.to_csv());

  BuildScheduleSummary summary;
  summary.selected = selected.size();
  summary.total_sends = plan.total_sends;
  summary.budget = static_cast<std::uint64_t>(budget);
  summary.max_second_load = audit.max_second_load;
  return summary;
}

PlanAudit cmd_audit_plan(const AuditPlanOptions& options) {
  if (options.plan_path.empty())
    throw std::runtime_error("audit-plan: plan path is required");
  if (options.mu <= 0) throw std::runtime_error("audit-plan: mu must be > 0");
  CivilDate plan_date = parse_date_or_throw(options.plan_date, "audit-plan");
  TtlTable table;
  const TtlTable* table_ptr = nullptr;
  if (!options.ttl_table_path.empty()) {
    table = TtlTable::from_csv_file(options.ttl_table_path);
    table_ptr = &table;
  }
  SchedulePlan plan =
      SchedulePlan::from_csv_file(options.plan_path, table_ptr, plan_date);
  return audit_plan(plan, options.mu);
}

RunArtifacts cmd_run(const RunOptions& options) {
  return run_experiment(options, false);
}

RunArtifacts cmd_ab(const RunOptions& options) {
  return run_experiment(options, true);
}

}  // namespace pricesim
