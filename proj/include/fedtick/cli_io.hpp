#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fedtick/engine.hpp"
#include "fedtick/errors.hpp"
#include "fedtick/federation.hpp"
#include "fedtick/runtime_model.hpp"
#include "fedtick/schedules.hpp"
#include "fedtick/theory.hpp"

// Experiment orchestration: JSON config with strict key validation, per-seed
// metric CSVs plus an across-seed mean, and the self-check driver that pits
// the closed-form optimum formulas against brute-force grid oracles.

namespace fedtick {

struct QuadraticFederationSpec {
  int c_total = 20;
  int dim = 10;
  double heterogeneity = 1.0;
  double mu = 1.0;
  double l_smooth = 4.0;
  double sigma = 0.5;
  std::uint64_t seed = 1;
  SpectrumMode mode = SpectrumMode::shared;
};

struct DatasetFederationSpec {
  std::string path;
  ModelKind model = ModelKind::linear_softmax;
  int hidden = 16;
  int c_total = 1;
  int shards_per_client = 1;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  std::optional<std::string> preset;
  ScheduleSpec schedule;
  RuntimeConfig runtime{1.0, 20.0, 5.0, 0.01, 10};
  long long rounds = 1000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};  // mean over 5 trials by default
  std::string out_dir = "out";
  int batch_size = 32;
  int eval_every = 50;
  AggregationMode aggregation = AggregationMode::simple_mean;
  double initial_fill = 0.0;  // x0 = initial_fill * ones
  std::variant<QuadraticFederationSpec, DatasetFederationSpec> federation =
      QuadraticFederationSpec{};
};

// One output row per round. Doubles are used even for the integer-valued
// columns so the across-seed mean file shares the schema.
struct MetricRow {
  long long round = 0;
  double wall_seconds = 0.0;
  double cum_min_train_loss = 0.0;
  double cum_max_val_acc = 0.0;  // oriented score: accuracy, or -loss for quadratic runs
  double k_r = 0.0;
  double eta_r = 0.0;
  double sgd_steps_cum = 0.0;
  double relative_sgd_steps = 0.0;  // vs fixed-K0 over the same rounds
  bool operator==(const MetricRow&) const = default;
};

inline const char* metric_csv_header() {
  return "round,wall_seconds,cum_min_train_loss,cum_max_val_acc,k_r,eta_r,sgd_steps_cum,relative_sgd_steps";
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                           const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("config: unknown key '" + path + it.key() + "'");
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: bad value for key '") + key + "'");
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using nlohmann::json;
  detail::reject_unknown(j,
                         {"preset", "rounds", "seeds", "out_dir", "batch_size", "eval_every",
                          "aggregation", "initial_fill", "schedule", "runtime", "federation"},
                         "");
  ExperimentConfig cfg;

  std::optional<Preset> preset;
  if (j.contains("preset")) {
    const auto name = j.at("preset").get<std::string>();
    preset = find_preset(name);
    if (!preset) throw ConfigError("config: unknown preset '" + name + "'");
    cfg.preset = name;
    cfg.runtime = preset->runtime;
    cfg.schedule.k0 = preset->k0;
    cfg.schedule.eta0 = preset->eta0;
    cfg.rounds = 10000;
  }

  cfg.rounds = detail::get_or<long long>(j, "rounds", cfg.rounds);
  if (cfg.rounds < 1) throw ConfigError("config: rounds >= 1 required");
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw ConfigError("config: at least one seed required");
  }
  cfg.out_dir = detail::get_or<std::string>(j, "out_dir", cfg.out_dir);
  cfg.batch_size = detail::get_or<int>(j, "batch_size", cfg.batch_size);
  cfg.eval_every = detail::get_or<int>(j, "eval_every", cfg.eval_every);
  if (cfg.batch_size < 1 || cfg.eval_every < 1)
    throw ConfigError("config: batch_size and eval_every must be >= 1");
  cfg.initial_fill = detail::get_or<double>(j, "initial_fill", cfg.initial_fill);
  if (j.contains("aggregation")) {
    const auto mode = j.at("aggregation").get<std::string>();
    if (mode == "mean")
      cfg.aggregation = AggregationMode::simple_mean;
    else if (mode == "weighted")
      cfg.aggregation = AggregationMode::weighted;
    else
      throw ConfigError("config: aggregation must be 'mean' or 'weighted'");
  }

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    detail::reject_unknown(s, {"kind", "k0", "eta0", "window_s", "step_divisor", "plateau"},
                           "schedule.");
    if (s.contains("kind")) {
      const auto kind = parse_schedule_kind(s.at("kind").get<std::string>());
      if (!kind) throw ConfigError("config: unknown schedule kind '" +
                                   s.at("kind").get<std::string>() + "'");
      cfg.schedule.kind = *kind;
    }
    cfg.schedule.k0 = detail::get_or<int>(s, "k0", cfg.schedule.k0);
    cfg.schedule.eta0 = detail::get_or<double>(s, "eta0", cfg.schedule.eta0);
    cfg.schedule.window_s = detail::get_or<int>(s, "window_s", cfg.schedule.window_s);
    cfg.schedule.step_divisor = detail::get_or<double>(s, "step_divisor", cfg.schedule.step_divisor);
    if (s.contains("plateau")) {
      const json& p = s.at("plateau");
      detail::reject_unknown(p, {"patience", "min_rel_improvement", "metric"},
                             "schedule.plateau.");
      cfg.schedule.plateau.patience =
          detail::get_or<int>(p, "patience", cfg.schedule.plateau.patience);
      cfg.schedule.plateau.min_rel_improvement = detail::get_or<double>(
          p, "min_rel_improvement", cfg.schedule.plateau.min_rel_improvement);
      if (p.contains("metric")) {
        const auto m = p.at("metric").get<std::string>();
        if (m == "validation-accuracy")
          cfg.schedule.plateau.metric = PlateauMetric::validation_accuracy;
        else if (m == "training-loss")
          cfg.schedule.plateau.metric = PlateauMetric::training_loss;
        else
          throw ConfigError("config: plateau metric must be 'validation-accuracy' or 'training-loss'");
      }
    }
  }

  if (j.contains("runtime")) {
    const json& r = j.at("runtime");
    detail::reject_unknown(r,
                           {"model_megabits", "down_mbps", "up_mbps", "beta_seconds",
                            "n_participants", "beta_jitter_std"},
                           "runtime.");
    cfg.runtime.model_megabits = detail::get_or<double>(r, "model_megabits", cfg.runtime.model_megabits);
    cfg.runtime.down_mbps = detail::get_or<double>(r, "down_mbps", cfg.runtime.down_mbps);
    cfg.runtime.up_mbps = detail::get_or<double>(r, "up_mbps", cfg.runtime.up_mbps);
    cfg.runtime.beta_seconds = detail::get_or<double>(r, "beta_seconds", cfg.runtime.beta_seconds);
    cfg.runtime.n_participants = detail::get_or<int>(r, "n_participants", cfg.runtime.n_participants);
    cfg.runtime.beta_jitter_std =
        detail::get_or<double>(r, "beta_jitter_std", cfg.runtime.beta_jitter_std);
  }
  cfg.runtime.validate();

  if (j.contains("federation")) {
    const json& f = j.at("federation");
    const std::string type = detail::get_or<std::string>(f, "type", "quadratic");
    if (type == "quadratic") {
      detail::reject_unknown(f,
                             {"type", "c_total", "dim", "heterogeneity", "mu", "l_smooth",
                              "sigma", "seed", "spectrum"},
                             "federation.");
      QuadraticFederationSpec q;
      if (preset) q.c_total = preset->c_total;
      q.c_total = detail::get_or<int>(f, "c_total", q.c_total);
      q.dim = detail::get_or<int>(f, "dim", q.dim);
      q.heterogeneity = detail::get_or<double>(f, "heterogeneity", q.heterogeneity);
      q.mu = detail::get_or<double>(f, "mu", q.mu);
      q.l_smooth = detail::get_or<double>(f, "l_smooth", q.l_smooth);
      q.sigma = detail::get_or<double>(f, "sigma", q.sigma);
      q.seed = detail::get_or<std::uint64_t>(f, "seed", q.seed);
      if (f.contains("spectrum")) {
        const auto s = f.at("spectrum").get<std::string>();
        if (s == "shared")
          q.mode = SpectrumMode::shared;
        else if (s == "per-client")
          q.mode = SpectrumMode::per_client;
        else
          throw ConfigError("config: federation spectrum must be 'shared' or 'per-client'");
      }
      cfg.federation = q;
    } else if (type == "dataset") {
      detail::reject_unknown(
          f, {"type", "path", "model", "hidden", "c_total", "shards_per_client", "seed"},
          "federation.");
      DatasetFederationSpec d;
      d.path = detail::get_or<std::string>(f, "path", "");
      if (d.path.empty()) throw ConfigError("config: federation.path required for dataset type");
      const std::string model = detail::get_or<std::string>(f, "model", "linear");
      if (model == "linear")
        d.model = ModelKind::linear_softmax;
      else if (model == "mlp")
        d.model = ModelKind::mlp;
      else
        throw ConfigError("config: federation.model must be 'linear' or 'mlp'");
      d.hidden = detail::get_or<int>(f, "hidden", d.hidden);
      d.c_total = detail::get_or<int>(f, "c_total", d.c_total);
      d.shards_per_client = detail::get_or<int>(f, "shards_per_client", d.shards_per_client);
      d.seed = detail::get_or<std::uint64_t>(f, "seed", d.seed);
      cfg.federation = d;
    } else {
      throw ConfigError("config: federation.type must be 'quadratic' or 'dataset'");
    }
  } else if (preset) {
    QuadraticFederationSpec q;
    q.c_total = preset->c_total;
    cfg.federation = q;
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("load_config: parse error in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::json config_snapshot(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (cfg.preset) j["preset"] = *cfg.preset;
  j["rounds"] = cfg.rounds;
  j["seeds"] = cfg.seeds;
  j["out_dir"] = cfg.out_dir;
  j["batch_size"] = cfg.batch_size;
  j["eval_every"] = cfg.eval_every;
  j["aggregation"] = cfg.aggregation == AggregationMode::weighted ? "weighted" : "mean";
  j["initial_fill"] = cfg.initial_fill;
  j["schedule"] = {
      {"kind", to_string(cfg.schedule.kind)},
      {"k0", cfg.schedule.k0},
      {"eta0", cfg.schedule.eta0},
      {"window_s", cfg.schedule.window_s},
      {"step_divisor", cfg.schedule.step_divisor},
      {"plateau",
       {{"patience", cfg.schedule.plateau.patience},
        {"min_rel_improvement", cfg.schedule.plateau.min_rel_improvement},
        {"metric", cfg.schedule.plateau.metric == PlateauMetric::training_loss
                       ? "training-loss"
                       : "validation-accuracy"}}}};
  j["runtime"] = {{"model_megabits", cfg.runtime.model_megabits},
                  {"down_mbps", cfg.runtime.down_mbps},
                  {"up_mbps", cfg.runtime.up_mbps},
                  {"beta_seconds", cfg.runtime.beta_seconds},
                  {"n_participants", cfg.runtime.n_participants},
                  {"beta_jitter_std", cfg.runtime.beta_jitter_std}};
  if (const auto* q = std::get_if<QuadraticFederationSpec>(&cfg.federation)) {
    j["federation"] = {{"type", "quadratic"},
                       {"c_total", q->c_total},
                       {"dim", q->dim},
                       {"heterogeneity", q->heterogeneity},
                       {"mu", q->mu},
                       {"l_smooth", q->l_smooth},
                       {"sigma", q->sigma},
                       {"seed", q->seed},
                       {"spectrum", q->mode == SpectrumMode::shared ? "shared" : "per-client"}};
  } else {
    const auto& d = std::get<DatasetFederationSpec>(cfg.federation);
    j["federation"] = {{"type", "dataset"},
                       {"path", d.path},
                       {"model", d.model == ModelKind::mlp ? "mlp" : "linear"},
                       {"hidden", d.hidden},
                       {"c_total", d.c_total},
                       {"shards_per_client", d.shards_per_client},
                       {"seed", d.seed}};
  }
  return j;
}

inline Federation build_federation(const ExperimentConfig& cfg) {
  if (const auto* q = std::get_if<QuadraticFederationSpec>(&cfg.federation))
    return make_quadratic_federation(q->c_total, q->dim, q->heterogeneity, q->mu, q->l_smooth,
                                     q->sigma, q->seed, q->mode);
  const auto& d = std::get<DatasetFederationSpec>(cfg.federation);
  auto ds = std::make_shared<Dataset>(load_dataset(d.path));
  const ParamLayout layout = d.model == ModelKind::mlp
                                 ? ParamLayout::mlp(ds->n_features, d.hidden, ds->n_classes)
                                 : ParamLayout::linear(ds->n_features, ds->n_classes);
  return make_dataset_federation(std::move(ds), d.c_total, d.shards_per_client, d.seed, layout);
}

// MetricRows from a trace. The validation column is an oriented score (larger
// is better): top-1 accuracy for dataset runs, negated exact loss for
// quadratic runs. relative_sgd_steps compares against a fixed-K0 run over the
// same number of rounds.
inline std::vector<MetricRow> metric_rows(const TrainingTrace& trace, bool quadratic_fed) {
  std::vector<MetricRow> rows;
  rows.reserve(trace.records.size());
  double min_loss = std::numeric_limits<double>::infinity();
  double best_val = -std::numeric_limits<double>::infinity();
  const double k0 = static_cast<double>(trace.config.schedule.k0);
  const double n = static_cast<double>(trace.config.runtime.n_participants);
  for (const RoundRecord& rec : trace.records) {
    min_loss = std::min(min_loss, rec.mean_first_step_loss);
    if (rec.val_metric.has_value()) {
      const double score = quadratic_fed ? -*rec.val_metric : *rec.val_metric;
      best_val = std::max(best_val, score);
    }
    MetricRow row;
    row.round = rec.r;
    row.wall_seconds = rec.wall_seconds_cum;
    row.cum_min_train_loss = min_loss;
    row.cum_max_val_acc = best_val;
    row.k_r = static_cast<double>(rec.k_r);
    row.eta_r = rec.eta_r;
    row.sgd_steps_cum = static_cast<double>(rec.sgd_steps_cum);
    row.relative_sgd_steps =
        row.sgd_steps_cum / (k0 * n * static_cast<double>(rec.r));
    rows.push_back(row);
  }
  return rows;
}

inline void write_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_csv: cannot open '" + path + "'");
  out << metric_csv_header() << "\n";
  for (const MetricRow& r : rows) {
    out << r.round << ',' << detail::fmt_double(r.wall_seconds) << ','
        << detail::fmt_double(r.cum_min_train_loss) << ','
        << detail::fmt_double(r.cum_max_val_acc) << ',' << detail::fmt_double(r.k_r) << ','
        << detail::fmt_double(r.eta_r) << ',' << detail::fmt_double(r.sgd_steps_cum) << ','
        << detail::fmt_double(r.relative_sgd_steps) << "\n";
  }
}

inline std::vector<MetricRow> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("read_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != metric_csv_header())
    throw ConfigError("read_csv: '" + path + "' has an unexpected header");
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MetricRow r;
    std::istringstream ss(line);
    std::string field;
    const auto next = [&]() -> double {
      if (!std::getline(ss, field, ',')) throw ConfigError("read_csv: short row in '" + path + "'");
      return std::strtod(field.c_str(), nullptr);
    };
    r.round = static_cast<long long>(next());
    r.wall_seconds = next();
    r.cum_min_train_loss = next();
    r.cum_max_val_acc = next();
    r.k_r = next();
    r.eta_r = next();
    r.sgd_steps_cum = next();
    r.relative_sgd_steps = next();
    rows.push_back(r);
  }
  return rows;
}

// Per-round arithmetic mean across seeds (all traces share the round grid).
inline std::vector<MetricRow> aggregate_mean(const std::vector<std::vector<MetricRow>>& per_seed) {
  if (per_seed.empty()) throw ContractViolation("aggregate_mean: no inputs");
  const std::size_t n_rows = per_seed.front().size();
  for (const auto& rows : per_seed)
    if (rows.size() != n_rows) throw ContractViolation("aggregate_mean: row-count mismatch");
  std::vector<MetricRow> mean(n_rows);
  const double n = static_cast<double>(per_seed.size());
  for (std::size_t i = 0; i < n_rows; ++i) {
    MetricRow& m = mean[i];
    m.round = per_seed.front()[i].round;
    for (const auto& rows : per_seed) {
      if (rows[i].round != m.round) throw ContractViolation("aggregate_mean: round grid mismatch");
      m.wall_seconds += rows[i].wall_seconds;
      m.cum_min_train_loss += rows[i].cum_min_train_loss;
      m.cum_max_val_acc += rows[i].cum_max_val_acc;
      m.k_r += rows[i].k_r;
      m.eta_r += rows[i].eta_r;
      m.sgd_steps_cum += rows[i].sgd_steps_cum;
      m.relative_sgd_steps += rows[i].relative_sgd_steps;
    }
    m.wall_seconds /= n;
    m.cum_min_train_loss /= n;
    m.cum_max_val_acc /= n;
    m.k_r /= n;
    m.eta_r /= n;
    m.sgd_steps_cum /= n;
    m.relative_sgd_steps /= n;
  }
  return mean;
}

inline int max_worker_threads() {
  if (const char* env = std::getenv("FEDTICK_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct ExperimentResult {
  std::vector<std::string> per_seed_files;
  std::string mean_file;
  std::string snapshot_file;
  std::vector<std::vector<MetricRow>> per_seed_rows;
};

// Run every seed (in parallel up to FEDTICK_THREADS), write one CSV per seed
// plus the across-seed mean and a JSON snapshot of the resolved config.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const Federation fed = build_federation(cfg);
  RunOptions options;
  options.batch_size = cfg.batch_size;
  options.eval_every = cfg.eval_every;
  options.aggregation = cfg.aggregation;
  if (cfg.initial_fill != 0.0)
    options.initial =
        ParamVector(Vector(fed.layout.param_count(), cfg.initial_fill), fed.layout);

  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<std::vector<MetricRow>> per_seed(n_seeds);
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mu;
  const int n_workers = std::min<int>(max_worker_threads(), static_cast<int>(n_seeds));
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n_seeds || failed.load()) return;
      try {
        const TrainingTrace trace = run_training(fed, cfg.schedule, cfg.runtime, cfg.rounds,
                                                 options, cfg.seeds[i]);
        per_seed[i] = metric_rows(trace, fed.is_quadratic());
      } catch (const std::exception& e) {
        failed.store(true);
        const std::lock_guard<std::mutex> lock(error_mu);
        if (error.empty()) error = e.what();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < n_workers; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failed.load()) throw ConfigError("run_experiment: " + error);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  ExperimentResult result;
  result.per_seed_rows = per_seed;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    const std::string path =
        (fs::path(cfg.out_dir) / ("metrics_seed" + std::to_string(cfg.seeds[i]) + ".csv")).string();
    write_csv(path, per_seed[i]);
    result.per_seed_files.push_back(path);
  }
  result.mean_file = (fs::path(cfg.out_dir) / "metrics_mean.csv").string();
  write_csv(result.mean_file, aggregate_mean(per_seed));
  result.snapshot_file = (fs::path(cfg.out_dir) / "config_snapshot.json").string();
  std::ofstream snap(result.snapshot_file, std::ios::binary);
  snap << config_snapshot(cfg).dump(2) << "\n";
  return result;
}

// All eight schedule rules with the shared config, one subdirectory each.
inline std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base) {
  std::vector<ExperimentResult> results;
  for (ScheduleKind kind : all_schedule_kinds()) {
    ExperimentConfig cfg = base;
    cfg.schedule.kind = kind;
    cfg.out_dir = (std::filesystem::path(base.out_dir) / to_string(kind)).string();
    results.push_back(run_experiment(cfg));
  }
  return results;
}

// --- theory self-check -----------------------------------------------------

struct TheoryReport {
  int samples = 0;
  double k_argmin_agreement = 0.0;
  double eta_argmin_agreement = 0.0;
  double convexity_pass_rate = 0.0;
  double bound_violation_rate = 0.0;
  double eta_cap_exceeded_fraction = 0.0;  // informational

  static constexpr double kArgminThreshold = 0.99;

  bool pass() const {
    return k_argmin_agreement >= kArgminThreshold && eta_argmin_agreement >= kArgminThreshold &&
           convexity_pass_rate == 1.0 && bound_violation_rate == 0.0;
  }
};

inline nlohmann::json to_json(const TheoryReport& r) {
  return nlohmann::json{{"samples", r.samples},
                        {"k_argmin_agreement", r.k_argmin_agreement},
                        {"eta_argmin_agreement", r.eta_argmin_agreement},
                        {"convexity_pass_rate", r.convexity_pass_rate},
                        {"bound_violation_rate", r.bound_violation_rate},
                        {"eta_cap_exceeded_fraction", r.eta_cap_exceeded_fraction},
                        {"thresholds",
                         {{"argmin_agreement", TheoryReport::kArgminThreshold},
                          {"convexity_pass_rate", 1.0},
                          {"bound_violation_rate", 0.0}}},
                        {"pass", r.pass()}};
}

// Pit the closed-form optimum formulas against exhaustive grid minimization of
// the restart bound, check its convexity by second finite differences, and
// spot-check bound validity with small Monte-Carlo federation sweeps.
inline TheoryReport verify_theory(int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw ContractViolation("verify_theory: sample_count >= 1 required");
  Rng rng(derive_stream(seed, StreamTag::generic, 0xfeed));
  TheoryReport report;
  report.samples = sample_count;

  int k_ok = 0, eta_ok = 0, convex_ok = 0, eta_over_cap = 0;
  for (int i = 0; i < sample_count; ++i) {
    BoundInputs in = random_bound_inputs(rng);

    const double k_star = optimal_k(in);
    const int k_max = std::max(20, static_cast<int>(10.0 * k_star) + 10);
    const int k_grid = grid_argmin_k(in, k_max);
    const int lo = std::max(1, static_cast<int>(std::floor(k_star)));
    const int hi = static_cast<int>(std::ceil(k_star));
    if (k_grid == lo || k_grid == hi) ++k_ok;

    const double eta_star = optimal_eta(in);
    if (eta_star > eta_premise_cap(in.constants.l_smooth)) ++eta_over_cap;
    const int points = 2000;
    const double glo = eta_star / 100.0, ghi = eta_star * 100.0;
    const double eta_grid = grid_argmin_eta(in, glo, ghi, points);
    const double step = std::log(ghi / glo) / (points - 1);
    if (std::abs(std::log(eta_grid / eta_star)) <= step * (1.0 + 1e-9)) ++eta_ok;

    // convexity via second central differences, several probe points
    bool convex = true;
    BoundInputs probe = in;
    for (int k : {2, 4, 8, std::max(2, static_cast<int>(std::lround(k_star)))}) {
      probe.k_fixed = k - 1;
      const double a = restart_bound(probe);
      probe.k_fixed = k;
      const double b = restart_bound(probe);
      probe.k_fixed = k + 1;
      const double c = restart_bound(probe);
      if (!(a - 2.0 * b + c > 0.0)) convex = false;
    }
    probe.k_fixed = in.k_fixed;
    for (double e : {eta_star * 0.5, eta_star, eta_star * 2.0}) {
      const double h = e * 1e-2;  // beats cancellation in the second difference
      probe.eta = e - h;
      const double a = restart_bound(probe, false);
      probe.eta = e;
      const double b = restart_bound(probe, false);
      probe.eta = e + h;
      const double c = restart_bound(probe, false);
      if (!(a - 2.0 * b + c > 0.0)) convex = false;
    }
    if (convex) ++convex_ok;
  }
  report.k_argmin_agreement = static_cast<double>(k_ok) / sample_count;
  report.eta_argmin_agreement = static_cast<double>(eta_ok) / sample_count;
  report.convexity_pass_rate = static_cast<double>(convex_ok) / sample_count;
  report.eta_cap_exceeded_fraction = static_cast<double>(eta_over_cap) / sample_count;

  // Monte-Carlo bound validity on small synthetic federations.
  const int fed_checks = std::clamp(sample_count / 100, 1, 10);
  int violations = 0, configs = 0;
  for (int i = 0; i < fed_checks; ++i) {
    const double mu = 0.5 + rng.uniform01() * 1.5;
    const double kappa = 1.0 + rng.uniform01() * 7.0;
    const int c_total = 5 + static_cast<int>(rng.uniform_below(11));
    const int dim = 2 + static_cast<int>(rng.uniform_below(5));
    const Federation fed =
        make_quadratic_federation(c_total, dim, rng.uniform01() * 2.0, mu, mu * kappa,
                                  rng.uniform01(), rng.raw());
    const int n_sample = std::max(1, c_total / 2);
    const double eta = 1.0 / (8.0 * fed.constants->l_smooth);
    const ParamVector x0(Vector(static_cast<std::size_t>(dim), 1.0), fed.layout);
    RuntimeConfig rt{1.0, 20.0, 5.0, 0.01, n_sample};
    for (int k : {1, 4}) {
      const long long rounds = 150;
      double mean_min = 0.0;
      const int n_seeds = 5;
      for (int s = 0; s < n_seeds; ++s) {
        ScheduleSpec spec;
        spec.kind = ScheduleKind::fixed;
        spec.k0 = k;
        spec.eta0 = eta;
        RunOptions opt;
        opt.record_params = true;
        opt.eval_every = 1000000;
        opt.initial = x0;
        const TrainingTrace trace = run_training(fed, spec, rt, rounds, opt,
                                                 derive_stream(seed, StreamTag::generic, i, s));
        mean_min += empirical_min_grad_norm(trace, fed);
      }
      mean_min /= n_seeds;
      BoundInputs in;
      in.constants = with_start(fed, x0, n_sample);
      in.eta = eta;
      in.k_sequence.assign(static_cast<std::size_t>(rounds), k);
      const double bound = min_grad_norm_bound(in);
      ++configs;
      if (mean_min > bound) ++violations;
    }
  }
  report.bound_violation_rate = static_cast<double>(violations) / configs;
  return report;
}

}  // namespace fedtick
