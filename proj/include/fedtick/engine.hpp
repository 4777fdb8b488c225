#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fedtick/errors.hpp"
#include "fedtick/federation.hpp"
#include "fedtick/objectives.hpp"
#include "fedtick/rng.hpp"
#include "fedtick/runtime_model.hpp"
#include "fedtick/schedules.hpp"

// The federated-averaging loop: sample clients, run K_r local SGD steps each
// from the downloaded global model, average the returned models, and record a
// per-round trace. Client updates use per-(round, client) RNG substreams and
// aggregation reduces in ascending client-id order, so traces are bit-for-bit
// reproducible regardless of execution order.

namespace fedtick {

struct RoundRecord {
  long long r = 0;
  int k_r = 1;
  double eta_r = 0.0;
  std::vector<int> client_ids;
  double mean_first_step_loss = 0.0;
  std::optional<double> val_metric;
  double wall_seconds_cum = 0.0;
  long long sgd_steps_cum = 0;
};

enum class AggregationMode { simple_mean, weighted };

struct RunOptions {
  int batch_size = 32;
  int eval_every = 50;
  AggregationMode aggregation = AggregationMode::simple_mean;
  bool record_params = false;  // keep per-round global iterates in the trace
  std::optional<ParamVector> initial;  // default: see default_initial_params
};

struct TraceConfig {
  ScheduleSpec schedule;
  RuntimeConfig runtime;
  long long rounds = 0;
  std::uint64_t seed = 0;
  RunOptions options;
};

struct TrainingTrace {
  std::vector<RoundRecord> records;  // indexed 1..R contiguously
  ParamVector final_params;
  TraceConfig config;
  std::vector<ParamVector> param_history;  // filled when options.record_params
};

struct RoundResult {
  ParamVector global;
  std::vector<int> client_ids;
  std::vector<double> first_step_losses;  // aligned with client_ids
};

// One communication round: sample n_sample distinct clients uniformly, run
// exactly k_r SGD steps per client from the downloaded global model, average.
// Each client's loss on its first minibatch (evaluated at the global model) is
// reported back for the error-based schedules.
inline RoundResult run_round(const ParamVector& global, const Federation& fed, int k_r,
                             double eta_r, int batch_size, int n_sample,
                             std::uint64_t master_seed, long long round_index,
                             AggregationMode aggregation = AggregationMode::simple_mean) {
  require_same_layout(global, fed.layout, "run_round");
  if (k_r < 1) throw ContractViolation("run_round: k_r >= 1 required");
  if (n_sample < 1 || n_sample > fed.c_total())
    throw ConfigError("run_round: n_sample " + std::to_string(n_sample) +
                      " outside [1, " + std::to_string(fed.c_total()) + "]");

  Rng sampler(derive_stream(master_seed, StreamTag::client_sampling,
                            static_cast<std::uint64_t>(round_index)));
  RoundResult out;
  out.client_ids = sample_without_replacement(fed.c_total(), n_sample, sampler);
  out.first_step_losses.reserve(out.client_ids.size());

  Vector sum(global.size(), 0.0);
  double weight_sum = 0.0;
  for (int id : out.client_ids) {
    const Client& client = fed.clients[static_cast<std::size_t>(id)];
    Rng crng(derive_stream(master_seed, StreamTag::client_local,
                           static_cast<std::uint64_t>(round_index),
                           static_cast<std::uint64_t>(id)));
    Vector x = global.values;
    for (int k = 1; k <= k_r; ++k) {
      const Minibatch batch = sample_minibatch(fed, client, batch_size, crng);
      ParamVector xp(x, fed.layout);
      if (k == 1) out.first_step_losses.push_back(loss(fed.kind, xp, batch));
      const ParamVector g = grad(fed.kind, xp, batch);
      axpy(-eta_r, g.values, x);
    }
    const double w = aggregation == AggregationMode::weighted ? client.weight_p : 1.0;
    axpy(w, x, sum);
    weight_sum += w;
  }
  for (double& v : sum) v /= weight_sum;
  out.global = ParamVector(std::move(sum), fed.layout);
  return out;
}

enum class Metric { loss, top1_accuracy };

// Default initial model when the caller supplies none: the origin for
// quadratic objectives, seeded fan-in-scaled Gaussian weights for the learned
// models (an all-zero ReLU network has identically zero gradients and would
// never move).
inline ParamVector default_initial_params(const ParamLayout& layout, std::uint64_t seed) {
  if (layout.kind == ModelKind::quadratic) return ParamVector::zeros(layout);
  Rng rng(derive_stream(seed, StreamTag::param_init));
  Vector w(layout.param_count());
  if (layout.kind == ModelKind::linear_softmax) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layout.d0));
    for (double& v : w) v = scale * rng.normal();
  } else {
    const std::size_t first = static_cast<std::size_t>(layout.d0) * static_cast<std::size_t>(layout.d1);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(layout.d0));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(layout.d1));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (i < first ? s1 : s2) * rng.normal();
  }
  return ParamVector(std::move(w), layout);
}

// Deterministic full-pass evaluation of a classification model over a raw
// dataset (e.g. a held-out validation file).
inline double evaluate(const ParamVector& params, const Dataset& ds, Metric metric) {
  if (params.layout.kind == ModelKind::quadratic)
    throw UnsupportedOperation("evaluate: quadratic models have no dataset to score");
  if (params.layout.input_dim() != ds.n_features)
    throw ContractViolation("evaluate: model input dim " +
                            std::to_string(params.layout.input_dim()) + " vs dataset features " +
                            std::to_string(ds.n_features));
  if (params.layout.num_classes() < ds.n_classes)
    throw ContractViolation("evaluate: dataset has more classes than the model");
  if (metric == Metric::loss) {
    Minibatch all;
    all.batch = ds.n_rows;
    all.features = ds.n_features;
    all.inputs = ds.features;
    all.targets = ds.labels;
    return loss(params.layout.kind, params, all);
  }
  // top-1 accuracy
  int hits = 0;
  detail::MlpScratch scratch;
  const int classes = params.layout.num_classes();
  std::vector<double> logits(static_cast<std::size_t>(classes));
  for (int i = 0; i < ds.n_rows; ++i) {
    const double* x = ds.row(i);
    std::fill(logits.begin(), logits.end(), 0.0);
    if (params.layout.kind == ModelKind::linear_softmax) {
      const int feats = params.layout.d0;
      for (int f = 0; f < feats; ++f) {
        const double xf = x[f];
        if (xf == 0.0) continue;
        const double* row = params.values.data() + static_cast<std::size_t>(f) * classes;
        for (int c = 0; c < classes; ++c) logits[static_cast<std::size_t>(c)] += xf * row[c];
      }
    } else {
      detail::mlp_forward(params.layout, params.values, x, 0, scratch);
      logits = scratch.probs;
    }
    int best = 0;
    for (int c = 1; c < classes; ++c)
      if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(best)]) best = c;
    if (best == ds.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / ds.n_rows;
}

// Full-pass evaluation over the federation's own pooled samples.
inline double evaluate(const ParamVector& params, const Federation& fed, Metric metric) {
  require_same_layout(params, fed.layout, "evaluate");
  if (fed.is_quadratic()) {
    if (metric == Metric::top1_accuracy)
      throw UnsupportedOperation("evaluate: accuracy undefined for quadratic federations");
    return global_loss(fed, params.values);
  }
  return evaluate(params, *fed.dataset, metric);
}

// Full training run: schedules supply (K_r, eta_r) each round, the runtime
// model advances the simulated clock, the loss estimator and plateau detector
// are fed as the run progresses. Deterministic given (federation, config, seed).
inline TrainingTrace run_training(const Federation& fed, const ScheduleSpec& schedule_in,
                                  const RuntimeConfig& runtime, long long rounds,
                                  const RunOptions& options, std::uint64_t seed) {
  if (rounds < 1) throw ContractViolation("run_training: rounds >= 1 required");
  if (options.eval_every < 1 || options.batch_size < 1)
    throw ContractViolation("run_training: eval_every and batch_size must be >= 1");
  runtime.validate();
  const ScheduleSpec schedule = ScheduleSpec::validated(schedule_in);
  const int n_sample = runtime.n_participants;
  if (n_sample > fed.c_total())
    throw ConfigError("run_training: n_participants " + std::to_string(n_sample) +
                      " exceeds federation size " + std::to_string(fed.c_total()));

  ParamVector x =
      options.initial.has_value() ? *options.initial : default_initial_params(fed.layout, seed);
  require_same_layout(x, fed.layout, "run_training");

  LossEstimator estimator(schedule.window_s);
  // The detector watches either the validation series (at eval points) or the
  // rolling training-loss estimate (every warmed-up round). For quadratic
  // federations the validation series is itself a loss, so flip orientation.
  const bool plateau_on_validation =
      schedule.plateau.metric == PlateauMetric::validation_accuracy;
  PlateauSpec plateau = schedule.plateau;
  if (fed.is_quadratic()) plateau.metric = PlateauMetric::training_loss;
  PlateauDetector detector(plateau);

  const Metric val_metric_kind =
      fed.is_quadratic() ? Metric::loss : Metric::top1_accuracy;

  TrainingTrace trace;
  trace.config = TraceConfig{schedule, runtime, rounds, seed, options};
  trace.records.reserve(static_cast<std::size_t>(rounds));
  if (options.record_params) trace.param_history.reserve(static_cast<std::size_t>(rounds));

  double wall = 0.0;
  long long steps = 0;
  for (long long r = 1; r <= rounds; ++r) {
    const bool plateaued = detector.fired();
    const int k_r = k_for_round(schedule, r, estimator, plateaued);
    const double eta_r = eta_for_round(schedule, r, estimator, plateaued);

    RoundResult res = run_round(x, fed, k_r, eta_r, options.batch_size, n_sample, seed, r,
                                options.aggregation);
    x = std::move(res.global);
    record_round_loss(estimator, res.first_step_losses);

    RuntimeConfig effective = runtime;
    if (runtime.beta_jitter_std > 0.0) {
      Rng jitter(derive_stream(seed, StreamTag::beta_jitter, static_cast<std::uint64_t>(r)));
      effective.beta_seconds =
          std::max(0.0, runtime.beta_seconds + runtime.beta_jitter_std * jitter.normal());
    }
    wall += round_time(effective, k_r);
    steps += static_cast<long long>(k_r) * n_sample;

    RoundRecord rec;
    rec.r = r;
    rec.k_r = k_r;
    rec.eta_r = eta_r;
    rec.client_ids = std::move(res.client_ids);
    double mean = 0.0;
    for (double v : res.first_step_losses) mean += v;
    rec.mean_first_step_loss = mean / static_cast<double>(res.first_step_losses.size());
    rec.wall_seconds_cum = wall;
    rec.sgd_steps_cum = steps;

    const bool eval_now = r == 1 || r % options.eval_every == 0 || r == rounds;
    if (eval_now) {
      rec.val_metric = evaluate(x, fed, val_metric_kind);
      if (plateau_on_validation) detector.observe(*rec.val_metric);
    }
    if (!plateau_on_validation) {
      if (const auto est = estimator.estimate()) detector.observe(*est);
    }

    trace.records.push_back(std::move(rec));
    if (options.record_params) trace.param_history.push_back(x);
  }
  trace.final_params = std::move(x);
  return trace;
}

}  // namespace fedtick
