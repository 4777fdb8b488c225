#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "fedtick/errors.hpp"

// Per-round local-step counts K_r and learning rates eta_r under the eight
// schedule rules, the rolling first-step-loss estimator driving the
// error-based rules, and plateau detection for the step rules.

namespace fedtick {

enum class ScheduleKind {
  dsgd,        // K_r = 1, eta_r = eta0
  fixed,       // K_r = K0, eta_r = eta0
  k_rounds,    // K_r = ceil((1/r)^{1/3} K0)
  k_error,     // K_r = ceil((F_r/F0)^{1/3} K0)
  k_step,      // K_r = K0, divided by step_divisor once plateaued
  eta_rounds,  // eta_r = (1/r)^{1/2} eta0
  eta_error,   // eta_r = (F_r/F0)^{1/2} eta0
  eta_step,    // eta_r = eta0, divided by step_divisor once plateaued
};

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::dsgd: return "dsgd";
    case ScheduleKind::fixed: return "fixed";
    case ScheduleKind::k_rounds: return "k-rounds";
    case ScheduleKind::k_error: return "k-error";
    case ScheduleKind::k_step: return "k-step";
    case ScheduleKind::eta_rounds: return "eta-rounds";
    case ScheduleKind::eta_error: return "eta-error";
    case ScheduleKind::eta_step: return "eta-step";
  }
  return "?";
}

inline std::optional<ScheduleKind> parse_schedule_kind(std::string name) {
  for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (name == "dsgd") return ScheduleKind::dsgd;
  if (name == "fixed" || name == "keta-fixed") return ScheduleKind::fixed;
  if (name == "k-rounds") return ScheduleKind::k_rounds;
  if (name == "k-error") return ScheduleKind::k_error;
  if (name == "k-step") return ScheduleKind::k_step;
  if (name == "eta-rounds") return ScheduleKind::eta_rounds;
  if (name == "eta-error") return ScheduleKind::eta_error;
  if (name == "eta-step") return ScheduleKind::eta_step;
  return std::nullopt;
}

inline const std::vector<ScheduleKind>& all_schedule_kinds() {
  static const std::vector<ScheduleKind> kinds = {
      ScheduleKind::dsgd,      ScheduleKind::fixed,     ScheduleKind::k_rounds,
      ScheduleKind::k_error,   ScheduleKind::k_step,    ScheduleKind::eta_rounds,
      ScheduleKind::eta_error, ScheduleKind::eta_step};
  return kinds;
}

enum class PlateauMetric { validation_accuracy, training_loss };

struct PlateauSpec {
  int patience = 200;                  // consecutive evaluations without improvement
  double min_rel_improvement = 0.001;  // relative to the best value seen
  PlateauMetric metric = PlateauMetric::validation_accuracy;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::fixed;
  int k0 = 1;
  double eta0 = 0.1;
  int window_s = 100;
  PlateauSpec plateau;
  double step_divisor = 10.0;

  // Normalized, validated copy. dSGD pins k0 = 1.
  static ScheduleSpec validated(ScheduleSpec s) {
    if (s.k0 < 1) throw ConfigError("ScheduleSpec: k0 >= 1 required");
    if (!(s.eta0 > 0.0)) throw ConfigError("ScheduleSpec: eta0 > 0 required");
    if (s.window_s < 1) throw ConfigError("ScheduleSpec: window_s >= 1 required");
    if (s.plateau.patience < 1) throw ConfigError("ScheduleSpec: plateau patience >= 1 required");
    if (!(s.step_divisor > 1.0)) throw ConfigError("ScheduleSpec: step_divisor > 1 required");
    if (s.kind == ScheduleKind::dsgd) s.k0 = 1;
    return s;
  }
};

// Rolling estimate of the global training loss from per-round mean first-step
// client losses. The estimate is the mean of the last `capacity` rounds and is
// undefined until a full window has been collected; the baseline F0 freezes as
// the first full-window mean.
class LossEstimator {
 public:
  explicit LossEstimator(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ContractViolation("LossEstimator: window capacity >= 1");
  }

  void push(double round_mean_loss) {
    window_.push_back(round_mean_loss);
    sum_ += round_mean_loss;
    if (static_cast<int>(window_.size()) > capacity_) {
      sum_ -= window_.front();
      window_.pop_front();
    }
    if (!f0_.has_value() && static_cast<int>(window_.size()) == capacity_)
      f0_ = sum_ / capacity_;
  }

  bool warmed_up() const { return static_cast<int>(window_.size()) >= capacity_; }

  std::optional<double> estimate() const {
    if (!warmed_up()) return std::nullopt;
    return sum_ / capacity_;
  }

  std::optional<double> f0_estimate() const { return f0_; }
  int capacity() const { return capacity_; }

 private:
  int capacity_;
  std::deque<double> window_;
  double sum_ = 0.0;
  std::optional<double> f0_;
};

// Push one round of first-step losses (their mean) into the estimator.
inline void record_round_loss(LossEstimator& est, const std::vector<double>& client_first_step_losses) {
  if (client_first_step_losses.empty())
    throw ContractViolation("record_round_loss: empty loss list");
  double s = 0.0;
  for (double v : client_first_step_losses) s += v;
  est.push(s / static_cast<double>(client_first_step_losses.size()));
}

namespace detail {

// Smallest k with k^3 * r >= k0^3, i.e. ceil(k0 / r^{1/3}) computed exactly.
inline int ceil_cbrt_ratio(int k0, long long r) {
  const double approx = std::ceil(static_cast<double>(k0) / std::cbrt(static_cast<double>(r)));
  long long k = std::max(1LL, static_cast<long long>(approx));
  const auto cube_times = [](long long v, long long m) {
    return static_cast<__int128>(v) * v * v * m;
  };
  const __int128 target = cube_times(k0, 1);
  while (k > 1 && cube_times(k - 1, r) >= target) --k;
  while (cube_times(k, r) < target) ++k;
  return static_cast<int>(k);
}

}  // namespace detail

// Local steps for round r (1-based). Error-based rules return K0 while the
// estimator warms up. Output always in [1, k0].
inline int k_for_round(const ScheduleSpec& spec, long long r, const LossEstimator& est,
                       bool plateaued) {
  if (r < 1) throw ContractViolation("k_for_round: rounds are 1-based");
  switch (spec.kind) {
    case ScheduleKind::dsgd:
      return 1;
    case ScheduleKind::fixed:
    case ScheduleKind::eta_rounds:
    case ScheduleKind::eta_error:
    case ScheduleKind::eta_step:
      return spec.k0;
    case ScheduleKind::k_rounds:
      return detail::ceil_cbrt_ratio(spec.k0, r);
    case ScheduleKind::k_error: {
      const auto fr = est.estimate();
      const auto f0 = est.f0_estimate();
      if (!fr.has_value() || !f0.has_value() || !(*f0 > 0.0)) return spec.k0;
      const double ratio = *fr / *f0;
      const int k = static_cast<int>(std::ceil(std::cbrt(std::max(ratio, 0.0)) * spec.k0));
      return std::clamp(k, 1, spec.k0);
    }
    case ScheduleKind::k_step: {
      if (!plateaued) return spec.k0;
      return std::max(1, static_cast<int>(std::ceil(spec.k0 / spec.step_divisor)));
    }
  }
  throw ContractViolation("k_for_round: unknown schedule kind");
}

// Learning rate for round r. All K-varying rules keep eta0.
inline double eta_for_round(const ScheduleSpec& spec, long long r, const LossEstimator& est,
                            bool plateaued) {
  if (r < 1) throw ContractViolation("eta_for_round: rounds are 1-based");
  switch (spec.kind) {
    case ScheduleKind::dsgd:
    case ScheduleKind::fixed:
    case ScheduleKind::k_rounds:
    case ScheduleKind::k_error:
    case ScheduleKind::k_step:
      return spec.eta0;
    case ScheduleKind::eta_rounds:
      return spec.eta0 / std::sqrt(static_cast<double>(r));
    case ScheduleKind::eta_error: {
      const auto fr = est.estimate();
      const auto f0 = est.f0_estimate();
      if (!fr.has_value() || !f0.has_value() || !(*f0 > 0.0)) return spec.eta0;
      return std::sqrt(std::max(*fr / *f0, 0.0)) * spec.eta0;
    }
    case ScheduleKind::eta_step:
      return plateaued ? spec.eta0 / spec.step_divisor : spec.eta0;
  }
  throw ContractViolation("eta_for_round: unknown schedule kind");
}

// Patience-based plateau latch over a best-so-far metric. Values are oriented
// internally (accuracy up, loss down); once fired it stays fired.
class PlateauDetector {
 public:
  explicit PlateauDetector(PlateauSpec spec) : spec_(spec) {}

  bool observe(double metric_value) {
    if (fired_) return true;
    const double score =
        spec_.metric == PlateauMetric::training_loss ? -metric_value : metric_value;
    if (!has_best_) {
      best_ = score;
      has_best_ = true;
      return false;
    }
    if (score > best_ + spec_.min_rel_improvement * std::abs(best_)) {
      best_ = score;
      bad_ = 0;
      return false;
    }
    if (++bad_ >= spec_.patience) fired_ = true;
    return fired_;
  }

  bool fired() const { return fired_; }

 private:
  PlateauSpec spec_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_ = 0;
  bool fired_ = false;
};

// Pure form: replay a metric series (ordered by round) through the detector.
inline bool plateau_check(const std::vector<double>& history, const PlateauSpec& spec) {
  PlateauDetector det(spec);
  for (double v : history) det.observe(v);
  return det.fired();
}

}  // namespace fedtick
