#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fedtick/engine.hpp"
#include "fedtick/errors.hpp"
#include "fedtick/federation.hpp"
#include "fedtick/rng.hpp"
#include "fedtick/runtime_model.hpp"

// Convergence-bound evaluation for strongly-convex federations: the
// decaying-K gradient-norm bound, its fixed-K restart form in terms of the
// wall-clock budget, and the closed-form minimizers of that form in K and eta.
// The optimal-K/optimal-eta expressions are the exact stationary points of the
// restart bound (solve d/dK = 0 resp. d/deta = 0), which is what the grid
// oracles in the verification suite certify.

namespace fedtick {

struct BoundInputs {
  TheoryConstants constants;
  double eta = 0.0;
  std::vector<int> k_sequence;  // decaying-K form; monotone non-increasing
  int k_fixed = 1;              // restart form
  RuntimeConfig runtime;
  double w_budget = 0.0;  // elapsed-time budget W
  // Numerator variant: false -> 2*kappa*(kappa*F0 - F*), true -> 2*kappa*(F0 - F*).
  bool plain_f0_numerator = false;
};

inline double eta_premise_cap(double l_smooth) { return 1.0 / (4.0 * l_smooth); }

namespace detail {

inline void check_eta_premise(const BoundInputs& in) {
  const double cap = eta_premise_cap(in.constants.l_smooth);
  if (!(in.eta > 0.0) || in.eta > cap * (1.0 + 1e-12))
    throw PremiseViolation("bound: stepsize " + std::to_string(in.eta) +
                           " violates eta <= 1/(4L) = " + std::to_string(cap));
}

inline double bound_numerator(const BoundInputs& in) {
  const TheoryConstants& c = in.constants;
  const double f0_term = in.plain_f0_numerator ? c.f0 : c.kappa * c.f0;
  return 2.0 * c.kappa * (f0_term - c.f_star);
}

// sigma-, heterogeneity- and drift-variance terms sharing the second line of
// the bound; `k_weight` is K^2 for fixed K or (sum K^3)/(sum K) for sequences.
inline double variance_term(const TheoryConstants& c, double k_weight) {
  return c.sigma_weighted + 6.0 * c.l_smooth * c.gamma +
         (8.0 + 4.0 / c.n_participants) * c.g_squared * k_weight;
}

}  // namespace detail

// Bound on the expected minimum gradient norm after the k_sequence rounds with
// fixed stepsize eta <= 1/(4L).
inline double min_grad_norm_bound(const BoundInputs& in) {
  detail::check_eta_premise(in);
  if (in.k_sequence.empty()) throw ContractViolation("min_grad_norm_bound: empty k_sequence");
  double sum_k = 0.0, sum_k3 = 0.0;
  int prev = in.k_sequence.front();
  for (int k : in.k_sequence) {
    if (k < 1) throw ContractViolation("min_grad_norm_bound: all K_r >= 1 required");
    if (k > prev)
      throw PremiseViolation("min_grad_norm_bound: K_r must be monotone non-increasing");
    prev = k;
    const double kd = static_cast<double>(k);
    sum_k += kd;
    sum_k3 += kd * kd * kd;
  }
  const TheoryConstants& c = in.constants;
  return detail::bound_numerator(in) / (in.eta * sum_k) +
         in.eta * c.kappa * c.l_smooth * detail::variance_term(c, sum_k3 / sum_k);
}

// Fixed-K bound in terms of the wall-clock budget W (restart form). The
// `enforce_premise` escape hatch lets the eta-grid oracle probe stepsizes past
// the 1/(4L) cap when validating the unconstrained stationary point.
inline double restart_bound(const BoundInputs& in, bool enforce_premise = true) {
  if (enforce_premise) detail::check_eta_premise(in);
  if (in.k_fixed < 1) throw ContractViolation("restart_bound: K >= 1 required");
  if (!(in.w_budget > 0.0)) throw ContractViolation("restart_bound: W > 0 required");
  if (!(in.eta > 0.0)) throw ContractViolation("restart_bound: eta > 0 required");
  const TheoryConstants& c = in.constants;
  const double k = static_cast<double>(in.k_fixed);
  const double per_round = in.runtime.comm_seconds() + in.runtime.beta_seconds * k;
  return detail::bound_numerator(in) / (in.eta * in.w_budget * k) * per_round +
         in.eta * c.kappa * c.l_smooth * detail::variance_term(c, k * k);
}

// Continuous minimizer of the restart bound in K:
//   K* = cbrt( (kappa F0 - F*) / (8 eta^2 L (1 + 1/(2N)) G^2) * comm / W ).
// Independent of beta: compute time adds a K-free constant to the bound.
inline double optimal_k(const BoundInputs& in) {
  if (!(in.w_budget > 0.0)) throw ContractViolation("optimal_k: W > 0 required");
  const TheoryConstants& c = in.constants;
  const double num = (in.plain_f0_numerator ? c.f0 : c.kappa * c.f0) - c.f_star;
  if (!(num > 0.0)) throw DomainError("optimal_k: kappa*F0 - F* must be positive");
  if (!(c.g_squared > 0.0)) throw DomainError("optimal_k: G^2 must be positive");
  if (!(in.eta > 0.0)) throw ContractViolation("optimal_k: eta > 0 required");
  const double denom =
      8.0 * in.eta * in.eta * c.l_smooth * (1.0 + 0.5 / c.n_participants) * c.g_squared;
  return std::cbrt(num / denom * in.runtime.comm_seconds() / in.w_budget);
}

// Round-indexed form: W ~ r * comm once communication dominates compute.
inline double optimal_k_rounds(const BoundInputs& in, long long r) {
  if (r < 1) throw ContractViolation("optimal_k_rounds: r >= 1 required");
  const TheoryConstants& c = in.constants;
  const double num = (in.plain_f0_numerator ? c.f0 : c.kappa * c.f0) - c.f_star;
  if (!(num > 0.0)) throw DomainError("optimal_k_rounds: kappa*F0 - F* must be positive");
  if (!(c.g_squared > 0.0)) throw DomainError("optimal_k_rounds: G^2 must be positive");
  if (!(in.eta > 0.0)) throw ContractViolation("optimal_k_rounds: eta > 0 required");
  const double denom =
      8.0 * in.eta * in.eta * c.l_smooth * (1.0 + 0.5 / c.n_participants) * c.g_squared;
  return std::cbrt(num / denom / static_cast<double>(r));
}

// Continuous minimizer of the restart bound in eta for fixed K:
//   eta* = sqrt( 2 (kappa F0 - F*) (comm + beta K) / (W K L Z) ),
//   Z = sum p_c^2 sigma_c^2 + 6 L Gamma + (8 + 4/N) G^2 K^2.
// May exceed the 1/(4L) premise cap; callers report the cap separately.
inline double optimal_eta(const BoundInputs& in) {
  if (!(in.w_budget > 0.0)) throw ContractViolation("optimal_eta: W > 0 required");
  if (in.k_fixed < 1) throw ContractViolation("optimal_eta: K >= 1 required");
  const TheoryConstants& c = in.constants;
  const double num = (in.plain_f0_numerator ? c.f0 : c.kappa * c.f0) - c.f_star;
  if (!(num > 0.0)) throw DomainError("optimal_eta: kappa*F0 - F* must be positive");
  const double k = static_cast<double>(in.k_fixed);
  const double z = detail::variance_term(c, k * k);
  if (!(z > 0.0)) throw DomainError("optimal_eta: variance term Z must be positive");
  const double per_round = in.runtime.comm_seconds() + in.runtime.beta_seconds * k;
  return std::sqrt(2.0 * num * per_round / (in.w_budget * k * c.l_smooth * z));
}

inline double optimal_eta_rounds(const BoundInputs& in, long long r) {
  if (r < 1) throw ContractViolation("optimal_eta_rounds: r >= 1 required");
  if (in.k_fixed < 1) throw ContractViolation("optimal_eta_rounds: K >= 1 required");
  const TheoryConstants& c = in.constants;
  const double num = (in.plain_f0_numerator ? c.f0 : c.kappa * c.f0) - c.f_star;
  if (!(num > 0.0)) throw DomainError("optimal_eta_rounds: kappa*F0 - F* must be positive");
  const double k = static_cast<double>(in.k_fixed);
  const double z = detail::variance_term(c, k * k);
  if (!(z > 0.0)) throw DomainError("optimal_eta_rounds: variance term Z must be positive");
  return std::sqrt(2.0 * num / (c.l_smooth * z * k) / static_cast<double>(r));
}

// Minimum over recorded rounds of the exact squared global gradient norm.
// Needs a quadratic federation and a trace recorded with record_params.
inline double empirical_min_grad_norm(const TrainingTrace& trace, const Federation& fed) {
  if (!fed.is_quadratic())
    throw UnsupportedOperation("empirical_min_grad_norm: quadratic federations only");
  if (trace.param_history.empty())
    throw ContractViolation("empirical_min_grad_norm: trace has no parameter history "
                            "(run with RunOptions::record_params)");
  double best = std::numeric_limits<double>::infinity();
  for (const ParamVector& x : trace.param_history)
    best = std::min(best, norm_sq(global_grad(fed, x.values)));
  return best;
}

// --- randomized inputs for the grid oracles -------------------------------

// Valid-by-construction random BoundInputs covering several decades of each
// constant; used by verify-theory and the acceptance suite.
inline BoundInputs random_bound_inputs(Rng& rng) {
  BoundInputs in;
  TheoryConstants& c = in.constants;
  c.l_smooth = std::exp(std::log(0.5) + rng.uniform01() * std::log(40.0));  // [0.5, 20]
  c.kappa = std::exp(rng.uniform01() * std::log(50.0));                     // [1, 50]
  c.mu = c.l_smooth / c.kappa;
  c.gamma = rng.uniform01() * 5.0;
  c.g_squared = std::exp(std::log(0.01) + rng.uniform01() * std::log(1e4));  // [0.01, 100]
  c.sigma_weighted = rng.uniform01() * 2.0;
  c.n_participants = 1 + static_cast<int>(rng.uniform_below(100));
  c.c_total = c.n_participants;
  c.f_star = rng.uniform01() * 2.0;
  // keep kappa*F0 - F* well away from zero
  c.f0 = c.f_star / c.kappa + 0.05 + rng.uniform01() * 5.0;
  in.eta = (0.05 + 0.95 * rng.uniform01()) * eta_premise_cap(c.l_smooth);
  in.runtime.model_megabits = std::exp(std::log(0.1) + rng.uniform01() * std::log(1e3));
  in.runtime.down_mbps = 1.0 + rng.uniform01() * 99.0;
  in.runtime.up_mbps = 0.5 + rng.uniform01() * 19.5;
  in.runtime.beta_seconds = std::exp(std::log(1e-3) + rng.uniform01() * std::log(2e3));
  in.runtime.n_participants = c.n_participants;
  in.w_budget = std::exp(std::log(10.0) + rng.uniform01() * std::log(1e5));
  in.k_fixed = 1 + static_cast<int>(rng.uniform_below(64));
  return in;
}

// Exhaustive integer argmin of the restart bound over K in [1, k_max].
inline int grid_argmin_k(const BoundInputs& in, int k_max) {
  BoundInputs probe = in;
  int best_k = 1;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    probe.k_fixed = k;
    const double v = restart_bound(probe);
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  return best_k;
}

// Log-grid argmin of the restart bound over eta in [lo, hi] with `points`
// samples; ignores the premise cap by design.
inline double grid_argmin_eta(const BoundInputs& in, double lo, double hi, int points) {
  BoundInputs probe = in;
  double best_eta = lo;
  double best = std::numeric_limits<double>::infinity();
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    probe.eta = lo * std::exp(step * i);
    const double v = restart_bound(probe, /*enforce_premise=*/false);
    if (v < best) {
      best = v;
      best_eta = probe.eta;
    }
  }
  return best_eta;
}

}  // namespace fedtick
