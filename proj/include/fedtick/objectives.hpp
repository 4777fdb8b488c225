#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fedtick/errors.hpp"
#include "fedtick/linalg.hpp"
#include "fedtick/param_vector.hpp"
#include "fedtick/rng.hpp"

// Client objectives: a quadratic family with known smoothness/convexity
// constants, a linear softmax classifier, and a one-hidden-layer ReLU MLP.
// All losses are mean-per-sample and all gradients are exact (hand-written
// backprop); the quadratic kind can synthesize bounded-variance gradient
// noise so the stochastic-gradient assumption is satisfied exactly.

namespace fedtick {

// f(x) = 1/2 (x - b)^T A (x - b), A symmetric positive definite.
// Minimum value 0 at x = b; smooth with L = lambda_max(A), strongly convex
// with mu = lambda_min(A).
class QuadraticObjective {
 public:
  QuadraticObjective() = default;

  static QuadraticObjective from_matrix(SymMatrix a, Vector center) {
    if (a.size() != static_cast<int>(center.size()))
      throw ContractViolation("QuadraticObjective: matrix/center dimension mismatch");
    const Vector eig = jacobi_eigenvalues(a);
    if (eig.front() <= 0.0)
      throw ContractViolation("QuadraticObjective: matrix is not positive-definite");
    return QuadraticObjective(std::move(a), std::move(center), eig.front(), eig.back());
  }

  static QuadraticObjective from_spectrum(const Vector& eigs, const std::vector<double>& basis,
                                          Vector center) {
    for (double e : eigs)
      if (e <= 0.0) throw ContractViolation("QuadraticObjective: spectrum must be positive");
    SymMatrix a = fedtick::from_spectrum(eigs, basis);
    const double lo = *std::min_element(eigs.begin(), eigs.end());
    const double hi = *std::max_element(eigs.begin(), eigs.end());
    return QuadraticObjective(std::move(a), std::move(center), lo, hi);
  }

  int dim() const { return matrix_.size(); }
  const SymMatrix& matrix() const { return matrix_; }
  const Vector& center() const { return center_; }
  double mu() const { return mu_; }
  double l_smooth() const { return l_; }

  double value(const Vector& x) const {
    const Vector d = sub(x, center_);
    return 0.5 * matrix_.quad_form(d);
  }

  Vector gradient(const Vector& x) const { return matrix_.matvec(sub(x, center_)); }

 private:
  QuadraticObjective(SymMatrix a, Vector c, double mu, double l)
      : matrix_(std::move(a)), center_(std::move(c)), mu_(mu), l_(l) {}

  SymMatrix matrix_;
  Vector center_;
  double mu_ = 0.0;
  double l_ = 0.0;
};

// (L, mu) of a quadratic objective.
inline std::pair<double, double> smoothness_constants(const QuadraticObjective& obj) {
  return {obj.l_smooth(), obj.mu()};
}

// One sampled minibatch. For dataset-backed models it carries the rows and
// targets; for the quadratic kind it carries the objective plus the seed used
// to synthesize this draw's gradient noise.
struct Minibatch {
  // dataset-backed kinds
  std::vector<double> inputs;  // batch x features, row-major
  std::vector<int> targets;    // class indices
  int batch = 0;
  int features = 0;

  // quadratic kind
  const QuadraticObjective* quad = nullptr;
  double sigma = 0.0;
  std::uint64_t noise_seed = 0;

  static Minibatch for_quadratic(const QuadraticObjective& q, double sigma,
                                 std::uint64_t noise_seed) {
    Minibatch b;
    b.quad = &q;
    b.sigma = sigma;
    b.noise_seed = noise_seed;
    b.batch = 1;
    return b;
  }
};

namespace detail {

inline void check_batch(const ParamLayout& layout, const Minibatch& b, const char* where) {
  if (layout.kind == ModelKind::quadratic) {
    if (b.quad == nullptr) throw ContractViolation(std::string(where) + ": quadratic batch missing objective");
    if (b.quad->dim() != layout.d0)
      throw ContractViolation(std::string(where) + ": objective dim " + std::to_string(b.quad->dim()) +
                              " vs layout dim " + std::to_string(layout.d0));
    return;
  }
  if (b.batch < 1) throw ContractViolation(std::string(where) + ": empty batch");
  if (b.features != layout.input_dim())
    throw ContractViolation(std::string(where) + ": batch features " + std::to_string(b.features) +
                            " vs model input dim " + std::to_string(layout.input_dim()));
  if (static_cast<int>(b.targets.size()) != b.batch)
    throw ContractViolation(std::string(where) + ": targets/batch size mismatch");
  for (int t : b.targets)
    if (t < 0 || t >= layout.num_classes())
      throw ContractViolation(std::string(where) + ": target class " + std::to_string(t) +
                              " outside [0, " + std::to_string(layout.num_classes()) + ")");
}

// row-major logits for one sample; shifts by the max for stability.
inline void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

struct MlpScratch {
  std::vector<double> z1, a1, probs;
};

// Forward pass for one sample. Returns per-sample cross-entropy.
inline double mlp_forward(const ParamLayout& l, const Vector& w, const double* x, int target,
                          MlpScratch& s) {
  const int in = l.d0, hid = l.d1, out = l.d2;
  const double* w1 = w.data();                                  // in x hid
  const double* w2 = w.data() + static_cast<std::size_t>(in) * hid;  // hid x out
  s.z1.assign(static_cast<std::size_t>(hid), 0.0);
  for (int i = 0; i < in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = w1 + static_cast<std::size_t>(i) * hid;
    for (int h = 0; h < hid; ++h) s.z1[static_cast<std::size_t>(h)] += xi * row[h];
  }
  s.a1 = s.z1;
  for (double& v : s.a1) v = std::max(0.0, v);
  s.probs.assign(static_cast<std::size_t>(out), 0.0);
  for (int h = 0; h < hid; ++h) {
    const double ah = s.a1[static_cast<std::size_t>(h)];
    if (ah == 0.0) continue;
    const double* row = w2 + static_cast<std::size_t>(h) * out;
    for (int o = 0; o < out; ++o) s.probs[static_cast<std::size_t>(o)] += ah * row[o];
  }
  softmax_inplace(s.probs);
  return -std::log(std::max(s.probs[static_cast<std::size_t>(target)], 1e-300));
}

}  // namespace detail

// Mean per-sample loss. Deterministic given (params, batch): the quadratic
// kind's gradient noise never enters the loss.
inline double loss(ModelKind kind, const ParamVector& params, const Minibatch& batch) {
  if (params.layout.kind != kind)
    throw ContractViolation("loss: params layout " + params.layout.describe() +
                            " does not match model kind");
  detail::check_batch(params.layout, batch, "loss");
  const ParamLayout& l = params.layout;
  switch (kind) {
    case ModelKind::quadratic:
      return batch.quad->value(params.values);
    case ModelKind::linear_softmax: {
      const int feats = l.d0, classes = l.d1;
      double total = 0.0;
      std::vector<double> logits(static_cast<std::size_t>(classes));
      for (int n = 0; n < batch.batch; ++n) {
        const double* x = batch.inputs.data() + static_cast<std::size_t>(n) * feats;
        std::fill(logits.begin(), logits.end(), 0.0);
        for (int f = 0; f < feats; ++f) {
          const double xf = x[f];
          if (xf == 0.0) continue;
          const double* row = params.values.data() + static_cast<std::size_t>(f) * classes;
          for (int c = 0; c < classes; ++c) logits[static_cast<std::size_t>(c)] += xf * row[c];
        }
        detail::softmax_inplace(logits);
        total += -std::log(std::max(logits[static_cast<std::size_t>(batch.targets[static_cast<std::size_t>(n)])], 1e-300));
      }
      return total / batch.batch;
    }
    case ModelKind::mlp: {
      detail::MlpScratch s;
      double total = 0.0;
      for (int n = 0; n < batch.batch; ++n) {
        const double* x = batch.inputs.data() + static_cast<std::size_t>(n) * l.d0;
        total += detail::mlp_forward(l, params.values, x, batch.targets[static_cast<std::size_t>(n)], s);
      }
      return total / batch.batch;
    }
  }
  throw ContractViolation("loss: unknown model kind");
}

// Mean minibatch gradient, same layout as params. Quadratic: A(x - b) plus
// zero-mean Gaussian noise with per-coordinate variance sigma^2/d (total
// variance sigma^2), synthesized from batch.noise_seed.
inline ParamVector grad(ModelKind kind, const ParamVector& params, const Minibatch& batch) {
  if (params.layout.kind != kind)
    throw ContractViolation("grad: params layout " + params.layout.describe() +
                            " does not match model kind");
  detail::check_batch(params.layout, batch, "grad");
  const ParamLayout& l = params.layout;
  Vector g(params.size(), 0.0);
  switch (kind) {
    case ModelKind::quadratic: {
      g = batch.quad->gradient(params.values);
      if (batch.sigma > 0.0) {
        Rng noise(batch.noise_seed);
        const double scale = batch.sigma / std::sqrt(static_cast<double>(l.d0));
        for (double& v : g) v += scale * noise.normal();
      }
      break;
    }
    case ModelKind::linear_softmax: {
      const int feats = l.d0, classes = l.d1;
      std::vector<double> logits(static_cast<std::size_t>(classes));
      for (int n = 0; n < batch.batch; ++n) {
        const double* x = batch.inputs.data() + static_cast<std::size_t>(n) * feats;
        std::fill(logits.begin(), logits.end(), 0.0);
        for (int f = 0; f < feats; ++f) {
          const double xf = x[f];
          if (xf == 0.0) continue;
          const double* row = params.values.data() + static_cast<std::size_t>(f) * classes;
          for (int c = 0; c < classes; ++c) logits[static_cast<std::size_t>(c)] += xf * row[c];
        }
        detail::softmax_inplace(logits);
        logits[static_cast<std::size_t>(batch.targets[static_cast<std::size_t>(n)])] -= 1.0;
        for (int f = 0; f < feats; ++f) {
          const double xf = x[f];
          if (xf == 0.0) continue;
          double* row = g.data() + static_cast<std::size_t>(f) * classes;
          for (int c = 0; c < classes; ++c) row[c] += xf * logits[static_cast<std::size_t>(c)];
        }
      }
      for (double& v : g) v /= batch.batch;
      break;
    }
    case ModelKind::mlp: {
      const int in = l.d0, hid = l.d1, out = l.d2;
      const double* w2 = params.values.data() + static_cast<std::size_t>(in) * hid;
      double* g1 = g.data();
      double* g2 = g.data() + static_cast<std::size_t>(in) * hid;
      detail::MlpScratch s;
      std::vector<double> dz1(static_cast<std::size_t>(hid));
      for (int n = 0; n < batch.batch; ++n) {
        const double* x = batch.inputs.data() + static_cast<std::size_t>(n) * in;
        detail::mlp_forward(l, params.values, x, batch.targets[static_cast<std::size_t>(n)], s);
        s.probs[static_cast<std::size_t>(batch.targets[static_cast<std::size_t>(n)])] -= 1.0;  // dz2
        for (int h = 0; h < hid; ++h) {
          const double ah = s.a1[static_cast<std::size_t>(h)];
          double* row = g2 + static_cast<std::size_t>(h) * out;
          double acc = 0.0;
          const double* w2row = w2 + static_cast<std::size_t>(h) * out;
          for (int o = 0; o < out; ++o) {
            row[o] += ah * s.probs[static_cast<std::size_t>(o)];
            acc += w2row[o] * s.probs[static_cast<std::size_t>(o)];
          }
          dz1[static_cast<std::size_t>(h)] = s.z1[static_cast<std::size_t>(h)] > 0.0 ? acc : 0.0;
        }
        for (int i = 0; i < in; ++i) {
          const double xi = x[i];
          if (xi == 0.0) continue;
          double* row = g1 + static_cast<std::size_t>(i) * hid;
          for (int h = 0; h < hid; ++h) row[h] += xi * dz1[static_cast<std::size_t>(h)];
        }
      }
      for (double& v : g) v /= batch.batch;
      break;
    }
  }
  return ParamVector(std::move(g), l);
}

}  // namespace fedtick
