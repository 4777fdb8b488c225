#pragma once

#include <cmath>
#include <vector>

#include "fedtick/federation.hpp"
#include "fedtick/objectives.hpp"
#include "fedtick/param_vector.hpp"

// Independent oracles for the test suite. These deliberately avoid the
// library's own computation paths: the eigensolver is inertia bisection (the
// library uses Jacobi), the minimizer is plain gradient descent (the library
// solves the normal equations), gradients come from central differences.

namespace oracles {

// Central finite differences of the loss, step h per coordinate.
inline fedtick::Vector finite_difference_grad(fedtick::ModelKind kind,
                                              const fedtick::ParamVector& params,
                                              const fedtick::Minibatch& batch,
                                              double h = 1e-6) {
  fedtick::Vector g(params.size());
  fedtick::Vector work = params.values;
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double orig = work[i];
    work[i] = orig + h;
    const double up = fedtick::loss(kind, fedtick::ParamVector(work, params.layout), batch);
    work[i] = orig - h;
    const double down = fedtick::loss(kind, fedtick::ParamVector(work, params.layout), batch);
    work[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Number of eigenvalues of A strictly below t, by counting negative pivots of
// the LDL^T factorization of A - tI (Sylvester's law of inertia).
inline int eigen_count_below(const fedtick::SymMatrix& a, double t) {
  const int n = a.size();
  std::vector<double> m(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  auto M = [&](int i, int j) -> double& { return m[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = a(i, j) - (i == j ? t : 0.0);
  int negatives = 0;
  for (int k = 0; k < n; ++k) {
    double pivot = M(k, k);
    if (pivot == 0.0) pivot = 1e-300;
    if (pivot < 0.0) ++negatives;
    for (int i = k + 1; i < n; ++i) {
      const double f = M(i, k) / pivot;
      for (int j = k; j < n; ++j) M(i, j) -= f * M(k, j);
    }
  }
  return negatives;
}

// Extreme eigenvalues via bisection on the inertia count.
inline std::pair<double, double> bisection_eigen_extremes(const fedtick::SymMatrix& a) {
  const int n = a.size();
  double lo = a(0, 0), hi = a(0, 0);
  for (int i = 0; i < n; ++i) {
    double radius = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) radius += std::abs(a(i, j));
    lo = std::min(lo, a(i, i) - radius);
    hi = std::max(hi, a(i, i) + radius);
  }
  const auto bisect = [&](int want_below) {
    double l = lo - 1.0, h = hi + 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (l + h);
      if (eigen_count_below(a, mid) >= want_below)
        h = mid;
      else
        l = mid;
    }
    return 0.5 * (l + h);
  };
  return {bisect(1), bisect(n)};  // {lambda_min, lambda_max}
}

// Gradient descent to convergence on the federation's global objective,
// recomputing everything by hand from the client (A, b) pairs.
inline double gd_gamma(const fedtick::Federation& fed) {
  const int d = fed.layout.d0;
  fedtick::Vector x(static_cast<std::size_t>(d), 0.0);
  double l_max = 0.0;
  for (const auto& c : fed.clients) l_max = std::max(l_max, c.quadratic->l_smooth());
  const double step = 1.0 / l_max;
  for (int it = 0; it < 2000000; ++it) {
    fedtick::Vector g(static_cast<std::size_t>(d), 0.0);
    for (const auto& c : fed.clients) {
      const auto& A = c.quadratic->matrix();
      const auto& b = c.quadratic->center();
      for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j)
          s += A(i, j) * (x[static_cast<std::size_t>(j)] - b[static_cast<std::size_t>(j)]);
        g[static_cast<std::size_t>(i)] += c.weight_p * s;
      }
    }
    double gn = 0.0;
    for (double v : g) gn += v * v;
    if (gn < 1e-24) break;
    for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] -= step * g[static_cast<std::size_t>(i)];
  }
  double f = 0.0;
  for (const auto& c : fed.clients) {
    const auto& A = c.quadratic->matrix();
    const auto& b = c.quadratic->center();
    double q = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        q += (x[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) * A(i, j) *
             (x[static_cast<std::size_t>(j)] - b[static_cast<std::size_t>(j)]);
    f += c.weight_p * 0.5 * q;
  }
  return f;  // every f_c* is zero, so Gamma is F at the minimizer
}

inline double relative_error(const fedtick::Vector& approx, const fedtick::Vector& exact) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    num += (approx[i] - exact[i]) * (approx[i] - exact[i]);
    den += exact[i] * exact[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace oracles
