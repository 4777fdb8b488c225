#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fedtick/errors.hpp"
#include "fedtick/rng.hpp"

// Minimal dense linear algebra for desk-scale problems (d up to a few
// hundred). Symmetric matrices are stored full, row-major.

namespace fedtick {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const Vector& a) { return dot(a, a); }

inline Vector sub(const Vector& a, const Vector& b) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0) {}

  static SymMatrix identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int size() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j)]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j)]; }

  Vector matvec(const Vector& x) const {
    if (static_cast<int>(x.size()) != n_)
      throw ContractViolation("SymMatrix::matvec: dimension mismatch");
    Vector y(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += (*this)(i, j) * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  // x^T A x
  double quad_form(const Vector& x) const { return dot(x, matvec(x)); }

  bool operator==(const SymMatrix& o) const { return n_ == o.n_ && a_ == o.a_; }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. Ascending.
inline Vector jacobi_eigenvalues(SymMatrix a, int max_sweeps = 100) {
  const int n = a.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (int i = 0; i < n; ++i) {
      diag += std::abs(a(i, i));
      for (int j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    }
    if (std::sqrt(off) <= 1e-14 * (diag + 1e-300)) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Vector eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

// Solve A x = b for symmetric positive-definite A (plain Cholesky).
inline Vector cholesky_solve(const SymMatrix& a, const Vector& b) {
  const int n = a.size();
  if (static_cast<int>(b.size()) != n)
    throw ContractViolation("cholesky_solve: dimension mismatch");
  std::vector<double> l(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  auto L = [&](int i, int j) -> double& { return l[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (s <= 0.0) throw DomainError("cholesky_solve: matrix not positive-definite");
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  Vector y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) s -= L(i, k) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = s / L(i, i);
  }
  Vector x(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    double s = y[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= L(k, i) * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s / L(i, i);
  }
  return x;
}

// Random orthogonal matrix: Gram-Schmidt on a Gaussian matrix. Columns of the
// result are the orthonormal basis; returned as a full (non-symmetric) matrix
// in row-major order for use as Q in Q diag(e) Q^T.
inline std::vector<double> random_orthogonal(int n, Rng& rng) {
  std::vector<double> q(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  auto Q = [&](int i, int j) -> double& { return q[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; };
  for (int col = 0; col < n; ++col) {
    for (;;) {
      for (int i = 0; i < n; ++i) Q(i, col) = rng.normal();
      for (int prev = 0; prev < col; ++prev) {
        double proj = 0.0;
        for (int i = 0; i < n; ++i) proj += Q(i, col) * Q(i, prev);
        for (int i = 0; i < n; ++i) Q(i, col) -= proj * Q(i, prev);
      }
      double nrm = 0.0;
      for (int i = 0; i < n; ++i) nrm += Q(i, col) * Q(i, col);
      nrm = std::sqrt(nrm);
      if (nrm > 1e-8) {
        for (int i = 0; i < n; ++i) Q(i, col) /= nrm;
        break;
      }
    }
  }
  return q;
}

// A = Q diag(eigs) Q^T with Q from random_orthogonal.
inline SymMatrix from_spectrum(const Vector& eigs, const std::vector<double>& q) {
  const int n = static_cast<int>(eigs.size());
  SymMatrix a(n);
  auto Q = [&](int i, int j) { return q[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += Q(i, k) * eigs[static_cast<std::size_t>(k)] * Q(j, k);
      a(i, j) = s;
      a(j, i) = s;
    }
  }
  return a;
}

}  // namespace fedtick
