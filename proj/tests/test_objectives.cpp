#include <catch2/catch.hpp>

#include <cmath>

#include "fedtick/objectives.hpp"
#include "fedtick/rng.hpp"
#include "oracles.hpp"

using namespace fedtick;

namespace {

QuadraticObjective scalar_quadratic(double a = 1.0, double b = 0.0) {
  SymMatrix m(1);
  m(0, 0) = a;
  return QuadraticObjective::from_matrix(m, Vector{b});
}

SymMatrix random_spd(int d, Rng& rng) {
  // B^T B + 0.1 I from a random square B
  std::vector<double> b(static_cast<std::size_t>(d) * d);
  for (double& v : b) v = rng.normal();
  SymMatrix a(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += b[static_cast<std::size_t>(k) * d + i] * b[static_cast<std::size_t>(k) * d + j];
      a(i, j) = s + (i == j ? 0.1 : 0.0);
    }
  return a;
}

Minibatch random_classification_batch(const ParamLayout& layout, int batch, Rng& rng) {
  Minibatch b;
  b.batch = batch;
  b.features = layout.input_dim();
  b.inputs.resize(static_cast<std::size_t>(batch) * b.features);
  for (double& v : b.inputs) v = rng.normal();
  b.targets.resize(static_cast<std::size_t>(batch));
  for (int& t : b.targets) t = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(layout.num_classes())));
  return b;
}

}  // namespace

TEST_CASE("quadratic loss and gradient match the closed form") {
  const QuadraticObjective q = scalar_quadratic();
  const ParamVector at2(Vector{2.0}, ParamLayout::quadratic(1));
  const ParamVector at0(Vector{0.0}, ParamLayout::quadratic(1));
  const Minibatch batch = Minibatch::for_quadratic(q, 0.0, 0);

  CHECK(loss(ModelKind::quadratic, at2, batch) == Approx(2.0));
  CHECK(loss(ModelKind::quadratic, at0, batch) == 0.0);
  CHECK(grad(ModelKind::quadratic, at2, batch).values[0] == Approx(2.0));
  CHECK(grad(ModelKind::quadratic, at0, batch).values[0] == 0.0);
}

TEST_CASE("zero linear-softmax parameters give the uniform cross-entropy") {
  const ParamLayout layout = ParamLayout::linear(3, 4);
  const ParamVector zero = ParamVector::zeros(layout);
  Rng rng(11);
  const Minibatch batch = random_classification_batch(layout, 6, rng);
  CHECK(loss(ModelKind::linear_softmax, zero, batch) == Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("smoothness constants are the extreme eigenvalues") {
  SECTION("diagonal") {
    SymMatrix a(2);
    a(0, 0) = 1.0;
    a(1, 1) = 4.0;
    const auto [l, mu] = smoothness_constants(QuadraticObjective::from_matrix(a, Vector{0.0, 0.0}));
    CHECK(l == Approx(4.0));
    CHECK(mu == Approx(1.0));
  }
  SECTION("identity") {
    const auto [l, mu] =
        smoothness_constants(QuadraticObjective::from_matrix(SymMatrix::identity(3), Vector(3, 0.0)));
    CHECK(l == Approx(1.0));
    CHECK(mu == Approx(1.0));
  }
  SECTION("random PD matrix vs inertia-bisection oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
      const SymMatrix a = random_spd(5, rng);
      const auto [l, mu] = smoothness_constants(QuadraticObjective::from_matrix(a, Vector(5, 0.0)));
      const auto [omin, omax] = oracles::bisection_eigen_extremes(a);
      CHECK(l == Approx(omax).epsilon(1e-8));
      CHECK(mu == Approx(omin).epsilon(1e-8));
    }
  }
  SECTION("non-PD matrices are rejected at construction") {
    SymMatrix a(2);
    a(0, 0) = 1.0;
    a(1, 1) = -1.0;
    CHECK_THROWS_AS(QuadraticObjective::from_matrix(a, Vector{0.0, 0.0}), ContractViolation);
  }
}

TEST_CASE("gradients agree with central finite differences") {
  Rng rng(42);
  SECTION("quadratic, noiseless") {
    for (int trial = 0; trial < 10; ++trial) {
      const SymMatrix a = random_spd(6, rng);
      Vector center(6);
      for (double& v : center) v = rng.normal();
      const QuadraticObjective q = QuadraticObjective::from_matrix(a, center);
      Vector x(6);
      for (double& v : x) v = rng.normal();
      const ParamVector params(x, ParamLayout::quadratic(6));
      const Minibatch batch = Minibatch::for_quadratic(q, 0.0, 0);
      const Vector fd = oracles::finite_difference_grad(ModelKind::quadratic, params, batch);
      const Vector g = grad(ModelKind::quadratic, params, batch).values;
      CHECK(oracles::relative_error(fd, g) < 1e-5);
    }
  }
  SECTION("linear softmax") {
    const ParamLayout layout = ParamLayout::linear(3, 4);
    for (int trial = 0; trial < 10; ++trial) {
      Vector w(layout.param_count());
      for (double& v : w) v = 0.5 * rng.normal();
      const ParamVector params(w, layout);
      const Minibatch batch = random_classification_batch(layout, 5, rng);
      const Vector fd = oracles::finite_difference_grad(ModelKind::linear_softmax, params, batch);
      const Vector g = grad(ModelKind::linear_softmax, params, batch).values;
      CHECK(oracles::relative_error(fd, g) < 1e-5);
    }
  }
  SECTION("mlp 2-4-2") {
    const ParamLayout layout = ParamLayout::mlp(2, 4, 2);
    for (int trial = 0; trial < 10; ++trial) {
      Vector w(layout.param_count());
      for (double& v : w) v = 0.5 * rng.normal();
      const ParamVector params(w, layout);
      const Minibatch batch = random_classification_batch(layout, 5, rng);
      const Vector fd = oracles::finite_difference_grad(ModelKind::mlp, params, batch);
      const Vector g = grad(ModelKind::mlp, params, batch).values;
      CHECK(oracles::relative_error(fd, g) < 1e-5);
    }
  }
}

TEST_CASE("quadratic convexity witnesses") {
  Rng rng(7);
  const SymMatrix a = random_spd(4, rng);
  Vector center(4);
  for (double& v : center) v = rng.normal();
  const QuadraticObjective q = QuadraticObjective::from_matrix(a, center);
  const double mu = q.mu();

  for (int trial = 0; trial < 50; ++trial) {
    Vector x(4), y(4);
    for (double& v : x) v = 2.0 * rng.normal();
    for (double& v : y) v = 2.0 * rng.normal();
    const double alpha = rng.uniform01();

    Vector mix(4);
    for (int i = 0; i < 4; ++i)
      mix[static_cast<std::size_t>(i)] = alpha * x[static_cast<std::size_t>(i)] +
                                         (1.0 - alpha) * y[static_cast<std::size_t>(i)];
    CHECK(q.value(mix) <= alpha * q.value(x) + (1.0 - alpha) * q.value(y) + 1e-12);

    // strong convexity: f(y) >= f(x) + (y-x)'grad f(x) + mu/2 ||y-x||^2
    const Vector g = q.gradient(x);
    const Vector d = sub(y, x);
    CHECK(q.value(y) + 1e-10 >= q.value(x) + dot(d, g) + 0.5 * mu * norm_sq(d));
  }
}

TEST_CASE("synthetic gradient noise has the advertised variance") {
  Rng rng(3);
  const int d = 8;
  const SymMatrix a = random_spd(d, rng);
  Vector center(static_cast<std::size_t>(d));
  for (double& v : center) v = rng.normal();
  const QuadraticObjective q = QuadraticObjective::from_matrix(a, center);
  Vector x(static_cast<std::size_t>(d));
  for (double& v : x) v = rng.normal();
  const ParamVector params(x, ParamLayout::quadratic(d));

  const double sigma = 0.7;
  const int draws = 100000;
  Vector mean(static_cast<std::size_t>(d), 0.0);
  double total_sq_dev = 0.0;
  const Vector noiseless = q.gradient(x);
  for (int i = 0; i < draws; ++i) {
    const Minibatch b = Minibatch::for_quadratic(q, sigma, derive_stream(99, StreamTag::gradient_noise, i));
    const Vector g = grad(ModelKind::quadratic, params, b).values;
    for (int j = 0; j < d; ++j) {
      mean[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(j)];
      const double dev = g[static_cast<std::size_t>(j)] - noiseless[static_cast<std::size_t>(j)];
      total_sq_dev += dev * dev;
    }
  }
  const double se = sigma / std::sqrt(static_cast<double>(draws) * d);  // per coordinate
  for (int j = 0; j < d; ++j) {
    mean[static_cast<std::size_t>(j)] /= draws;
    CHECK(std::abs(mean[static_cast<std::size_t>(j)] - noiseless[static_cast<std::size_t>(j)]) < 4.0 * se);
  }
  // E||g_noisy - g||^2 == sigma^2
  CHECK(total_sq_dev / draws == Approx(sigma * sigma).epsilon(0.02));
}

TEST_CASE("dimension mismatches are rejected with the offending dims named") {
  const ParamLayout layout = ParamLayout::linear(3, 4);
  const ParamVector params = ParamVector::zeros(layout);
  Rng rng(1);
  Minibatch bad = random_classification_batch(ParamLayout::linear(5, 4), 2, rng);
  try {
    loss(ModelKind::linear_softmax, params, bad);
    FAIL("expected ContractViolation");
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    CHECK(msg.find("5") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
  CHECK_THROWS_AS(grad(ModelKind::quadratic, params, bad), ContractViolation);

  Minibatch empty;
  empty.batch = 0;
  empty.features = 3;
  CHECK_THROWS_AS(loss(ModelKind::linear_softmax, params, empty), ContractViolation);
}
