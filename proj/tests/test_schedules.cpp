#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "fedtick/rng.hpp"
#include "fedtick/schedules.hpp"

using namespace fedtick;

namespace {

ScheduleSpec spec_of(ScheduleKind kind, int k0, double eta0, int window_s = 100) {
  ScheduleSpec s;
  s.kind = kind;
  s.k0 = k0;
  s.eta0 = eta0;
  s.window_s = window_s;
  return ScheduleSpec::validated(s);
}

LossEstimator warmed(int capacity, double f0, double fr) {
  LossEstimator est(capacity);
  for (int i = 0; i < capacity; ++i) est.push(f0);
  for (int i = 0; i < capacity; ++i) est.push(fr);
  return est;
}

}  // namespace

TEST_CASE("k_for_round under each rule") {
  LossEstimator cold(100);

  SECTION("k-rounds decays with the cube root of the round") {
    const ScheduleSpec s = spec_of(ScheduleKind::k_rounds, 50, 0.1);
    CHECK(k_for_round(s, 1, cold, false) == 50);
    CHECK(k_for_round(s, 8, cold, false) == 25);
    CHECK(k_for_round(s, 1000, cold, false) == 5);
  }
  SECTION("k-error follows the loss ratio with a ceiling") {
    const ScheduleSpec s = spec_of(ScheduleKind::k_error, 80, 0.1, 1);
    const LossEstimator est = warmed(1, 1.0, 0.5);
    CHECK(k_for_round(s, 500, est, false) == 64);  // ceil(0.5^{1/3} * 80) = ceil(63.496)
  }
  SECTION("k-error returns K0 while warming up") {
    const ScheduleSpec s = spec_of(ScheduleKind::k_error, 80, 0.1, 10);
    LossEstimator est(10);
    for (int r = 1; r <= 9; ++r) {
      CHECK(k_for_round(s, r, est, false) == 80);
      est.push(0.01);  // far below any baseline, but the window is not full yet
    }
  }
  SECTION("k-error is clamped to [1, K0] when the estimate overshoots") {
    const ScheduleSpec s = spec_of(ScheduleKind::k_error, 40, 0.1, 1);
    CHECK(k_for_round(s, 3, warmed(1, 1.0, 5.0), false) == 40);
    CHECK(k_for_round(s, 3, warmed(1, 1.0, 1e-12), false) == 1);
  }
  SECTION("k-step divides by the divisor once plateaued") {
    const ScheduleSpec s = spec_of(ScheduleKind::k_step, 50, 0.1);
    CHECK(k_for_round(s, 7, cold, false) == 50);
    CHECK(k_for_round(s, 7, cold, true) == 5);
    const ScheduleSpec tiny = spec_of(ScheduleKind::k_step, 3, 0.1);
    CHECK(k_for_round(tiny, 7, cold, true) == 1);
  }
  SECTION("dsgd and fixed") {
    CHECK(k_for_round(spec_of(ScheduleKind::dsgd, 50, 0.1), 9, cold, false) == 1);
    CHECK(k_for_round(spec_of(ScheduleKind::fixed, 50, 0.1), 9, cold, false) == 50);
  }
  SECTION("eta-varying rules keep K0") {
    CHECK(k_for_round(spec_of(ScheduleKind::eta_rounds, 30, 0.1), 64, cold, false) == 30);
    CHECK(k_for_round(spec_of(ScheduleKind::eta_step, 30, 0.1), 64, cold, true) == 30);
  }
}

TEST_CASE("eta_for_round under each rule") {
  LossEstimator cold(100);

  SECTION("eta-rounds: inverse square root, exact ratio") {
    const ScheduleSpec s = spec_of(ScheduleKind::eta_rounds, 10, 0.01);
    CHECK(eta_for_round(s, 4, cold, false) == Approx(0.005).epsilon(1e-15));
    for (long long r : {1LL, 2LL, 9LL, 100LL, 12345LL}) {
      const double eta = eta_for_round(s, r, cold, false);
      CHECK(eta * std::sqrt(static_cast<double>(r)) == Approx(0.01).epsilon(1e-15));
    }
  }
  SECTION("eta-error follows the square root of the loss ratio") {
    const ScheduleSpec s = spec_of(ScheduleKind::eta_error, 10, 0.3, 1);
    CHECK(eta_for_round(s, 5, warmed(1, 1.0, 1.0), false) == Approx(0.3));
    CHECK(eta_for_round(s, 5, warmed(1, 1.0, 0.25), false) == Approx(0.15));
  }
  SECTION("eta-error returns eta0 while warming up") {
    const ScheduleSpec s = spec_of(ScheduleKind::eta_error, 10, 0.3, 4);
    LossEstimator est(4);
    est.push(9.0);
    est.push(9.0);
    CHECK(eta_for_round(s, 3, est, false) == 0.3);
  }
  SECTION("eta-step divides once plateaued") {
    const ScheduleSpec s = spec_of(ScheduleKind::eta_step, 10, 0.5);
    CHECK(eta_for_round(s, 2, cold, false) == 0.5);
    CHECK(eta_for_round(s, 2, cold, true) == Approx(0.05));
  }
  SECTION("K-varying rules keep eta0") {
    CHECK(eta_for_round(spec_of(ScheduleKind::k_rounds, 10, 0.25), 100, cold, false) == 0.25);
    CHECK(eta_for_round(spec_of(ScheduleKind::dsgd, 10, 0.25), 100, cold, true) == 0.25);
  }
}

TEST_CASE("k-rounds schedule properties") {
  const int k0 = 5;
  const ScheduleSpec s = spec_of(ScheduleKind::k_rounds, k0, 0.1);
  LossEstimator cold(10);
  int prev = k0;
  for (long long r = 1; r <= k0 * k0 * k0 + 10; ++r) {
    const int k = k_for_round(s, r, cold, false);
    CHECK(k <= prev);
    CHECK(k >= 1);
    CHECK(k <= k0);
    prev = k;
  }
  CHECK(k_for_round(s, static_cast<long long>(k0) * k0 * k0, cold, false) == 1);
  CHECK(k_for_round(s, static_cast<long long>(k0) * k0 * k0 - 1, cold, false) == 2);
}

TEST_CASE("k-rounds cumulative steps over 10000 rounds, frozen by exact integer summation") {
  // sum_{r=1..10000} ceil((1/r)^{1/3} * 50) computed with exact cube
  // comparisons; pins the arithmetic the relative-compute accounting rests on
  const ScheduleSpec s = spec_of(ScheduleKind::k_rounds, 50, 0.1);
  LossEstimator cold(10);
  long long total = 0;
  for (long long r = 1; r <= 10000; ++r) total += k_for_round(s, r, cold, false);
  CHECK(total == 39584);
}

TEST_CASE("error-based schedules are monotone under non-increasing estimates") {
  const ScheduleSpec ks = spec_of(ScheduleKind::k_error, 64, 0.1, 3);
  const ScheduleSpec es = spec_of(ScheduleKind::eta_error, 64, 0.8, 3);
  LossEstimator est(3);
  Rng rng(5);
  double level = 4.0;
  int prev_k = 64;
  double prev_eta = 0.8;
  for (long long r = 1; r <= 200; ++r) {
    const int k = k_for_round(ks, r, est, false);
    const double eta = eta_for_round(es, r, est, false);
    CHECK(k <= prev_k);
    CHECK(eta <= prev_eta + 1e-15);
    prev_k = k;
    prev_eta = eta;
    level *= 0.97 + 0.029 * rng.uniform01();  // decreasing, uneven
    est.push(level);
  }
}

TEST_CASE("warm-up contract: error rules return K0 and eta0 for rounds 1..s") {
  const int s_window = 12;
  const ScheduleSpec ks = spec_of(ScheduleKind::k_error, 33, 0.7, s_window);
  const ScheduleSpec es = spec_of(ScheduleKind::eta_error, 33, 0.7, s_window);
  LossEstimator est(s_window);
  for (long long r = 1; r <= s_window; ++r) {
    CHECK(k_for_round(ks, r, est, false) == 33);
    CHECK(eta_for_round(es, r, est, false) == 0.7);
    est.push(100.0 / static_cast<double>(r));
  }
}

TEST_CASE("loss estimator") {
  SECTION("constant inputs estimate the constant") {
    LossEstimator est(5);
    for (int i = 0; i < 5; ++i) record_round_loss(est, {3.25, 3.25});
    CHECK(est.estimate().value() == Approx(3.25));
    CHECK(est.f0_estimate().value() == Approx(3.25));
  }
  SECTION("window [1,2,3] has estimate 2") {
    LossEstimator est(3);
    est.push(1.0);
    CHECK_FALSE(est.estimate().has_value());
    est.push(2.0);
    est.push(3.0);
    CHECK(est.estimate().value() == Approx(2.0));
  }
  SECTION("streaming 2s rounds matches naive re-averaging, F0 frozen") {
    const int s = 7;
    LossEstimator est(s);
    std::vector<double> history;
    Rng rng(11);
    for (int r = 0; r < 2 * s; ++r) {
      const double v = 10.0 * rng.uniform01();
      history.push_back(v);
      est.push(v);
      if (static_cast<int>(history.size()) >= s) {
        double naive = 0.0;
        for (int i = static_cast<int>(history.size()) - s; i < static_cast<int>(history.size()); ++i)
          naive += history[static_cast<std::size_t>(i)];
        naive /= s;
        CHECK(est.estimate().value() == Approx(naive).epsilon(1e-12));
      }
    }
    double first_window = 0.0;
    for (int i = 0; i < s; ++i) first_window += history[static_cast<std::size_t>(i)];
    CHECK(est.f0_estimate().value() == Approx(first_window / s).epsilon(1e-12));
  }
  SECTION("record_round_loss pushes the client mean and rejects empty lists") {
    LossEstimator est(1);
    record_round_loss(est, {1.0, 2.0, 6.0});
    CHECK(est.estimate().value() == Approx(3.0));
    CHECK_THROWS_AS(record_round_loss(est, {}), ContractViolation);
  }
}

TEST_CASE("plateau detection") {
  PlateauSpec spec;
  spec.patience = 5;
  spec.min_rel_improvement = 0.0;
  spec.metric = PlateauMetric::validation_accuracy;

  SECTION("strictly improving series never fires") {
    std::vector<double> series;
    for (int i = 0; i < 100; ++i) series.push_back(0.01 * i);
    CHECK_FALSE(plateau_check(series, spec));
  }
  SECTION("constant series fires at evaluation patience+1") {
    PlateauDetector det(spec);
    for (int i = 1; i <= 5; ++i) CHECK_FALSE(det.observe(0.5));
    CHECK(det.observe(0.5));  // evaluation 6
  }
  SECTION("sawtooth with net improvement inside each patience window never fires") {
    std::vector<double> series;
    double base = 1.0;
    for (int cycle = 0; cycle < 30; ++cycle) {
      series.push_back(base);
      series.push_back(base - 0.3);
      series.push_back(base - 0.1);
      base += 0.05;  // new best every third evaluation
    }
    CHECK_FALSE(plateau_check(series, spec));
  }
  SECTION("latched once fired") {
    PlateauDetector det(spec);
    for (int i = 0; i < 10; ++i) det.observe(0.5);
    CHECK(det.fired());
    det.observe(100.0);  // improvement after the latch is ignored
    CHECK(det.fired());
  }
  SECTION("relative improvement threshold is honored for loss metrics") {
    PlateauSpec loss_spec;
    loss_spec.patience = 3;
    loss_spec.min_rel_improvement = 0.01;
    loss_spec.metric = PlateauMetric::training_loss;
    // each value improves by 2% relative: never fires
    CHECK_FALSE(plateau_check({1.0, 0.98, 0.96, 0.94, 0.92, 0.90}, loss_spec));
    // 0.1% improvements are below the bar: fires
    CHECK(plateau_check({1.0, 0.999, 0.998, 0.997, 0.996}, loss_spec));
  }
}

TEST_CASE("schedule replay is deterministic") {
  const ScheduleSpec s = spec_of(ScheduleKind::k_error, 40, 0.3, 5);
  Rng rng(123);
  std::vector<double> stream;
  for (int i = 0; i < 50; ++i) stream.push_back(5.0 * rng.uniform01());

  const auto run = [&]() {
    LossEstimator est(5);
    std::vector<std::pair<int, double>> out;
    for (long long r = 1; r <= 50; ++r) {
      out.emplace_back(k_for_round(s, r, est, false), eta_for_round(s, r, est, false));
      est.push(stream[static_cast<std::size_t>(r - 1)]);
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("schedule spec validation") {
  ScheduleSpec s;
  s.kind = ScheduleKind::dsgd;
  s.k0 = 50;
  s.eta0 = 0.1;
  CHECK(ScheduleSpec::validated(s).k0 == 1);

  s.kind = ScheduleKind::fixed;
  s.k0 = 0;
  CHECK_THROWS_AS(ScheduleSpec::validated(s), ConfigError);
  s.k0 = 5;
  s.eta0 = 0.0;
  CHECK_THROWS_AS(ScheduleSpec::validated(s), ConfigError);
  s.eta0 = 0.1;
  s.window_s = 0;
  CHECK_THROWS_AS(ScheduleSpec::validated(s), ConfigError);

  CHECK(parse_schedule_kind("K-Rounds").value() == ScheduleKind::k_rounds);
  CHECK(parse_schedule_kind("dSGD").value() == ScheduleKind::dsgd);
  CHECK_FALSE(parse_schedule_kind("nonsense").has_value());
}
