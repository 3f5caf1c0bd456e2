#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "helpers.hpp"
#include "rkint/simulation.hpp"
#include "rkint/stoch_kernel.hpp"

using namespace rkint;
using help::code_of;
using help::rows;

TEST_CASE("TimeGrid validation") {
  CHECK(code_of([] { TimeGrid({0.0}); }) == Errc::invalid_argument);
  CHECK(code_of([] { TimeGrid({0.0, 1.0, 1.0}); }) == Errc::invalid_argument);
  CHECK(code_of([] { TimeGrid({0.5, 1.0}); }) == Errc::invalid_argument);
  const TimeGrid g = TimeGrid::uniform(2.0, 4);
  CHECK(g.steps() == 4);
  CHECK(g.dt(3) == doctest::Approx(0.5));
  CHECK(g.index_at_or_before(1.0) == 2);
  CHECK(g.index_at_or_before(1.2) == 2);
}

TEST_CASE("from_realized") {
  const TimeGrid g = TimeGrid::uniform(2.0, 2);
  const auto c = from_realized(g, {"a"}, rows({{0}, {1}, {0}}));
  CHECK(c.increment(0)(0, 0) == 1.0);
  CHECK(c.increment(1)(0, 0) == 1.0);
  CHECK(c.aggregate(2)(0, 0) == 2.0);

  const auto same = from_realized(g, {"a", "b"}, rows({{0, 0}, {0.3, 0.3}, {-0.2, -0.2}}));
  for (Index k = 0; k < 2; ++k) CHECK(spectral_decomposition(same.step_kernel(k)).rank == 1);
}

TEST_CASE("realized covariation of a correlated Brownian pair") {
  const double rho = 0.6;
  const TimeGrid g = TimeGrid::uniform(1.0, 50);
  SemimartingaleModel m;
  m.labels = {"a", "b"};
  m.drivers = 2;
  m.grid = g;
  m.drift_rate = MatrixXd::Zero(50, 2);
  m.loadings = {rows({{1, 0}, {rho, std::sqrt(1 - rho * rho)}})};
  m.initial = VectorXd::Zero(2);
  const Index n = 4000;
  const PathEnsemble ens = simulate_ensemble(m, n, 3);
  double sum = 0, sum_sq = 0;
  for (const auto& c : realized_covariation(ens)) {
    const double v = c.aggregate(50)(0, 1);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - rho) <= 3 * se);
}

TEST_CASE("from_model") {
  const TimeGrid g = TimeGrid::uniform(0.05, 5);
  const MatrixXd one = MatrixXd::Ones(1, 1);
  const auto c = from_model(g, {"a"}, {&one, 1});
  CHECK(c.increment(2)(0, 0) == doctest::Approx(0.01).epsilon(1e-14));

  const MatrixXd diag = MatrixXd::Identity(3, 3);
  const auto d = from_model(TimeGrid::uniform(2.0, 8), {"a", "b", "c"}, {&diag, 1});
  CHECK((d.aggregate(8) - 2.0 * MatrixXd::Identity(3, 3)).norm() <= 1e-14);

  const MatrixXd shared = rows({{1}, {2}});
  const auto s = from_model(g, {"a", "b"}, {&shared, 1});
  CHECK(spectral_decomposition(s.step_kernel(0)).rank == 1);
}

TEST_CASE("stoch_norm_sq") {
  const TimeGrid g = TimeGrid::uniform(3.0, 30);
  const MatrixXd one = MatrixXd::Ones(1, 1);
  const auto c = from_model(g, {"w"}, {&one, 1});
  IncrementFamily f{{"w"}, MatrixXd::Constant(30, 1, 0.1)};
  CHECK(stoch_norm_sq(c, f)(30) == doctest::Approx(3.0).epsilon(1e-12));

  std::mt19937_64 rng(5);
  const MatrixXd load = gen::normal_matrix(rng, 3, 2);
  const auto c3 = from_model(g, gen::labels(3), {&load, 1});
  const VectorXd theta = gen::normal_vector(rng, 3);
  const IncrementFamily f3 = c3.apply(theta.transpose().replicate(30, 1));
  const double expected = 30 * theta.dot(c3.increment(0) * theta);
  CHECK(stoch_norm_sq(c3, f3)(30) == doctest::Approx(expected).epsilon(1e-10));

  IncrementFamily bad = f3;
  const VectorXd null_dir = spectral_decomposition(c3.step_kernel(7)).eigenvectors.col(2);
  bad.increments.row(7) += null_dir.transpose();
  const VectorXd path = stoch_norm_sq(c3, bad);
  CHECK(std::isfinite(path(7)));
  for (Index k = 8; k <= 30; ++k) CHECK(std::isinf(path(k)));
  CHECK(code_of([&] { integrand_path(c3, bad); }) == Errc::not_in_rc);
}

TEST_CASE("integrand_path") {
  const TimeGrid g = TimeGrid::uniform(1.0, 1);
  const auto ones = StochasticAggregateKernel(g, {"a", "b"}, {MatrixXd::Ones(2, 2)});
  IncrementFamily f{{"a", "b"}, rows({{1, 1}})};
  CHECK((integrand_path(ones, f).row(0) - rows({{0.5, 0.5}})).norm() <= 1e-12);

  IncrementFamily zero{{"a", "b"}, MatrixXd::Zero(1, 2)};
  CHECK(integrand_path(ones, zero).isZero(0));

  const auto diag = StochasticAggregateKernel(g, {"a", "b"}, {rows({{2, 0}, {0, 5}})});
  IncrementFamily fd{{"a", "b"}, rows({{3, -1}})};
  CHECK((integrand_path(diag, fd).row(0) - rows({{1.5, -0.2}})).norm() <= 1e-14);

  // The finite-n members approach the limit.
  double prev = 1e300;
  for (double n : {1e2, 1e4, 1e6, 1e8}) {
    const double err = (integrand_path_at_level(ones, f, n) - integrand_path(ones, f)).norm();
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-7);
}

TEST_CASE("stoch_pairing") {
  std::mt19937_64 rng(17);
  const TimeGrid g = TimeGrid::uniform(1.0, 20);
  const MatrixXd load = gen::normal_matrix(rng, 3, 2);
  const auto c = from_model(g, gen::labels(3), {&load, 1});
  const IncrementFamily f = c.apply(gen::normal_matrix(rng, 20, 3));
  CHECK((stoch_pairing(c, f, f) - stoch_norm_sq(c, f)).norm() <= 1e-12);
  for (Index j = 0; j < 3; ++j) {
    const VectorXd rep = stoch_pairing(c, c.column_family(j), f);
    const MatrixXd cum = f.cumulative();
    CHECK((rep - cum.col(j)).norm() <= 1e-8 * (1.0 + cum.col(j).norm()));
  }
  IncrementFamily early = f, late = f;
  early.increments.bottomRows(10).setZero();
  late.increments.topRows(10).setZero();
  CHECK(std::abs(stoch_pairing(c, early, late)(20)) <= 1e-14);
}

TEST_CASE("metrics") {
  const TimeGrid g = TimeGrid::uniform(3.0, 30);
  const MatrixXd one = MatrixXd::Ones(1, 1);
  const auto c = from_model(g, {"w"}, {&one, 1});
  IncrementFamily f{{"w"}, MatrixXd::Constant(30, 1, 0.1)};
  CHECK(rc_metric({&c, 1}, {&f, 1}, {&f, 1}).value == 0.0);

  VectorXd b = VectorXd::Constant(31, 2.0);
  b(0) = 0.0;
  const auto est = fv_metric(g, {&b, 1}, 3);
  CHECK(est.value == doctest::Approx(1.0 - std::pow(2.0, -3)).epsilon(1e-15));
  CHECK(code_of([&] { fv_metric(g, {&b, 1}, 5); }) == Errc::horizon_exceeded);

  VectorXd ramp(31);
  for (Index k = 0; k <= 30; ++k) ramp(k) = 0.01 * k;
  double prev = -1;
  for (double lambda : {0.0, 0.5, 1.0, 5.0, 50.0}) {
    const VectorXd scaled = lambda * ramp;
    const double v = fv_metric(g, {&scaled, 1}).value;
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("subset_sup_norm") {
  const TimeGrid g = TimeGrid::uniform(1.0, 10);
  const MatrixXd diag = VectorXd::LinSpaced(3, 1, 3).asDiagonal();
  const auto c = from_model(g, gen::labels(3), {&diag, 1});
  const std::vector<Subset> chain{{0}, {0, 1}, {0, 1, 2}};

  IncrementFamily on_first{gen::labels(3), MatrixXd::Zero(10, 3)};
  on_first.increments.col(0).setConstant(0.1);
  const auto flat = subset_sup_norm(c, on_first, chain);
  CHECK(flat.level_paths[0](10) == doctest::Approx(flat.level_paths[2](10)));

  IncrementFamily spread{gen::labels(3), MatrixXd::Constant(10, 3, 0.1)};
  const auto grow = subset_sup_norm(c, spread, chain);
  // dC = diag(1, 4, 9) dt: ten steps of 0.01 / (a_i^2 * 0.1) give 1 / a_i^2.
  CHECK(grow.level_paths[0](10) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(grow.level_paths[1](10) == doctest::Approx(1.0 + 1.0 / 4).epsilon(1e-12));
  CHECK(grow.level_paths[2](10) == doctest::Approx(1.0 + 1.0 / 4 + 1.0 / 9).epsilon(1e-12));
  CHECK((grow.final_level - stoch_norm_sq(c, spread)).norm() <= 1e-14);
  CHECK(grow.max_violation <= 1e-10);
}

TEST_CASE("property: realized per-step exactness and Cauchy-Schwarz") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = gen::uniform_index(rng, 1, 5);
    const Index steps = gen::uniform_index(rng, 2, 40);
    const TimeGrid g = TimeGrid::uniform(1.0, steps);
    MatrixXd path = MatrixXd::Zero(steps + 1, d);
    for (Index k = 0; k < steps; ++k) path.row(k + 1) = path.row(k) + 0.1 * gen::normal_vector(rng, d).transpose();
    const auto c = from_realized(g, gen::labels(d), path);
    const MatrixXd theta = gen::normal_matrix(rng, steps, d);
    const MatrixXd theta2 = gen::normal_matrix(rng, steps, d);
    const IncrementFamily f = c.apply(theta);
    const IncrementFamily h = c.apply(theta2);
    const VectorXd norm = stoch_norm_sq(c, f);
    const VectorXd normh = stoch_norm_sq(c, h);
    const VectorXd pair = stoch_pairing(c, f, h);
    for (Index k = 0; k < steps; ++k) {
      const double inc = std::pow(theta.row(k).dot(path.row(k + 1) - path.row(k)), 2);
      CHECK(std::abs((norm(k + 1) - norm(k)) - inc) <= 1e-10 * (1e-12 + inc) + 1e-15);
      CHECK(std::abs(pair(k + 1)) <= std::sqrt(norm(k + 1) * normh(k + 1)) * (1 + 1e-12) + 1e-15);
    }
  }
}
