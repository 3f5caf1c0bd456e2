#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "helpers.hpp"
#include "rkint/simulation.hpp"

using namespace rkint;
using help::code_of;
using help::rows;

namespace {

SemimartingaleModel constant_model(Labels labels, const VectorXd& drift, const MatrixXd& loading, double horizon,
                                   Index steps) {
  return ContinuousModel::constant(std::move(labels), drift, loading, VectorXd::Zero(drift.size()))
      .discretize(TimeGrid::uniform(horizon, steps));
}

bool same_ensemble(const PathEnsemble& a, const PathEnsemble& b, Index offset = 0) {
  for (Index p = 0; p < b.paths(); ++p) {
    if (a.P[p + offset] != b.P[p] || a.A[p + offset] != b.A[p] || a.M[p + offset] != b.M[p] ||
        a.dW[p + offset] != b.dW[p])
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero loading gives deterministic paths") {
  const VectorXd a = VectorXd::LinSpaced(2, 0.5, -1.0);
  const auto m = constant_model({"a", "b"}, a, MatrixXd::Zero(2, 1), 2.0, 40);
  const PathEnsemble ens = simulate_ensemble(m, 5, 1);
  for (Index p = 0; p < 5; ++p) {
    CHECK(ens.M[p].isZero(0));
    for (Index k = 0; k <= 40; ++k) {
      const VectorXd expected = a * ens.grid[k];
      CHECK((ens.P[p].row(k).transpose() - expected).norm() <= 1e-13);
    }
  }
}

TEST_CASE("Brownian terminal variance") {
  const auto m = constant_model({"w"}, VectorXd::Zero(1), MatrixXd::Ones(1, 1), 1.5, 10);
  const Index n = 100000;
  const PathEnsemble ens = simulate_ensemble(m, n, 2024, {.threads = 4});
  double s1 = 0, s2 = 0, s4 = 0;
  for (const auto& M : ens.M) {
    const double x = M(10, 0);
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double var = s2 / n;
  // Var of x^2 for a centered Gaussian is 2 T^2.
  const double se = std::sqrt((s4 / n - var * var) / n);
  CHECK(std::abs(var - 1.5) <= 3 * se);
  CHECK(std::abs(s1 / n) <= 3 * std::sqrt(1.5 / n));
}

TEST_CASE("two assets on one driver are perfectly correlated") {
  const auto m = constant_model({"a", "b"}, VectorXd::Zero(2), rows({{1.0}, {-0.3}}), 1.0, 25);
  const PathEnsemble ens = simulate_ensemble(m, 20, 4);
  for (const auto& c : realized_covariation(ens)) {
    const MatrixXd agg = c.aggregate(25);
    CHECK(agg(0, 1) / std::sqrt(agg(0, 0) * agg(1, 1)) == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("refine_grid") {
  const TimeGrid g({0.0, 0.5, 2.0});
  const TimeGrid r = refine_grid(g, 2);
  REQUIRE(r.steps() == 4);
  CHECK(r[1] == 0.25);
  CHECK(r[2] == 0.5);
  CHECK(r[3] == 1.25);
  CHECK(r[4] == 2.0);
  CHECK(refine_grid(g, 1) == g);
  CHECK(code_of([&] { refine_grid(g, 0); }) == Errc::invalid_argument);
}

TEST_CASE("power drift discretizes the cumulative drift exactly") {
  const auto cm = ContinuousModel::power_drift({"a"}, VectorXd::Constant(1, 2.0), -0.5, MatrixXd::Ones(1, 1),
                                               VectorXd::Zero(1));
  const TimeGrid g = TimeGrid::uniform(1.0, 16);
  const auto m = cm.discretize(g);
  double sum = 0;
  for (Index k = 0; k < 16; ++k) sum += m.drift_increment(k)(0);
  // A(t) = 2 t^{1/2} / (1/2)
  CHECK(sum == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(code_of([] {
          ContinuousModel::power_drift({"a"}, VectorXd::Ones(1), -1.0, MatrixXd::Ones(1, 1), VectorXd::Zero(1));
        }) == Errc::invalid_argument);
}

TEST_CASE("model validation") {
  auto m = constant_model({"a"}, VectorXd::Ones(1), MatrixXd::Ones(1, 1), 1.0, 4);
  m.drift_rate(2, 0) = std::nan("");
  CHECK(code_of([&] { m.validate(); }) == Errc::invalid_argument);
  m.drift_rate(2, 0) = 1.0;
  m.loadings = {MatrixXd::Ones(2, 1)};
  CHECK(code_of([&] { m.validate(); }) == Errc::invalid_argument);
}

TEST_CASE("property: P = P(0) + A + M on every path") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Index d = gen::uniform_index(rng, 1, 4);
    const Index w = gen::uniform_index(rng, 1, 4);
    const Index steps = gen::uniform_index(rng, 1, 60);
    SemimartingaleModel m;
    m.labels = gen::labels(d);
    m.drivers = w;
    m.grid = TimeGrid::uniform(1.0, steps);
    m.drift_rate = gen::normal_matrix(rng, steps, d);
    for (Index k = 0; k < steps; ++k) m.loadings.push_back(gen::normal_matrix(rng, d, w));
    m.initial = gen::normal_vector(rng, d);
    const PathEnsemble ens = simulate_ensemble(m, 8, trial);
    for (Index p = 0; p < ens.paths(); ++p) {
      const MatrixXd gap = ens.P[p] - ens.A[p] - ens.M[p] - m.initial.transpose().replicate(steps + 1, 1);
      CHECK(gap.cwiseAbs().maxCoeff() <= 1e-12);
      for (Index k = 0; k < steps; ++k) {
        const VectorXd dm = m.loading(k) * ens.dW[p].row(k).transpose();
        CHECK((ens.M[p].row(k + 1) - ens.M[p].row(k) - dm.transpose()).norm() <= 1e-12);
      }
    }
  }
}

TEST_CASE("seeded ensembles do not depend on threads or chunking") {
  const auto m = constant_model({"a", "b"}, VectorXd::Ones(2), rows({{0.2, 0.1}, {0.0, 0.3}}), 1.0, 30);
  const PathEnsemble one = simulate_ensemble(m, 64, 77, {.threads = 1});
  const PathEnsemble many = simulate_ensemble(m, 64, 77, {.threads = 7});
  CHECK(same_ensemble(one, many));
  const PathEnsemble tail = simulate_ensemble(m, 24, 77, {.threads = 3, .path_offset = 40});
  CHECK(tail.path_offset == 40);
  CHECK(same_ensemble(one, tail, 40));
  const PathEnsemble other = simulate_ensemble(m, 64, 78);
  CHECK_FALSE(same_ensemble(one, other));
}
