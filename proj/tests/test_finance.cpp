#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "helpers.hpp"
#include "rkint/finance.hpp"

using namespace rkint;
using help::code_of;
using help::rows;

namespace {

// dP = sigma^2 lambda dt + sigma dW on one driver, so theta^A = lambda.
SemimartingaleModel market(double sigma, double lambda, Index steps, Index drivers = 1) {
  MatrixXd load = MatrixXd::Zero(1, drivers);
  load(0, 0) = sigma;
  return ContinuousModel::constant({"p"}, VectorXd::Constant(1, sigma * sigma * lambda), load, VectorXd::Ones(1))
      .discretize(TimeGrid::uniform(1.0, steps));
}

DeflatorPath deflator_for(const SemimartingaleModel& m, const PathEnsemble& ens, DeflatorOptions o = {}) {
  const auto c = m.model_kernel();
  const IncrementFamily a = m.drift_family();
  return compute_MA_and_deflator({&c, 1}, {&a, 1}, ens, o);
}

}  // namespace

TEST_CASE("martingale_test") {
  RunningStats s;
  for (double v : {1.0, 2.0, 3.0}) s.add(v);
  CHECK(s.mean() == 2.0);
  CHECK(s.variance() == 1.0);
  const auto t = martingale_test("x", s, 2.0 + 0.5 * std::sqrt(1.0 / 3.0));
  CHECK(t.pass);
  CHECK(t.z == doctest::Approx(-0.5));
  CHECK_FALSE(martingale_test("x", s, 10.0).pass);

  RunningStats flat;
  for (int i = 0; i < 4; ++i) flat.add(1.0);
  CHECK(martingale_test("y", flat, 1.0).pass);
  const auto off = martingale_test("y", flat, 1.1);
  CHECK_FALSE(off.pass);
  CHECK(std::isinf(off.z));

  RunningStats a, b, all;
  for (int i = 0; i < 10; ++i) (i < 4 ? a : b).add(i * 0.5), all.add(i * 0.5);
  a.merge(b);
  CHECK(a.mean() == doctest::Approx(all.mean()));
  CHECK(a.variance() == doctest::Approx(all.variance()));
}

TEST_CASE("zero drift gives the unit deflator") {
  const auto m = market(0.3, 0.0, 20);
  const PathEnsemble ens = simulate_ensemble(m, 10, 1);
  for (auto form : {ExponentialForm::product, ExponentialForm::exponential}) {
    const auto y = deflator_for(m, ens, {.form = form});
    for (const auto& path : y.Y) CHECK(path.isApproxToConstant(1.0));
    CHECK(y.positivity_violations == 0);
  }
}

TEST_CASE("deflator of a one-asset market") {
  const double sigma = 0.2, lambda = 1.5;
  const auto m = market(sigma, lambda, 50);
  const PathEnsemble ens = simulate_ensemble(m, 40000, 3, {.threads = 4});
  const auto y = deflator_for(m, ens);
  for (Index p = 0; p < 20; ++p) {
    CHECK((y.MA[p] - lambda * ens.M[p].col(0)).cwiseAbs().maxCoeff() <= 1e-12);
    double prod = 1;
    for (Index k = 0; k < 50; ++k) prod *= 1 - lambda * (ens.M[p](k + 1, 0) - ens.M[p](k, 0));
    CHECK(y.Y[p](50) == doctest::Approx(prod).epsilon(1e-12));
  }
  std::vector<RunningStats> stats;
  accumulate_deflated_prices(y, ens, stats);
  for (const auto& t : deflated_price_tests(stats, ens)) CHECK_MESSAGE(t.pass, t.name << " z=" << t.z);

  // Undeflated prices drift upward and fail the same test.
  DeflatorPath unit = y;
  for (auto& path : unit.Y) path.setOnes();
  std::vector<RunningStats> raw;
  accumulate_deflated_prices(unit, ens, raw);
  CHECK_FALSE(deflated_price_tests(raw, ens)[1].pass);

  const auto e = deflator_for(m, ens, {.form = ExponentialForm::exponential});
  std::vector<RunningStats> es;
  accumulate_deflated_prices(e, ens, es);
  for (const auto& t : deflated_price_tests(es, ens)) CHECK(t.pass);
}

TEST_CASE("positivity guard") {
  const auto calm = market(0.2, 1.0, 100);
  const PathEnsemble ens = simulate_ensemble(calm, 5000, 4);
  CHECK(deflator_for(calm, ens).guarded_fraction() <= 1e-3);

  // lambda sigma sqrt(dt) = 1: one-step factors 1 - Z hit zero often.
  const auto wild = market(0.5, 2.0, 1);
  const PathEnsemble w = simulate_ensemble(wild, 2000, 4);
  const auto y = deflator_for(wild, w);
  CHECK(y.guarded_fraction() > 0.1);
  std::vector<RunningStats> stats;
  accumulate_deflated_prices(y, w, stats);
  CHECK(stats[0].count() == 2000 - y.positivity_violations);
}

TEST_CASE("drift outside the kernel range is a structural failure") {
  const auto m = market(0.0, 0.0, 10);
  SemimartingaleModel bad = m;
  bad.drift_rate.setConstant(0.1);
  const PathEnsemble ens = simulate_ensemble(bad, 2, 1);
  CHECK(code_of([&] { deflator_for(bad, ens); }) == Errc::structural_fail);
}

TEST_CASE("deflator family") {
  const auto m = market(0.2, 1.0, 40, 2);
  const PathEnsemble ens = simulate_ensemble(m, 40000, 9, {.threads = 4});
  const auto y = deflator_for(m, ens);

  const auto same = deflator_family(y, ens, m, MatrixXd::Zero(1, 2));
  CHECK(same.orthogonality_defect == 0.0);
  for (Index p = 0; p < 10; ++p) CHECK(same.deflator.Y[p] == y.Y[p]);

  const auto ortho = deflator_family(y, ens, m, rows({{0.0, 0.5}}));
  CHECK(ortho.orthogonality_defect == 0.0);
  std::vector<RunningStats> s1;
  accumulate_deflated_prices(ortho.deflator, ens, s1);
  for (const auto& t : deflated_price_tests(s1, ens)) CHECK(t.pass);

  const auto loaded = deflator_family(y, ens, m, rows({{0.5, 0.0}}));
  CHECK(loaded.orthogonality_defect == doctest::Approx(0.1));
  std::vector<RunningStats> s2;
  accumulate_deflated_prices(loaded.deflator, ens, s2);
  // E[Y'(T)] = (1 - 0.5 * lambda * sigma * dt)^40, about exp(-0.1).
  const auto tests = deflated_price_tests(s2, ens);
  CHECK_FALSE(tests[0].pass);
  CHECK(tests[0].mean == doctest::Approx(std::pow(1 - 0.1 / 40, 40)).epsilon(0.01));

  CHECK(code_of([&] { deflator_family(y, ens, m, MatrixXd::Zero(1, 3)); }) == Errc::invalid_argument);
}

TEST_CASE("consumption streams") {
  const ConsumptionStream k((VectorXd(3) << 0.5, 0, 1).finished());
  CHECK(k.cumulative().isApprox((VectorXd(4) << 0, 0.5, 0.5, 1.5).finished()));
  CHECK(code_of([] { ConsumptionStream((VectorXd(2) << 0.1, -0.1).finished()); }) == Errc::invalid_argument);
}

TEST_CASE("wealth processes") {
  const auto m = market(0.2, 1.0, 30);
  const auto c = m.model_kernel();
  const PathEnsemble ens = simulate_ensemble(m, 40000, 12, {.threads = 4});

  const IncrementFamily zero{c.labels(), MatrixXd::Zero(30, 1)};
  for (const auto& w : wealth_process(2.0, {&zero, 1}, {}, {&c, 1}, ens)) CHECK(w.isApproxToConstant(2.0));

  const IncrementFamily col = c.column_family(0);
  const auto hold = wealth_process(1.0, {&col, 1}, {}, {&c, 1}, ens);
  for (Index p = 0; p < 10; ++p)
    CHECK((hold[p] - (ens.P[p].col(0).array() - ens.P[p](0, 0) + 1.0).matrix()).cwiseAbs().maxCoeff() <= 1e-12);

  // With K(T) = 0.3 the deflated terminal wealth has mean x - 0.3.
  const ConsumptionStream k(VectorXd::Constant(30, 0.01));
  const auto spend = wealth_process(1.0, {&col, 1}, k, {&c, 1}, ens);
  const auto y = deflator_for(m, ens);
  RunningStats yx;
  for (Index p = 0; p < ens.paths(); ++p) yx.add(y.Y[p](30) * spend[p](30));
  CHECK(martingale_test("YX", yx, 0.7).pass);
  CHECK(yx.mean() < 1.0 - 3 * yx.standard_error());

  CHECK(code_of([&] { wealth_process(1.0, {&col, 1}, ConsumptionStream(VectorXd::Ones(3)), {&c, 1}, ens); }) ==
        Errc::invalid_argument);
}

TEST_CASE("simple_wealth") {
  const MatrixXd prices = rows({{1.0}, {1.5}, {0.4}, {0.9}});
  CHECK(simple_wealth({"cash", MatrixXd::Zero(1, 1)}, prices).isApproxToConstant(1.0));
  const VectorXd hold = simple_wealth({"hold", MatrixXd::Ones(1, 1)}, prices);
  CHECK(hold.isApprox((VectorXd(4) << 1, 1.5, 0.4, 0.9).finished()));
  // Stops after the drop to 0.4 and keeps cash.
  const VectorXd stop = simple_wealth({"stop", MatrixXd::Ones(1, 1), 0.5}, prices);
  CHECK(stop.isApprox((VectorXd(4) << 1, 1.5, 0.4, 0.4).finished()));
  CHECK(code_of([&] { simple_wealth({"lever", MatrixXd::Constant(1, 1, 2.0)}, prices); }) == Errc::negative_wealth);
  CHECK(code_of([&] { simple_wealth({"bad", MatrixXd::Ones(2, 1)}, prices); }) == Errc::invalid_argument);
}

TEST_CASE("viability bound check") {
  const auto flat = market(0.2, 0.0, 20);
  const PathEnsemble ens = simulate_ensemble(flat, 20000, 5, {.threads = 4});
  const auto y = deflator_for(flat, ens);
  const std::vector<SimpleStrategy> strategies{{"cash", MatrixXd::Zero(1, 1)}, {"half", MatrixXd::Constant(1, 1, 0.5)}};
  const std::vector<double> levels{1.0, 1.05, 1.2, 2.0};
  const auto report = viability_bound_check(ens, y, strategies, levels);
  CHECK(report.pass);
  REQUIRE(report.rows.size() == 8);
  for (std::size_t i = 0; i < 4; ++i) CHECK(report.rows[i].tail_probability == 0.0);
  for (const auto& r : report.rows) {
    CHECK(r.within_envelope);
    CHECK(r.envelope == doctest::Approx(1.0 / r.level));
  }

  const auto up = market(0.2, 2.0, 20);
  const PathEnsemble e2 = simulate_ensemble(up, 20000, 6, {.threads = 4});
  const auto y2 = deflator_for(up, e2);
  const std::vector<SimpleStrategy> lever{{"hold", MatrixXd::Constant(1, 1, 2.0), 0.5}};
  const auto r2 = viability_bound_check(e2, y2, lever, levels);
  CHECK(r2.pass);
  for (const auto& r : r2.rows) CHECK(r.deflated_wealth == doctest::Approx(1.0).epsilon(0.05));
}
