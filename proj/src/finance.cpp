#include "rkint/finance.hpp"

#include <cmath>
#include <limits>

namespace rkint {

namespace {

template <typename T>
const T& pick(std::span<const T> items, Index p) {
  return items.size() == 1 ? items.front() : items[p];
}

}  // namespace

MartingaleTest martingale_test(std::string name, const RunningStats& stats, double target, double band) {
  MartingaleTest t;
  t.name = std::move(name);
  t.mean = stats.mean();
  t.standard_error = stats.standard_error();
  t.target = target;
  t.band = band;
  t.samples = stats.count();
  const double gap = std::abs(t.mean - target);
  if (t.standard_error > 0) {
    t.z = (t.mean - target) / t.standard_error;
    t.pass = gap <= band * t.standard_error;
  } else {
    t.z = gap <= 1e-12 * (1.0 + std::abs(target)) ? 0.0 : std::numeric_limits<double>::infinity();
    t.pass = t.z == 0.0;
  }
  return t;
}

DeflatorPath compute_MA_and_deflator(std::span<const StochasticAggregateKernel> kernels,
                                     std::span<const IncrementFamily> drift, const PathEnsemble& ensemble,
                                     const DeflatorOptions& options) {
  const auto n = static_cast<std::size_t>(ensemble.paths());
  if (kernels.empty() || (kernels.size() != 1 && kernels.size() != n))
    throw Error(Errc::invalid_argument, "need one kernel or one per path");
  if (drift.empty() || (drift.size() != 1 && drift.size() != n))
    throw Error(Errc::invalid_argument, "need one drift family or one per path");

  const Index steps = ensemble.steps();
  const bool shared = kernels.size() == 1 && drift.size() == 1;
  auto theta_for = [&](Index p) {
    const auto& sak = pick(kernels, p);
    const auto& a = pick(drift, p);
    const VectorXd norm = stoch_norm_sq(sak, a, options.stoch);
    if (std::isinf(norm(steps))) throw Error(Errc::structural_fail, "drift is outside R(C)");
    return integrand_path(sak, a, options.stoch);
  };
  MatrixXd shared_theta;
  if (shared) shared_theta = theta_for(0);

  DeflatorPath out;
  out.Y.resize(n);
  out.MA.resize(n);
  out.retained.assign(n, true);
  for (Index p = 0; p < ensemble.paths(); ++p) {
    const MatrixXd theta = shared ? shared_theta : theta_for(p);
    const auto& sak = pick(kernels, p);
    const MatrixXd& M = ensemble.M[p];
    VectorXd y = VectorXd::Ones(steps + 1);
    VectorXd ma = VectorXd::Zero(steps + 1);
    for (Index k = 0; k < steps; ++k) {
      const double dma = theta.row(k).dot(M.row(k + 1) - M.row(k));
      ma(k + 1) = ma(k) + dma;
      double factor;
      if (options.form == ExponentialForm::product) {
        factor = 1.0 - dma;
      } else {
        const double qv = theta.row(k) * sak.increment(k) * theta.row(k).transpose();
        factor = std::exp(-dma - 0.5 * qv);
      }
      if (factor <= options.positivity_guard) out.retained[p] = false;
      y(k + 1) = y(k) * factor;
    }
    if (!out.retained[p]) ++out.positivity_violations;
    out.Y[p] = std::move(y);
    out.MA[p] = std::move(ma);
  }
  return out;
}

FamilyResult deflator_family(const DeflatorPath& deflator, const PathEnsemble& ensemble,
                             const SemimartingaleModel& model, const MatrixXd& loading, double positivity_guard) {
  const Index steps = ensemble.steps();
  if (deflator.paths() != ensemble.paths()) throw Error(Errc::invalid_argument, "deflator/ensemble path mismatch");
  if (loading.cols() != ensemble.drivers || (loading.rows() != 1 && loading.rows() != steps))
    throw Error(Errc::invalid_argument, "family loading must be steps x drivers or 1 x drivers");
  FamilyResult out;
  for (Index k = 0; k < steps; ++k) {
    const VectorXd l = loading.row(loading.rows() == 1 ? 0 : k).transpose();
    out.orthogonality_defect = std::max(out.orthogonality_defect, (model.loading(k) * l).cwiseAbs().maxCoeff());
  }
  out.deflator = deflator;
  out.deflator.positivity_violations = 0;
  for (Index p = 0; p < ensemble.paths(); ++p) {
    VectorXd& y = out.deflator.Y[p];
    VectorXd l_path = VectorXd::Zero(steps + 1);
    double scale = 1.0;
    for (Index k = 0; k < steps; ++k) {
      const double dl = loading.row(loading.rows() == 1 ? 0 : k).dot(ensemble.dW[p].row(k));
      l_path(k + 1) = l_path(k) + dl;
      if (1.0 + dl <= positivity_guard) out.deflator.retained[p] = false;
      scale *= 1.0 + dl;
      y(k + 1) *= scale;
    }
    out.deflator.MA[p] = std::move(l_path);
    if (!out.deflator.retained[p]) ++out.deflator.positivity_violations;
  }
  return out;
}

void accumulate_deflated_prices(const DeflatorPath& deflator, const PathEnsemble& ensemble,
                                std::vector<RunningStats>& stats) {
  const Index d = ensemble.assets();
  stats.resize(d + 1);
  const Index T = ensemble.steps();
  for (Index p = 0; p < ensemble.paths(); ++p) {
    if (!deflator.retained[p]) continue;
    const double y = deflator.Y[p](T);
    stats[0].add(y);
    for (Index i = 0; i < d; ++i) stats[i + 1].add(y * ensemble.P[p](T, i));
  }
}

std::vector<MartingaleTest> deflated_price_tests(const std::vector<RunningStats>& stats, const PathEnsemble& ensemble,
                                                 double band) {
  std::vector<MartingaleTest> out;
  out.push_back(martingale_test("Y(T)", stats.at(0), 1.0, band));
  for (Index i = 0; i < ensemble.assets(); ++i) {
    out.push_back(martingale_test("Y(T)*" + ensemble.labels[i] + "(T)", stats.at(i + 1), ensemble.P.front()(0, i), band));
  }
  return out;
}

ConsumptionStream::ConsumptionStream(VectorXd inc) : increments(std::move(inc)) {
  if ((increments.array() < 0.0).any()) throw Error(Errc::invalid_argument, "consumption increments must be >= 0");
}

VectorXd ConsumptionStream::cumulative() const {
  VectorXd out = VectorXd::Zero(increments.size() + 1);
  for (Index k = 0; k < increments.size(); ++k) out(k + 1) = out(k) + increments(k);
  return out;
}

std::vector<VectorXd> wealth_process(double x, std::span<const IncrementFamily> families,
                                     const ConsumptionStream& consumption,
                                     std::span<const StochasticAggregateKernel> kernels, const PathEnsemble& ensemble,
                                     const StochOptions& options) {
  const Index steps = ensemble.steps();
  VectorXd k_path = VectorXd::Zero(steps + 1);
  if (consumption.increments.size() != 0) {
    if (consumption.increments.size() != steps) throw Error(Errc::invalid_argument, "consumption length mismatch");
    k_path = consumption.cumulative();
  }
  const IntegralResult integral = integrate(kernels, families, ensemble, options);
  std::vector<VectorXd> out;
  out.reserve(ensemble.paths());
  for (Index p = 0; p < ensemble.paths(); ++p) out.push_back((integral.X[p] - k_path).array() + x);
  return out;
}

VectorXd simple_wealth(const SimpleStrategy& strategy, const MatrixXd& prices) {
  const Index steps = prices.rows() - 1;
  if (strategy.positions.cols() != prices.cols() ||
      (strategy.positions.rows() != 1 && strategy.positions.rows() != steps))
    throw Error(Errc::invalid_argument, "strategy positions must be steps x assets or one row");
  VectorXd x = VectorXd::Ones(steps + 1);
  bool stopped = false;
  for (Index k = 0; k < steps; ++k) {
    if (!stopped && x(k) <= strategy.stop_level) stopped = true;
    const double gain =
        stopped ? 0.0 : strategy.positions.row(strategy.positions.rows() == 1 ? 0 : k).dot(prices.row(k + 1) - prices.row(k));
    x(k + 1) = x(k) + gain;
    if (x(k + 1) < 0.0)
      throw Error(Errc::negative_wealth, strategy.name + " reaches " + std::to_string(x(k + 1)));
  }
  return x;
}

ViabilityReport viability_bound_check(const PathEnsemble& ensemble, const DeflatorPath& deflator,
                                      std::span<const SimpleStrategy> strategies, std::span<const double> levels,
                                      double band) {
  const Index T = ensemble.steps();
  ViabilityReport report;
  static constexpr double kDeltas[] = {0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<RunningStats> below(std::size(kDeltas));
  for (Index p = 0; p < ensemble.paths(); ++p) {
    if (!deflator.retained[p]) continue;
    for (std::size_t d = 0; d < std::size(kDeltas); ++d) below[d].add(deflator.Y[p](T) < kDeltas[d] ? 1.0 : 0.0);
  }
  for (const auto& strategy : strategies) {
    std::vector<double> terminal;
    RunningStats deflated;
    for (Index p = 0; p < ensemble.paths(); ++p) {
      if (!deflator.retained[p]) continue;
      const VectorXd x = simple_wealth(strategy, ensemble.P[p]);
      terminal.push_back(x(T));
      deflated.add(deflator.Y[p](T) * x(T));
    }
    for (double level : levels) {
      RunningStats tail;
      for (double v : terminal) tail.add(v > level ? 1.0 : 0.0);
      TailRow row;
      row.strategy = strategy.name;
      row.level = level;
      row.tail_probability = tail.mean();
      row.standard_error = tail.standard_error();
      row.deflated_wealth = deflated.mean();
      row.envelope = 1.0 / level;
      row.deflator_bound = std::numeric_limits<double>::infinity();
      for (std::size_t d = 0; d < std::size(kDeltas); ++d)
        row.deflator_bound = std::min(row.deflator_bound, row.deflated_wealth / (level * kDeltas[d]) + below[d].mean());
      const double slack = band * row.standard_error;
      row.within_envelope = row.tail_probability <= row.envelope + slack;
      row.within_bound = row.tail_probability <= row.deflator_bound + slack;
      report.pass = report.pass && row.within_bound;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace rkint
