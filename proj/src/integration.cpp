#include "rkint/integration.hpp"

#include <cmath>
#include <limits>

namespace rkint {

namespace {

template <typename T>
const T& pick(std::span<const T> items, Index p) {
  return items.size() == 1 ? items.front() : items[p];
}

void require_ensemble_shape(std::span<const StochasticAggregateKernel> kernels,
                            std::span<const IncrementFamily> families, const PathEnsemble& ensemble) {
  const auto n = static_cast<std::size_t>(ensemble.paths());
  if (kernels.empty() || (kernels.size() != 1 && kernels.size() != n))
    throw Error(Errc::invalid_argument, "need one kernel or one per path");
  if (families.empty() || (families.size() != 1 && families.size() != n))
    throw Error(Errc::invalid_argument, "need one family or one per path");
  for (const auto& k : kernels) {
    if (!(k.grid() == ensemble.grid)) throw Error(Errc::invalid_argument, "kernel grid differs from ensemble grid");
  }
}

}  // namespace

IntegralResult integrate(std::span<const StochasticAggregateKernel> kernels, std::span<const IncrementFamily> families,
                         const PathEnsemble& ensemble, const StochOptions& options) {
  require_ensemble_shape(kernels, families, ensemble);
  const Index steps = ensemble.steps();
  IntegralResult out;
  out.grid = ensemble.grid;
  out.X.resize(ensemble.paths());
  out.fv_part.resize(ensemble.paths());
  out.mart_part.resize(ensemble.paths());

  const bool shared = kernels.size() == 1 && families.size() == 1;
  MatrixXd shared_theta;
  VectorXd shared_norm;
  if (shared) {
    shared_theta = integrand_path(kernels.front(), families.front(), options);
    shared_norm = stoch_norm_sq(kernels.front(), families.front(), options);
  }

  for (Index p = 0; p < ensemble.paths(); ++p) {
    const MatrixXd theta = shared ? shared_theta : integrand_path(pick(kernels, p), pick(families, p), options);
    VectorXd x = VectorXd::Zero(steps + 1);
    VectorXd b = VectorXd::Zero(steps + 1);
    VectorXd l = VectorXd::Zero(steps + 1);
    const MatrixXd& P = ensemble.P[p];
    const MatrixXd& A = ensemble.A[p];
    const MatrixXd& M = ensemble.M[p];
    for (Index k = 0; k < steps; ++k) {
      const double da = theta.row(k).dot(A.row(k + 1) - A.row(k));
      const double dm = theta.row(k).dot(M.row(k + 1) - M.row(k));
      b(k + 1) = b(k) + da;
      l(k + 1) = l(k) + dm;
      x(k + 1) = x(k) + theta.row(k).dot(P.row(k + 1) - P.row(k));
    }
    const VectorXd norm = shared ? shared_norm : stoch_norm_sq(pick(kernels, p), pick(families, p), options);
    double qv = 0.0;
    for (Index k = 0; k < steps; ++k) {
      const double dx = x(k + 1) - x(k);
      qv += dx * dx;
      out.isometry_residual = std::max(out.isometry_residual, std::abs(qv - norm(k + 1)));
    }
    out.X[p] = std::move(x);
    out.fv_part[p] = std::move(b);
    out.mart_part[p] = std::move(l);
  }
  return out;
}

IncrementFamily covariation_with_assets(const VectorXd& x, const MatrixXd& prices, const Labels& labels) {
  if (x.size() != prices.rows()) throw Error(Errc::invalid_argument, "X and prices must share the grid");
  const Index steps = x.size() - 1;
  IncrementFamily out{labels, MatrixXd(steps, prices.cols())};
  for (Index k = 0; k < steps; ++k) out.increments.row(k) = (x(k + 1) - x(k)) * (prices.row(k + 1) - prices.row(k));
  return out;
}

double isometry_residual(const VectorXd& x, const StochasticAggregateKernel& sak, const IncrementFamily& family,
                         const StochOptions& options) {
  if (x.size() != sak.steps() + 1) throw Error(Errc::invalid_argument, "X length does not match kernel grid");
  const VectorXd norm = stoch_norm_sq(sak, family, options);
  double qv = 0.0;
  double worst = 0.0;
  for (Index k = 0; k < sak.steps(); ++k) {
    const double dx = x(k + 1) - x(k);
    qv += dx * dx;
    worst = std::max(worst, std::abs(qv - norm(k + 1)));
  }
  return worst;
}

MetricEstimate roundtrip_residual(std::span<const StochasticAggregateKernel> kernels,
                                  std::span<const IncrementFamily> families, const PathEnsemble& ensemble,
                                  const StochOptions& options) {
  require_ensemble_shape(kernels, families, ensemble);
  const IntegralResult integral = integrate(kernels, families, ensemble, options);
  std::vector<StochasticAggregateKernel> ks;
  std::vector<IncrementFamily> f;
  std::vector<IncrementFamily> recovered;
  for (Index p = 0; p < ensemble.paths(); ++p) {
    ks.push_back(pick(kernels, p));
    f.push_back(pick(families, p));
    recovered.push_back(covariation_with_assets(integral.X[p], ensemble.P[p], ensemble.labels));
  }
  return rc_metric(ks, f, recovered, 0, options);
}

MetricEstimate roundtrip_discrepancy(std::span<const StochasticAggregateKernel> kernels,
                                     std::span<const IncrementFamily> families, const PathEnsemble& ensemble,
                                     const StochOptions& options) {
  require_ensemble_shape(kernels, families, ensemble);
  const IntegralResult integral = integrate(kernels, families, ensemble, options);
  const auto n = static_cast<double>(ensemble.paths());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (Index p = 0; p < ensemble.paths(); ++p) {
    const IncrementFamily back = covariation_with_assets(integral.X[p], ensemble.P[p], ensemble.labels);
    const VectorXd gap = (back.increments - pick(families, p).increments).colwise().sum().transpose();
    const double v = gap.squaredNorm();
    sum += v;
    sum_sq += v * v;
  }
  MetricEstimate out;
  out.value = sum / n;
  out.standard_error = n > 1 ? std::sqrt(std::max(0.0, (sum_sq / n - out.value * out.value)) / (n - 1.0)) : 0.0;
  return out;
}

MetricEstimate cs_metric(const IntegralResult& x, const IntegralResult& z, Index max_horizon) {
  if (!x.has_decomposition() || !z.has_decomposition())
    throw Error(Errc::missing_decomposition, "cs_metric needs the fv/martingale split of both integrals");
  if (x.paths() != z.paths() || !(x.grid == z.grid))
    throw Error(Errc::invalid_argument, "cs_metric integrals must share paths and grid");
  std::vector<VectorXd> fv_diff;
  std::vector<VectorXd> qv_root;
  for (Index p = 0; p < x.paths(); ++p) {
    fv_diff.push_back(z.fv_part[p] - x.fv_part[p]);
    const VectorXd l = z.mart_part[p] - x.mart_part[p];
    VectorXd root = VectorXd::Zero(l.size());
    double qv = 0.0;
    for (Index k = 0; k + 1 < l.size(); ++k) {
      const double dl = l(k + 1) - l(k);
      qv += dl * dl;
      root(k + 1) = std::sqrt(qv);
    }
    qv_root.push_back(std::move(root));
  }
  const MetricEstimate b = fv_metric(x.grid, fv_diff, max_horizon);
  const MetricEstimate m = capped_horizon_metric(x.grid, qv_root, max_horizon);
  // Both terms come from the same paths; the SE below ignores their correlation.
  return {b.value + m.value, std::sqrt(b.standard_error * b.standard_error + m.standard_error * m.standard_error),
          b.horizons};
}

StructuralReport structural_condition_report(const ContinuousModel& model, const TimeGrid& base, int levels,
                                             double exponent_tolerance, const StochOptions& options) {
  if (levels < 2) throw Error(Errc::invalid_argument, "structural report needs at least two levels");
  StructuralReport report;
  report.exponent_tolerance = exponent_tolerance;
  bool any_infinite = false;
  for (int l = 0; l < levels; ++l) {
    const TimeGrid grid = refine_grid(base, Index{1} << l);
    const SemimartingaleModel m = model.discretize(grid);
    const VectorXd path = stoch_norm_sq(m.model_kernel(), m.drift_family(), options);
    RefinementLevel level;
    level.steps = grid.steps();
    for (Index k = 0; k < grid.steps(); ++k) level.dt = std::max(level.dt, grid.dt(k));
    level.value = path(grid.steps());
    any_infinite = any_infinite || std::isinf(level.value);
    report.levels.push_back(level);
  }
  if (any_infinite) {
    report.exponent = std::numeric_limits<double>::infinity();
    report.verdict = Verdict::fail;
    return report;
  }
  bool all_zero = true;
  for (const auto& lv : report.levels) all_zero = all_zero && lv.value <= 0.0;
  if (all_zero) {
    report.exponent = 0.0;
    report.verdict = Verdict::pass;
    return report;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(report.levels.size());
  for (const auto& lv : report.levels) {
    const double lx = std::log(lv.dt);
    const double ly = std::log(std::max(lv.value, std::numeric_limits<double>::min()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  report.exponent = slope == 0.0 ? 0.0 : -slope;
  report.verdict = std::abs(report.exponent) <= exponent_tolerance ? Verdict::pass : Verdict::fail;
  return report;
}

}  // namespace rkint
