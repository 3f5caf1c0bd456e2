#include "rkint/stoch_kernel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace rkint {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double step_scale(const VectorXd& df) { return df.cwiseAbs().sum(); }

}  // namespace

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw Error(Errc::invalid_argument, "time grid needs at least two points");
  if (times_.front() != 0.0) throw Error(Errc::invalid_argument, "time grid must start at 0");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw Error(Errc::invalid_argument, "time grid must be strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(double horizon, Index steps) {
  if (steps < 1 || !(horizon > 0)) throw Error(Errc::invalid_argument, "uniform grid needs steps >= 1, horizon > 0");
  std::vector<double> t(steps + 1);
  for (Index k = 0; k <= steps; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
  t.back() = horizon;
  return TimeGrid(std::move(t));
}

Index TimeGrid::index_at_or_before(double t) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(t));
  Index k = 0;
  while (k + 1 < static_cast<Index>(times_.size()) && times_[k + 1] <= t + slack) ++k;
  return k;
}

MatrixXd IncrementFamily::cumulative() const {
  MatrixXd out = MatrixXd::Zero(steps() + 1, assets());
  for (Index k = 0; k < steps(); ++k) out.row(k + 1) = out.row(k) + increments.row(k);
  return out;
}

IncrementFamily IncrementFamily::operator-(const IncrementFamily& other) const {
  if (other.increments.rows() != increments.rows() || other.increments.cols() != increments.cols())
    throw Error(Errc::invalid_argument, "increment families not conformable");
  return {labels, increments - other.increments};
}

IncrementFamily IncrementFamily::operator+(const IncrementFamily& other) const {
  if (other.increments.rows() != increments.rows() || other.increments.cols() != increments.cols())
    throw Error(Errc::invalid_argument, "increment families not conformable");
  return {labels, increments + other.increments};
}

IncrementFamily IncrementFamily::operator*(double s) const { return {labels, increments * s}; }

StochasticAggregateKernel::StochasticAggregateKernel(TimeGrid grid, Labels labels, std::vector<MatrixXd> increments,
                                                     bool validate)
    : grid_(std::move(grid)), labels_(std::move(labels)), increments_(std::move(increments)) {
  if (static_cast<Index>(increments_.size()) != grid_.steps())
    throw Error(Errc::invalid_argument, "one kernel increment per grid step required");
  const Index n = static_cast<Index>(labels_.size());
  for (const auto& inc : increments_) {
    if (inc.rows() != n || inc.cols() != n) throw Error(Errc::invalid_argument, "kernel increment size mismatch");
    if (validate) validate_kernel<double>(inc, labels_);
  }
}

MatrixXd StochasticAggregateKernel::aggregate(Index m) const {
  MatrixXd c = MatrixXd::Zero(size(), size());
  for (Index k = 0; k < m; ++k) c += increments_[k];
  return c;
}

StochasticAggregateKernel StochasticAggregateKernel::restrict(const Subset& subset) const {
  std::vector<MatrixXd> incs;
  incs.reserve(increments_.size());
  Labels names;
  for (Index i : subset) names.push_back(labels_[i]);
  for (const auto& inc : increments_) incs.push_back(inc(subset, subset));
  return StochasticAggregateKernel(grid_, std::move(names), std::move(incs), false);
}

IncrementFamily StochasticAggregateKernel::column_family(Index j) const {
  IncrementFamily out{labels_, MatrixXd(steps(), size())};
  for (Index k = 0; k < steps(); ++k) out.increments.row(k) = increments_[k].col(j).transpose();
  return out;
}

IncrementFamily StochasticAggregateKernel::apply(const MatrixXd& theta) const {
  if (theta.rows() != steps() || theta.cols() != size())
    throw Error(Errc::invalid_argument, "coefficient path must be steps x assets");
  IncrementFamily out{labels_, MatrixXd(steps(), size())};
  for (Index k = 0; k < steps(); ++k) out.increments.row(k) = (increments_[k] * theta.row(k).transpose()).transpose();
  return out;
}

StochasticAggregateKernel from_realized(const TimeGrid& grid, const Labels& labels, const MatrixXd& path) {
  if (path.rows() != grid.steps() + 1 || path.cols() != static_cast<Index>(labels.size()))
    throw Error(Errc::invalid_argument, "path must be (steps+1) x assets");
  std::vector<MatrixXd> incs;
  incs.reserve(grid.steps());
  for (Index k = 0; k < grid.steps(); ++k) {
    const VectorXd dp = (path.row(k + 1) - path.row(k)).transpose();
    incs.push_back(dp * dp.transpose());
  }
  // Outer products are symmetric and PSD by construction.
  return StochasticAggregateKernel(grid, labels, std::move(incs), false);
}

StochasticAggregateKernel from_model(const TimeGrid& grid, const Labels& labels, std::span<const MatrixXd> loadings) {
  if (loadings.size() != 1 && static_cast<Index>(loadings.size()) != grid.steps())
    throw Error(Errc::invalid_argument, "need one loading matrix or one per step");
  std::vector<MatrixXd> incs;
  incs.reserve(grid.steps());
  for (Index k = 0; k < grid.steps(); ++k) {
    const MatrixXd& sigma = loadings.size() == 1 ? loadings[0] : loadings[k];
    if (sigma.rows() != static_cast<Index>(labels.size()))
      throw Error(Errc::invalid_argument, "loading rows must match asset count");
    MatrixXd c = sigma * sigma.transpose() * grid.dt(k);
    c = 0.5 * (c + c.transpose()).eval();
    incs.push_back(std::move(c));
  }
  return StochasticAggregateKernel(grid, labels, std::move(incs), false);
}

namespace {

void require_conformable(const StochasticAggregateKernel& sak, const IncrementFamily& family) {
  if (family.steps() != sak.steps() || family.assets() != sak.size())
    throw Error(Errc::invalid_argument, "increment family does not match the kernel grid/labels");
}

double step_norm_sq(const MatrixXd& increment, const VectorXd& df, const MembershipOptions& membership) {
  if (df.isZero(0)) return 0.0;
  const auto res = spectral_norm(spectral_decomposition(increment), df, membership);
  return res.finite() ? res.value * res.value : kInf;
}

}  // namespace

VectorXd stoch_norm_sq(const StochasticAggregateKernel& sak, const IncrementFamily& family,
                       const StochOptions& options) {
  require_conformable(sak, family);
  VectorXd out = VectorXd::Zero(sak.steps() + 1);
  for (Index k = 0; k < sak.steps(); ++k) {
    if (std::isinf(out(k))) {
      out(k + 1) = kInf;
      continue;
    }
    out(k + 1) = out(k) + step_norm_sq(sak.increment(k), family.step(k), options.membership);
  }
  return out;
}

MatrixXd integrand_path(const StochasticAggregateKernel& sak, const IncrementFamily& family,
                        const StochOptions& options) {
  require_conformable(sak, family);
  MatrixXd theta = MatrixXd::Zero(sak.steps(), sak.size());
  for (Index k = 0; k < sak.steps(); ++k) {
    const VectorXd df = family.step(k);
    if (df.isZero(0)) continue;
    const auto res = spectral_norm(spectral_decomposition(sak.increment(k)), df, options.membership);
    if (!res.finite()) throw Error(Errc::not_in_rc, "step " + std::to_string(k) + " outside range(dC)");
    const VectorXd& th = *res.coefficients;
    const double scale = std::max(df.norm(), options.membership.reference_scale);
    if ((sak.increment(k) * th - df).norm() > options.solve_tolerance * scale)
      throw Error(Errc::not_in_rc, "step " + std::to_string(k) + " integrand does not reproduce dF");
    theta.row(k) = th.transpose();
  }
  return theta;
}

MatrixXd integrand_path_at_level(const StochasticAggregateKernel& sak, const IncrementFamily& family, double n) {
  require_conformable(sak, family);
  MatrixXd theta = MatrixXd::Zero(sak.steps(), sak.size());
  for (Index k = 0; k < sak.steps(); ++k) {
    const VectorXd df = family.step(k);
    const double s = df.isZero(0) ? 1.0 : step_scale(df);
    theta.row(k) = regularized_coefficients<double>(sak.increment(k), df, n, s).transpose();
  }
  return theta;
}

VectorXd stoch_pairing(const StochasticAggregateKernel& sak, const IncrementFamily& f, const IncrementFamily& h,
                       const StochOptions& options) {
  require_conformable(sak, f);
  require_conformable(sak, h);
  const MatrixXd theta_f = integrand_path(sak, f, options);
  // H must also be in R(C) for the pairing to be defined.
  (void)integrand_path(sak, h, options);
  VectorXd out = VectorXd::Zero(sak.steps() + 1);
  for (Index k = 0; k < sak.steps(); ++k) out(k + 1) = out(k) + theta_f.row(k).dot(h.increments.row(k));
  return out;
}

namespace {

Index resolve_horizons(const TimeGrid& grid, Index max_horizon) {
  const Index natural = static_cast<Index>(std::ceil(grid.horizon() - 1e-12));
  if (max_horizon <= 0) return std::max<Index>(natural, 1);
  if (max_horizon > natural)
    throw Error(Errc::horizon_exceeded, "grid ends at " + std::to_string(grid.horizon()) + ", requested " +
                                            std::to_string(max_horizon) + " horizons");
  return max_horizon;
}

double weighted_capped(const TimeGrid& grid, const VectorXd& quantity, Index horizons) {
  double z = 0.0;
  double weight = 1.0;
  for (Index k = 1; k <= horizons; ++k) {
    weight *= 0.5;
    const double t = std::min(static_cast<double>(k), grid.horizon());
    const double q = quantity(grid.index_at_or_before(t));
    z += weight * (std::isnan(q) ? 1.0 : std::min(1.0, q));
  }
  return z;
}

MetricEstimate mean_and_se(const std::vector<double>& z, Index horizons) {
  MetricEstimate out;
  out.horizons = horizons;
  const double n = static_cast<double>(z.size());
  if (z.empty()) return out;
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  out.value = mean;
  out.standard_error = z.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  return out;
}

}  // namespace

MetricEstimate capped_horizon_metric(const TimeGrid& grid, std::span<const VectorXd> quantity, Index max_horizon) {
  const Index horizons = resolve_horizons(grid, max_horizon);
  std::vector<double> z;
  z.reserve(quantity.size());
  for (const auto& q : quantity) {
    if (q.size() != grid.steps() + 1) throw Error(Errc::invalid_argument, "quantity path length mismatch");
    z.push_back(weighted_capped(grid, q, horizons));
  }
  return mean_and_se(z, horizons);
}

MetricEstimate fv_metric(const TimeGrid& grid, std::span<const VectorXd> paths, Index max_horizon) {
  std::vector<VectorXd> variation;
  variation.reserve(paths.size());
  for (const auto& b : paths) {
    if (b.size() != grid.steps() + 1) throw Error(Errc::invalid_argument, "fv path length mismatch");
    VectorXd tv = VectorXd::Zero(b.size());
    for (Index k = 0; k + 1 < b.size(); ++k) tv(k + 1) = tv(k) + std::abs(b(k + 1) - b(k));
    variation.push_back(std::move(tv));
  }
  return capped_horizon_metric(grid, variation, max_horizon);
}

MetricEstimate rc_metric(std::span<const StochasticAggregateKernel> kernels, std::span<const IncrementFamily> f,
                         std::span<const IncrementFamily> h, Index max_horizon, const StochOptions& options) {
  if (kernels.size() != f.size() || f.size() != h.size() || kernels.empty())
    throw Error(Errc::invalid_argument, "rc_metric needs matching non-empty ensembles");
  const TimeGrid& grid = kernels.front().grid();
  const Index horizons = resolve_horizons(grid, max_horizon);
  std::vector<double> z;
  z.reserve(kernels.size());
  for (std::size_t p = 0; p < kernels.size(); ++p) {
    const auto& sak = kernels[p];
    if (!(sak.grid() == grid)) throw Error(Errc::invalid_argument, "ensemble kernels must share a grid");
    require_conformable(sak, f[p]);
    require_conformable(sak, h[p]);
    VectorXd root = VectorXd::Zero(sak.steps() + 1);
    double acc = 0.0;
    for (Index k = 0; k < sak.steps(); ++k) {
      if (!std::isinf(acc)) {
        const VectorXd a = f[p].step(k);
        const VectorXd b = h[p].step(k);
        MembershipOptions m = options.membership;
        m.reference_scale = std::max({m.reference_scale, a.norm(), b.norm()});
        acc += step_norm_sq(sak.increment(k), a - b, m);
      }
      root(k + 1) = std::sqrt(acc);
    }
    z.push_back(weighted_capped(grid, root, horizons));
  }
  return mean_and_se(z, horizons);
}

IncrementFamily restrict_family(const IncrementFamily& family, const Subset& subset) {
  IncrementFamily out;
  for (Index i : subset) out.labels.push_back(family.labels.empty() ? std::to_string(i) : family.labels[i]);
  out.increments = family.increments(Eigen::all, subset);
  return out;
}

SubsetSupResult subset_sup_norm(const StochasticAggregateKernel& sak, const IncrementFamily& family,
                                const std::vector<Subset>& exhaustion, double tolerance,
                                const StochOptions& options) {
  require_conformable(sak, family);
  if (exhaustion.empty()) throw Error(Errc::invalid_argument, "exhaustion needs at least one level");
  if (!is_nested_chain(exhaustion)) throw Error(Errc::invalid_argument, "exhaustion levels must be nested");
  SubsetSupResult out;
  for (const auto& subset : exhaustion) {
    out.level_paths.push_back(stoch_norm_sq(sak.restrict(subset), restrict_family(family, subset), options));
  }
  // Level-to-level difference must itself be nondecreasing in time.
  for (std::size_t l = 1; l < out.level_paths.size(); ++l) {
    const VectorXd& lo = out.level_paths[l - 1];
    const VectorXd& hi = out.level_paths[l];
    for (Index k = 0; k + 1 < lo.size(); ++k) {
      const double inc_lo = lo(k + 1) - lo(k);
      const double inc_hi = hi(k + 1) - hi(k);
      if (std::isinf(hi(k + 1))) continue;
      if (std::isinf(lo(k + 1))) {
        out.max_violation = kInf;
        continue;
      }
      const double violation = (inc_lo - inc_hi) / (1.0 + std::abs(inc_hi));
      out.max_violation = std::max(out.max_violation, violation);
    }
  }
  if (out.max_violation > tolerance)
    throw Error(Errc::monotonicity_violation, "worst relative decrease " + std::to_string(out.max_violation));
  out.final_level = out.level_paths.back();
  return out;
}

}  // namespace rkint
