#pragma once

// Stochastic aggregate kernels on a time grid. Every differential identity
// is read per grid step: dC becomes the kernel increment over [t_k, t_{k+1}),
// dF the increment of a finite-variation family over the same step.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "rkint/rkhs.hpp"

namespace rkint {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class TimeGrid {
 public:
  TimeGrid() = default;
  /// Strictly increasing, starts at 0, at least two points.
  explicit TimeGrid(std::vector<double> times);

  static TimeGrid uniform(double horizon, Index steps);

  const std::vector<double>& times() const { return times_; }
  Index steps() const { return static_cast<Index>(times_.size()) - 1; }
  double operator[](Index k) const { return times_[k]; }
  double dt(Index k) const { return times_[k + 1] - times_[k]; }
  double horizon() const { return times_.back(); }
  /// Largest node index with t_k <= t (within a relative 1e-12 slack).
  Index index_at_or_before(double t) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> times_;
};

/// Per-step vectors dF_k; row k of `increments` is the step [t_k, t_{k+1}).
struct IncrementFamily {
  Labels labels;
  MatrixXd increments;  // steps x assets

  Index steps() const { return increments.rows(); }
  Index assets() const { return increments.cols(); }
  VectorXd step(Index k) const { return increments.row(k).transpose(); }
  /// F(t_m) = sum_{k<m} dF_k, rows 0..steps.
  MatrixXd cumulative() const;

  IncrementFamily operator-(const IncrementFamily& other) const;
  IncrementFamily operator+(const IncrementFamily& other) const;
  IncrementFamily operator*(double s) const;
};

class StochasticAggregateKernel {
 public:
  StochasticAggregateKernel() = default;
  /// Each increment must be symmetric PSD and match the label count.
  StochasticAggregateKernel(TimeGrid grid, Labels labels, std::vector<MatrixXd> increments,
                            bool validate = true);

  const TimeGrid& grid() const { return grid_; }
  const Labels& labels() const { return labels_; }
  Index steps() const { return static_cast<Index>(increments_.size()); }
  Index size() const { return static_cast<Index>(labels_.size()); }
  const MatrixXd& increment(Index k) const { return increments_[k]; }
  const std::vector<MatrixXd>& increments() const { return increments_; }

  Kernel step_kernel(Index k) const { return Kernel(labels_, increments_[k]); }
  /// C(t_m), rows 0..steps.
  MatrixXd aggregate(Index m) const;
  StochasticAggregateKernel restrict(const Subset& subset) const;
  /// Column family C_{I j}: dF_k = dC_k e_j.
  IncrementFamily column_family(Index j) const;
  /// dF_k = dC_k theta_k for a per-step (steps x assets) coefficient matrix.
  IncrementFamily apply(const MatrixXd& theta) const;

 private:
  TimeGrid grid_;
  Labels labels_;
  std::vector<MatrixXd> increments_;
};

struct StochOptions {
  MembershipOptions membership{};
  double solve_tolerance = RkhsTolerances{}.solve;
};

/// dC_k = dP_k dP_k^T from a (steps+1) x assets price path.
StochasticAggregateKernel from_realized(const TimeGrid& grid, const Labels& labels, const MatrixXd& path);

/// dC_k = sigma_k sigma_k^T dt_k. `loadings` holds one (assets x drivers)
/// matrix per step, or a single matrix used for every step.
StochasticAggregateKernel from_model(const TimeGrid& grid, const Labels& labels,
                                     std::span<const MatrixXd> loadings);

/// Running sum of per-step squared norms ||dF_k||^2_{dC_k}; rows 0..steps,
/// +inf from the first step that leaves the range onwards.
VectorXd stoch_norm_sq(const StochasticAggregateKernel& sak, const IncrementFamily& family,
                       const StochOptions& options = {});

/// Per-step integrands theta^F_k (steps x assets), the n -> infinity limit
/// of (dC_k + (1/n) s_k id)^{-1} dF_k with s_k = sum_i |dF_{k,i}|.
MatrixXd integrand_path(const StochasticAggregateKernel& sak, const IncrementFamily& family,
                        const StochOptions& options = {});

/// Finite-n member of the same sequence; used to watch the limit form.
MatrixXd integrand_path_at_level(const StochasticAggregateKernel& sak, const IncrementFamily& family, double n);

/// Running sum of (theta^F_k)^T dH_k, rows 0..steps.
VectorXd stoch_pairing(const StochasticAggregateKernel& sak, const IncrementFamily& f, const IncrementFamily& h,
                       const StochOptions& options = {});

struct MetricEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  Index horizons = 0;
};

/// sum_{k=1}^{K} 2^{-k} E[1 ^ sqrt(int_0^k ||d(F - H)||^2_{dC})] over an
/// ensemble of per-path kernels and families. max_horizon <= 0 selects
/// ceil(horizon). Membership of each step difference is judged against the
/// magnitudes of the two families being compared.
MetricEstimate rc_metric(std::span<const StochasticAggregateKernel> kernels, std::span<const IncrementFamily> f,
                         std::span<const IncrementFamily> h, Index max_horizon = 0,
                         const StochOptions& options = {});

/// Per-path scalar finite-variation paths B (rows 0..steps) on a shared grid.
/// sum_k 2^{-k} E[1 ^ int_0^k |dB|].
MetricEstimate fv_metric(const TimeGrid& grid, std::span<const VectorXd> paths, Index max_horizon = 0);

/// Same weighting applied directly to a nonnegative nondecreasing quantity
/// path (e.g. sqrt of a quadratic variation).
MetricEstimate capped_horizon_metric(const TimeGrid& grid, std::span<const VectorXd> quantity, Index max_horizon = 0);

struct SubsetSupResult {
  std::vector<VectorXd> level_paths;  // stoch_norm_sq on each restricted kernel
  VectorXd final_level;
  double max_violation = 0.0;         // worst decrease of level-to-level increments
};

/// Exhaustion J^1 within J^2 within ...: level paths and the monotonicity
/// certificate. Throws MONOTONICITY_VIOLATION beyond `tolerance` (relative).
SubsetSupResult subset_sup_norm(const StochasticAggregateKernel& sak, const IncrementFamily& family,
                                const std::vector<Subset>& exhaustion, double tolerance = 1e-10,
                                const StochOptions& options = {});

IncrementFamily restrict_family(const IncrementFamily& family, const Subset& subset);

}  // namespace rkint
