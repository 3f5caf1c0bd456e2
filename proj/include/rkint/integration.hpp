#pragma once

// Extended stochastic integrals X^F = int <dF, dP>_{dC} on a grid, their
// covariations with the assets, the isometry and the structural condition.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "rkint/simulation.hpp"
#include "rkint/stoch_kernel.hpp"

namespace rkint {

struct IntegralResult {
  TimeGrid grid;
  // One (steps+1) vector per path.
  std::vector<VectorXd> X;
  std::vector<VectorXd> fv_part;    // sum <theta^F, dA>
  std::vector<VectorXd> mart_part;  // sum <theta^F, dM>
  double isometry_residual = 0.0;   // filled by integrate when kernels are realized

  Index paths() const { return static_cast<Index>(X.size()); }
  bool has_decomposition() const { return fv_part.size() == X.size() && mart_part.size() == X.size(); }
};

/// `kernels` and `families` each hold either one shared element or one per
/// path. X_{k+1} - X_k = (theta^F_k)^T dP_k, split along P = A + M.
IntegralResult integrate(std::span<const StochasticAggregateKernel> kernels, std::span<const IncrementFamily> families,
                         const PathEnsemble& ensemble, const StochOptions& options = {});

/// dF_{k,i} = dX_k dP_{k,i}.
IncrementFamily covariation_with_assets(const VectorXd& x, const MatrixXd& prices, const Labels& labels);

/// max_k |[X,X](t_k) - int_0^{t_k} ||dF||^2_{dC}| on one path.
double isometry_residual(const VectorXd& x, const StochasticAggregateKernel& sak, const IncrementFamily& family,
                         const StochOptions& options = {});

/// rc_metric between F and the covariations of X^F with the assets.
MetricEstimate roundtrip_residual(std::span<const StochasticAggregateKernel> kernels,
                                  std::span<const IncrementFamily> families, const PathEnsemble& ensemble,
                                  const StochOptions& options = {});

/// Mean over paths of ||F'(T) - F(T)||^2 where F' are the realized
/// covariations of X^F. O(dt) for model kernels; used in refinement studies.
MetricEstimate roundtrip_discrepancy(std::span<const StochasticAggregateKernel> kernels,
                                     std::span<const IncrementFamily> families, const PathEnsemble& ensemble,
                                     const StochOptions& options = {});

/// ||B_Z - B_X||_FV + ||[L_Z - L_X]^{1/2}||_FV.
MetricEstimate cs_metric(const IntegralResult& x, const IntegralResult& z, Index max_horizon = 0);

struct RefinementLevel {
  Index steps = 0;
  double dt = 0.0;  // largest step width
  double value = 0.0;  // int_0^T ||dA||^2_{dC} under the model kernel
};

enum class Verdict { pass, fail };
inline std::string to_string(Verdict v) { return v == Verdict::pass ? "PASS" : "FAIL"; }

struct StructuralReport {
  std::vector<RefinementLevel> levels;
  double exponent = 0.0;  // value ~ dt^{-exponent}
  double exponent_tolerance = 0.05;
  Verdict verdict = Verdict::pass;
};

/// Drift norm under the model kernel on `levels` dyadic refinements of
/// `base`; least squares slope of log(value) against log(dt).
StructuralReport structural_condition_report(const ContinuousModel& model, const TimeGrid& base, int levels,
                                             double exponent_tolerance = 0.05, const StochOptions& options = {});

}  // namespace rkint
