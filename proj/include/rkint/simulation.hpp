#pragma once

// Euler generation of continuous semimartingales P = P(0) + A + M with the
// drift and martingale parts kept separately. Coefficients are evaluated at
// the left end of each step so every integrand built from them is
// predictable.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rkint/stoch_kernel.hpp"

namespace rkint {

struct SemimartingaleModel {
  Labels labels;
  Index drivers = 0;
  TimeGrid grid;
  MatrixXd drift_rate;             // steps x assets, a_i(t_k)
  std::vector<MatrixXd> loadings;  // per step (assets x drivers); size 1 means constant
  VectorXd initial;

  Index assets() const { return static_cast<Index>(labels.size()); }
  const MatrixXd& loading(Index k) const { return loadings.size() == 1 ? loadings.front() : loadings[k]; }
  /// Throws INVALID_ARGUMENT on non-finite or non-conformable fields.
  void validate() const;
  /// Deterministic drift increments dA_k = a(t_k) dt_k.
  VectorXd drift_increment(Index k) const { return drift_rate.row(k).transpose() * grid.dt(k); }
  StochasticAggregateKernel model_kernel() const;
  /// A as an increment family (steps x assets).
  IncrementFamily drift_family() const;
};

/// Grid-free description used for refinement studies: the cumulative drift
/// A(t) and the loading function sigma(t).
struct ContinuousModel {
  Labels labels;
  Index drivers = 0;
  VectorXd initial;
  std::function<VectorXd(double)> cumulative_drift;
  std::function<MatrixXd(double)> loading;

  /// Exact drift increments A(t_{k+1}) - A(t_k), loadings at t_k.
  SemimartingaleModel discretize(const TimeGrid& grid) const;

  static ContinuousModel constant(Labels labels, VectorXd drift_rate, MatrixXd loading, VectorXd initial);
  /// a_i(t) = coefficient_i * t^exponent, exponent > -1.
  static ContinuousModel power_drift(Labels labels, VectorXd coefficient, double exponent, MatrixXd loading,
                                     VectorXd initial);
};

struct PathEnsemble {
  TimeGrid grid;
  Labels labels;
  std::uint64_t seed = 0;
  Index path_offset = 0;
  Index drivers = 0;
  // One (steps+1) x assets matrix per path.
  std::vector<MatrixXd> P, A, M;
  // One steps x drivers matrix per path (Brownian increments).
  std::vector<MatrixXd> dW;

  Index paths() const { return static_cast<Index>(P.size()); }
  Index assets() const { return static_cast<Index>(labels.size()); }
  Index steps() const { return grid.steps(); }
};

struct SimulationOptions {
  unsigned threads = 1;  // 0 = hardware concurrency
  Index path_offset = 0; // global index of the first generated path
};

/// Independent stream for global path index `path`.
std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path);

/// Runs body(i) for i in [0, count) on `threads` workers, contiguous blocks.
void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& body);

PathEnsemble simulate_ensemble(const SemimartingaleModel& model, Index paths, std::uint64_t seed,
                               const SimulationOptions& options = {});

/// Per-path realized kernels dC_k = dP_k dP_k^T.
std::vector<StochasticAggregateKernel> realized_covariation(const PathEnsemble& ensemble);

/// Split every step into `factor` equal pieces; old nodes are kept.
TimeGrid refine_grid(const TimeGrid& grid, Index factor);

}  // namespace rkint
