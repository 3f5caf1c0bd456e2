#pragma once

// Viability, local martingale deflators and wealth-consumption processes
// for a simulated market P = P(0) + A + M.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rkint/integration.hpp"
#include "rkint/simulation.hpp"

namespace rkint {

/// Streaming mean / standard error. Merging is order-sensitive only through
/// floating point, and callers merge in a fixed order.
class RunningStats {
 public:
  void add(double v) {
    ++n_;
    sum_ += v;
    sum_sq_ += v * v;
  }
  void merge(const RunningStats& o) {
    n_ += o.n_;
    sum_ += o.sum_;
    sum_sq_ += o.sum_sq_;
  }
  Index count() const { return n_; }
  double mean() const { return n_ ? sum_ / static_cast<double>(n_) : 0.0; }
  double variance() const {
    if (n_ < 2) return 0.0;
    const double n = static_cast<double>(n_);
    return std::max(0.0, (sum_sq_ - sum_ * sum_ / n) / (n - 1.0));
  }
  double standard_error() const { return n_ ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  Index n_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

struct MartingaleTest {
  std::string name;
  double mean = 0.0;
  double standard_error = 0.0;
  double target = 0.0;
  double z = 0.0;
  double band = 3.0;
  Index samples = 0;
  bool pass = true;
};

/// |mean - target| <= band * SE. A zero SE passes only on exact agreement
/// up to 1e-12 relative.
MartingaleTest martingale_test(std::string name, const RunningStats& stats, double target, double band = 3.0);

enum class ExponentialForm {
  product,      // Y_{k+1} = Y_k (1 - dM^A_k)
  exponential,  // Y_{k+1} = Y_k exp(-dM^A_k - 0.5 theta^T dC theta)
};

struct DeflatorOptions {
  double positivity_guard = 1e-6;
  ExponentialForm form = ExponentialForm::product;
  StochOptions stoch{};
};

struct DeflatorPath {
  std::vector<VectorXd> Y;        // per path, Y(0) = 1
  std::vector<VectorXd> MA;       // per path, M^A (or the added L for families)
  std::vector<bool> retained;     // false when a guarded step occurred
  Index positivity_violations = 0;

  Index paths() const { return static_cast<Index>(Y.size()); }
  double guarded_fraction() const {
    return Y.empty() ? 0.0 : static_cast<double>(positivity_violations) / static_cast<double>(Y.size());
  }
};

/// M^A = sum (theta^A)^T dM with dC theta^A = dA, and the deflator built
/// from -M^A. `kernels` / `drift` hold one shared element or one per path.
/// Throws STRUCTURAL_FAIL when A leaves R(C).
DeflatorPath compute_MA_and_deflator(std::span<const StochasticAggregateKernel> kernels,
                                     std::span<const IncrementFamily> drift, const PathEnsemble& ensemble,
                                     const DeflatorOptions& options = {});

struct FamilyResult {
  DeflatorPath deflator;
  double orthogonality_defect = 0.0;  // max_k |sigma_k l_k|; zero for a valid family member
};

/// Y' = Y prod(1 + dL_k), dL_k = l_k^T dW_k. `loading` is steps x drivers
/// or a single row used for every step.
FamilyResult deflator_family(const DeflatorPath& deflator, const PathEnsemble& ensemble,
                             const SemimartingaleModel& model, const MatrixXd& loading,
                             double positivity_guard = DeflatorOptions{}.positivity_guard);

/// Martingale tests of Y(T) against 1 and of Y(T) P_i(T) against P_i(0),
/// accumulated into `stats` (size assets + 1) for chunked runs.
void accumulate_deflated_prices(const DeflatorPath& deflator, const PathEnsemble& ensemble,
                                std::vector<RunningStats>& stats);
std::vector<MartingaleTest> deflated_price_tests(const std::vector<RunningStats>& stats, const PathEnsemble& ensemble,
                                                 double band = 3.0);

struct ConsumptionStream {
  VectorXd increments;  // per step, nonnegative
  ConsumptionStream() = default;
  explicit ConsumptionStream(VectorXd inc);
  VectorXd cumulative() const;
};

/// x + X^F - K per path; nonnegativity is left to the caller.
std::vector<VectorXd> wealth_process(double x, std::span<const IncrementFamily> families,
                                     const ConsumptionStream& consumption,
                                     std::span<const StochasticAggregateKernel> kernels, const PathEnsemble& ensemble,
                                     const StochOptions& options = {});

/// Simple strategy: deterministic positions per step, liquidated (held in
/// cash) from the first node where wealth is at or below `stop_level`.
struct SimpleStrategy {
  std::string name;
  MatrixXd positions;  // steps x assets, or one row for every step
  double stop_level = 0.0;
};

/// Wealth with X(0) = 1; throws NEGATIVE_WEALTH if any node is below zero.
VectorXd simple_wealth(const SimpleStrategy& strategy, const MatrixXd& prices);

struct TailRow {
  std::string strategy;
  double level = 0.0;
  double tail_probability = 0.0;
  double standard_error = 0.0;
  double deflated_wealth = 0.0;  // E[Y(T) X(T)]
  double envelope = 0.0;         // 1 / level
  double deflator_bound = 0.0;   // min over delta of E[YX]/(level delta) + P[Y < delta]
  bool within_envelope = true;
  bool within_bound = true;
};

struct ViabilityReport {
  std::vector<TailRow> rows;
  bool pass = true;
};

ViabilityReport viability_bound_check(const PathEnsemble& ensemble, const DeflatorPath& deflator,
                                      std::span<const SimpleStrategy> strategies, std::span<const double> levels,
                                      double band = 3.0);

}  // namespace rkint
