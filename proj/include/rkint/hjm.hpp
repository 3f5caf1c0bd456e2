#pragma once

// Heath-Jarrow-Morton bond markets on a finite maturity grid.
//
// Maturity nodes T_0 = 0 < T_1 < ... < T_M cut [0, T_M] into M cells. The
// forward rate of cell m is f(t; T_m), and bond m pays at T_{m+1}:
//   P_m(t) = exp(-sum_{l <= m} f(t; T_l) dT_l),
// i.e. the bank-account discounted price, since forwards of cells with
// T_l < t are frozen at their realized value.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "rkint/finance.hpp"
#include "rkint/simulation.hpp"

namespace rkint {

struct HjmModel {
  TimeGrid grid;                   // simulation times t_k
  std::vector<double> maturities;  // T_0 = 0 < ... < T_M
  VectorXd initial_curve;          // f(0; T_m), one per cell
  MatrixXd drift;                  // steps x cells, kappa(t_k; T_m)
  std::vector<MatrixXd> loadings;  // one steps x cells field per driver

  Index cells() const { return static_cast<Index>(maturities.size()) - 1; }
  Index drivers() const { return static_cast<Index>(loadings.size()); }
  double width(Index m) const { return maturities[m + 1] - maturities[m]; }
  /// Cell m still moves during step k (T_m >= t_k).
  bool alive(Index k, Index m) const;
  /// Throws INVALID_ARGUMENT on shape errors and on fields that are nonzero
  /// on dead cells.
  void validate() const;
  Labels bond_labels() const;

  using Field = std::function<double(double t, double T)>;
  /// Samples the fields at (t_k, T_m) and zeroes them on dead cells.
  static HjmModel from_functions(TimeGrid grid, std::vector<double> maturities,
                                 const std::function<double(double)>& initial_curve, const Field& drift,
                                 const std::vector<Field>& loadings);
  /// sigma(t; T) = sigma0 on live cells, drift from the restriction.
  static HjmModel ho_lee(TimeGrid grid, std::vector<double> maturities, double flat_rate, double sigma0);
};

enum class Quadrature { left, trapezoid };

struct IntegratedFields {
  MatrixXd kappa_star;               // steps x cells
  std::vector<MatrixXd> sigma_star;  // per driver, steps x cells
  /// ||sigma*(t_k; T_m)||^2 over drivers.
  MatrixXd sigma_star_sq() const;
};

/// kappa*(t; T_m) = sum_{l <= m} kappa(t; T_l) dT_l, sigma* likewise.
/// The trapezoid rule averages neighbouring nodes and leaks into the cell
/// that contains t.
IntegratedFields integrated_fields(const HjmModel& model, Quadrature rule = Quadrature::left);

/// kappa(t; T_m) = <sigma(t; T_m), sigma*(t; T_m) - sigma(t; T_m) dT_m / 2>,
/// which makes kappa* = ||sigma*||^2 / 2 hold exactly on the grid.
MatrixXd apply_drift_restriction(const HjmModel& model);

/// max over (t_k, T_m) of |kappa - <sigma, sigma* - sigma dT / 2>|.
double drift_restriction_residual(const HjmModel& model);

/// Drift field whose integrated version is `kappa_star` (steps x cells).
MatrixXd drift_from_integrated(const HjmModel& model, const MatrixXd& kappa_star);

/// alpha(t; T) = -kappa* + ||sigma*||^2 / 2, steps x cells.
MatrixXd bond_drift(const HjmModel& model);

struct BondSurface {
  MatrixXd forwards;  // (steps+1) x cells
  MatrixXd bonds;     // (steps+1) x cells
  VectorXd short_rate;
  MatrixXd dW;        // steps x drivers
};

struct HjmEnsemble {
  TimeGrid grid;
  std::vector<double> maturities;
  std::uint64_t seed = 0;
  Index path_offset = 0;
  std::vector<BondSurface> surfaces;

  Index paths() const { return static_cast<Index>(surfaces.size()); }
};

/// Euler update of the forward surface, one stream per global path index.
HjmEnsemble simulate_surface(const HjmModel& model, Index paths, std::uint64_t seed,
                             const SimulationOptions& options = {});

/// Bonds as assets: dA = P_k (exp(alpha dt) - 1), M = P - P(0) - A.
PathEnsemble bond_ensemble(const HjmModel& model, const HjmEnsemble& ensemble);

struct BondTestOptions {
  Index paths = 100000;
  std::uint64_t seed = 0;
  Index chunk = 20000;
  unsigned threads = 1;
  double band = 3.0;
};

/// Martingale tests of every discounted bond at the grid horizon against
/// P(0; T), streamed over chunks of paths.
std::vector<MartingaleTest> bond_martingale_tests(const HjmModel& model, const BondTestOptions& options);

/// Running sum of ||alpha(t_k; .)||^2_{c(t_k)} dt_k with c(t; S, T) =
/// <sigma*(t; S), sigma*(t; T)>, for steps starting before `horizon`.
/// Rows 0..steps; +inf from the first step where alpha leaves the range.
VectorXd viability_norm_hjm(const HjmModel& model, double horizon = std::numeric_limits<double>::infinity(),
                            const MembershipOptions& membership = {});

/// l2 distances between sigma*(t; .) on successive dyadic refinements of a
/// maturity grid, sampled at the coarse nodes.
std::vector<double> sigma_star_refinement_gaps(const std::function<double(double t, double T)>& sigma, double t,
                                               double horizon, Index base_cells, int levels);

}  // namespace rkint
