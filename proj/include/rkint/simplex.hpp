#pragma once

// Dense two-phase simplex for small linear programs in standard form
//   minimize c^T x  subject to  A x = b,  x >= 0.
// Bland's rule is used for both entering and leaving choices, so the method
// cannot cycle on degenerate vertices. Intended for a few thousand columns.

#include <Eigen/Dense>

#include <string>

namespace rkint {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  long iterations = 0;
};

struct SimplexOptions {
  double pivot_tolerance = 1e-11;
  double feasibility_tolerance = 1e-9;
  long max_iterations = 200000;
};

LpResult solve_standard_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                           const SimplexOptions& options = {});

}  // namespace rkint
