#include "rkint/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "rkint/error.hpp"

namespace rkint {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Tableau layout: rows 0..m-1 constraints, row m objective (reduced costs),
// last column right-hand side.
class Tableau {
 public:
  Tableau(MatrixXd t, std::vector<Index> basis, double tol) : t_(std::move(t)), basis_(std::move(basis)), tol_(tol) {}

  Index rows() const { return t_.rows() - 1; }
  Index cols() const { return t_.cols() - 1; }
  MatrixXd& data() { return t_; }
  std::vector<Index>& basis() { return basis_; }

  void pivot(Index r, Index col) {
    t_.row(r) /= t_(r, col);
    for (Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, col) != 0.0) t_.row(i) -= t_(i, col) * t_.row(r);
    }
    basis_[r] = col;
  }

  /// Bland iterations over columns [0, usable). Returns unbounded /
  /// iteration_limit / optimal.
  LpStatus run(Index usable, long& iterations, long max_iterations) {
    const Index m = rows();
    while (true) {
      if (iterations >= max_iterations) return LpStatus::iteration_limit;
      Index entering = -1;
      for (Index j = 0; j < usable; ++j) {
        if (t_(m, j) < -tol_) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return LpStatus::optimal;
      Index leaving = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m; ++i) {
        const double a = t_(i, entering);
        if (a > tol_) {
          const double ratio = t_(i, cols()) / a;
          if (ratio < best - 1e-14 * (1.0 + std::abs(best)) ||
              (std::abs(ratio - best) <= 1e-14 * (1.0 + std::abs(best)) && basis_[i] < basis_[leaving])) {
            best = ratio;
            leaving = i;
          }
        }
      }
      if (leaving < 0) return LpStatus::unbounded;
      pivot(leaving, entering);
      ++iterations;
    }
  }

 private:
  MatrixXd t_;
  std::vector<Index> basis_;
  double tol_;
};

}  // namespace

LpResult solve_standard_lp(const MatrixXd& A_in, const VectorXd& b_in, const VectorXd& c,
                           const SimplexOptions& options) {
  const Index m = A_in.rows();
  const Index n = A_in.cols();
  if (b_in.size() != m || c.size() != n) throw Error(Errc::invalid_argument, "LP dimensions do not agree");
  LpResult result;
  if (m == 0) {
    // Only bounds: optimum at 0 unless some cost is negative.
    if ((c.array() < 0).any()) {
      result.status = LpStatus::unbounded;
      return result;
    }
    result.status = LpStatus::optimal;
    result.x = VectorXd::Zero(n);
    return result;
  }

  MatrixXd A = A_in;
  VectorXd b = b_in;
  for (Index i = 0; i < m; ++i) {
    if (b(i) < 0) {
      A.row(i) *= -1.0;
      b(i) = -b(i);
    }
  }

  // Phase 1 with one artificial per row.
  MatrixXd t = MatrixXd::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = A;
  t.block(0, n, m, m).setIdentity();
  t.topRightCorner(m, 1) = b;
  std::vector<Index> basis(m);
  for (Index i = 0; i < m; ++i) basis[i] = n + i;
  // Reduced costs of the phase-1 objective sum(artificials).
  for (Index j = 0; j < n; ++j) t(m, j) = -A.col(j).sum();
  t(m, n + m) = -b.sum();

  Tableau tab(std::move(t), std::move(basis), options.pivot_tolerance);
  result.status = tab.run(n + m, result.iterations, options.max_iterations);
  if (result.status == LpStatus::iteration_limit) return result;
  MatrixXd& T = tab.data();
  if (-T(m, n + m) > options.feasibility_tolerance * (1.0 + b.lpNorm<Eigen::Infinity>())) {
    result.status = LpStatus::infeasible;
    return result;
  }

  // Drive remaining artificials out of the basis; drop redundant rows.
  std::vector<Index> keep_rows;
  for (Index i = 0; i < m; ++i) {
    if (tab.basis()[i] >= n) {
      Index col = -1;
      for (Index j = 0; j < n; ++j) {
        if (std::abs(T(i, j)) > options.pivot_tolerance) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        tab.pivot(i, col);
      } else {
        continue;  // redundant constraint
      }
    }
    keep_rows.push_back(i);
  }

  const Index m2 = static_cast<Index>(keep_rows.size());
  MatrixXd t2 = MatrixXd::Zero(m2 + 1, n + 1);
  std::vector<Index> basis2(m2);
  for (Index r = 0; r < m2; ++r) {
    t2.row(r).head(n) = T.row(keep_rows[r]).head(n);
    t2(r, n) = T(keep_rows[r], n + m);
    basis2[r] = tab.basis()[keep_rows[r]];
  }
  // Phase-2 reduced costs c_j - c_B B^{-1} A_j.
  t2.row(m2).head(n) = c.transpose();
  for (Index r = 0; r < m2; ++r) t2.row(m2) -= c(basis2[r]) * t2.row(r);

  Tableau phase2(std::move(t2), std::move(basis2), options.pivot_tolerance);
  result.status = phase2.run(n, result.iterations, options.max_iterations);
  if (result.status != LpStatus::optimal) return result;

  result.x = VectorXd::Zero(n);
  for (Index r = 0; r < m2; ++r) result.x(phase2.basis()[r]) = phase2.data()(r, n);
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace rkint
