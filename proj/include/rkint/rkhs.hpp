#pragma once

// Reproducing-kernel Hilbert space algebra over a finite index set.
//
// A kernel c on I = {0..n-1} is a symmetric positive-semidefinite matrix.
// Its rkHs R(c) is the range of c with inner product <f, g>_c = theta_f^T g
// where c theta_f = f. Two independent routes to the norm are provided:
//   * spectral_norm: eigen-decomposition, pseudo-inverse on retained modes;
//   * norm_via_limit: monotone limit of <(c + eps id)^{-1} f, f> as eps -> 0,
//     which diverges linearly in 1/eps exactly when f leaves the range.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rkint/error.hpp"

namespace rkint {

using Index = Eigen::Index;
using Labels = std::vector<std::string>;
/// Positions into a kernel's label list. Order matters for restrictions.
using Subset = std::vector<Index>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct RkhsTolerances {
  double psd = 1e-10;   // relative, for validate_kernel
  double member = 1e-8; // relative null-space component for membership
  double solve = 1e-9;  // relative residual accepted for c theta = f
};

template <typename Scalar>
class BasicKernel {
 public:
  BasicKernel() = default;

  /// Unchecked construction. Use validate_kernel for untrusted input.
  BasicKernel(Labels labels, Mat<Scalar> entries)
      : labels_(std::move(labels)), entries_(std::move(entries)) {}

  const Labels& labels() const { return labels_; }
  const Mat<Scalar>& entries() const { return entries_; }
  Index size() const { return entries_.rows(); }

  Scalar operator()(Index i, Index j) const { return entries_(i, j); }

  /// Column c_{I j}.
  Vec<Scalar> column(Index j) const { return entries_.col(j); }

  /// Restriction c_{JJ}, labels carried along.
  BasicKernel restrict(const Subset& subset) const {
    Mat<Scalar> sub(subset.size(), subset.size());
    Labels names;
    names.reserve(subset.size());
    for (std::size_t a = 0; a < subset.size(); ++a) {
      names.push_back(labels_.empty() ? std::to_string(subset[a]) : labels_[subset[a]]);
      for (std::size_t b = 0; b < subset.size(); ++b) sub(a, b) = entries_(subset[a], subset[b]);
    }
    return BasicKernel(std::move(names), std::move(sub));
  }

  std::optional<Index> find(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<Index>(it - labels_.begin());
  }

 private:
  Labels labels_;
  Mat<Scalar> entries_;
};

using Kernel = BasicKernel<double>;

/// Eigen-pairs sorted with nonincreasing eigenvalues. Eigenvalues at or
/// below the rank threshold are stored as exact zeros.
template <typename Scalar>
struct SpectralDecomposition {
  Vec<Scalar> eigenvalues;
  Mat<Scalar> eigenvectors;  // columns orthonormal
  Scalar rank_threshold{0};
  Index rank{0};

  Scalar largest() const { return eigenvalues.size() ? eigenvalues(0) : Scalar(0); }
};

template <typename Scalar>
struct NormResult {
  Scalar value{0};              // the norm (not squared), +inf when f is outside R(c)
  std::optional<Vec<Scalar>> coefficients;
  std::vector<Scalar> profile;  // <theta^{f;n}, f> per level, limit route only
  std::vector<double> levels;
  Scalar growth_ratio{1};       // last/second-to-last profile value

  bool finite() const { return std::isfinite(static_cast<double>(value)); }
  Scalar squared() const { return finite() ? value * value : value; }
};

namespace detail {

template <typename Scalar>
constexpr Scalar infinity() {
  return std::numeric_limits<Scalar>::infinity();
}

inline void require_conformable(Index a, Index b, const char* what) {
  if (a != b) throw Error(Errc::invalid_argument, std::string(what) + ": dimension mismatch");
}

}  // namespace detail

template <typename Derived>
SpectralDecomposition<typename Derived::Scalar> spectral_decomposition(
    const Eigen::MatrixBase<Derived>& entries) {
  using Scalar = typename Derived::Scalar;
  SpectralDecomposition<Scalar> out;
  const Index n = entries.rows();
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(entries.derived());
  if (solver.info() != Eigen::Success) throw Error(Errc::solve_failed, "eigen decomposition");
  // Eigen returns ascending order.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  const Scalar top = std::max(out.eigenvalues(0), Scalar(0));
  out.rank_threshold = Scalar(n) * std::numeric_limits<Scalar>::epsilon() * top;
  out.rank = 0;
  for (Index j = 0; j < n; ++j) {
    if (out.eigenvalues(j) > out.rank_threshold) {
      ++out.rank;
    } else {
      out.eigenvalues(j) = Scalar(0);
    }
  }
  return out;
}

template <typename Scalar>
SpectralDecomposition<Scalar> spectral_decomposition(const BasicKernel<Scalar>& kernel) {
  return spectral_decomposition(kernel.entries());
}

/// Checks symmetry (exact) and positive semidefiniteness (relative to the
/// largest eigenvalue) and wraps the matrix as a kernel.
template <typename Scalar>
BasicKernel<Scalar> validate_kernel(const Mat<Scalar>& entries, Labels labels,
                                    double psd_tolerance = RkhsTolerances{}.psd) {
  if (entries.rows() != entries.cols()) throw Error(Errc::invalid_argument, "kernel must be square");
  if (labels.empty()) {
    for (Index i = 0; i < entries.rows(); ++i) labels.push_back(std::to_string(i));
  }
  if (static_cast<Index>(labels.size()) != entries.rows())
    throw Error(Errc::invalid_argument, "label count does not match kernel size");
  {
    Labels sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(Errc::invalid_argument, "duplicate kernel label");
  }
  for (Index i = 0; i < entries.rows(); ++i) {
    for (Index j = 0; j < i; ++j) {
      if (entries(i, j) != entries(j, i))
        throw Error(Errc::asymmetric, "entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    if (!std::isfinite(static_cast<double>(entries(i, i))))
      throw Error(Errc::invalid_argument, "non-finite kernel entry");
  }
  if (!entries.allFinite()) throw Error(Errc::invalid_argument, "non-finite kernel entry");
  if (entries.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(entries, Eigen::EigenvaluesOnly);
    const Scalar lo = solver.eigenvalues()(0);
    const Scalar hi = solver.eigenvalues()(entries.rows() - 1);
    if (lo < -Scalar(psd_tolerance) * std::max(hi, Scalar(0)) || (hi <= 0 && lo < 0))
      throw Error(Errc::not_psd, "smallest eigenvalue " + std::to_string(static_cast<double>(lo)));
  }
  return BasicKernel<Scalar>(std::move(labels), entries);
}

struct MembershipOptions {
  double member_tolerance = RkhsTolerances{}.member;
  /// Absolute floor for the membership test: null-space components are
  /// compared with member_tolerance * max(|f|, reference_scale).
  double reference_scale = 0.0;
};

/// Spectral oracle. value^2 = sum over retained modes <u_j, f>^2 / lambda_j,
/// +inf when a null mode carries a non-negligible component of f.
template <typename Scalar, typename Derived>
NormResult<Scalar> spectral_norm(const SpectralDecomposition<Scalar>& spectrum,
                                 const Eigen::MatrixBase<Derived>& f,
                                 const MembershipOptions& options = {}) {
  detail::require_conformable(spectrum.eigenvectors.rows(), f.size(), "spectral_norm");
  NormResult<Scalar> out;
  const Vec<Scalar> proj = spectrum.eigenvectors.transpose() * f;
  const Scalar scale = std::max<Scalar>(f.norm(), Scalar(options.reference_scale));
  const Scalar null_limit = Scalar(options.member_tolerance) * scale;
  Vec<Scalar> theta = Vec<Scalar>::Zero(f.size());
  Scalar sq{0};
  for (Index j = 0; j < proj.size(); ++j) {
    const Scalar lambda = spectrum.eigenvalues(j);
    if (lambda > 0) {
      const Scalar w = proj(j) / lambda;
      sq += proj(j) * w;
      theta += w * spectrum.eigenvectors.col(j);
    } else if (std::abs(proj(j)) > null_limit) {
      out.value = detail::infinity<Scalar>();
      return out;
    }
  }
  out.value = std::sqrt(sq);
  out.coefficients = std::move(theta);
  return out;
}

template <typename Scalar, typename Derived>
NormResult<Scalar> spectral_norm(const BasicKernel<Scalar>& kernel, const Eigen::MatrixBase<Derived>& f,
                                 const MembershipOptions& options = {}) {
  return spectral_norm(spectral_decomposition(kernel), f, options);
}

/// Solves (c + (1/n) id) theta = f.
template <typename Scalar, typename Derived>
Vec<Scalar> regularized_coefficients(const Mat<Scalar>& entries, const Eigen::MatrixBase<Derived>& f,
                                     double n, double shift_scale = 1.0) {
  if (!(n > 0)) throw Error(Errc::invalid_argument, "regularization level must be positive");
  detail::require_conformable(entries.rows(), f.size(), "regularized_coefficients");
  Mat<Scalar> shifted = entries;
  shifted.diagonal().array() += Scalar(shift_scale / n);
  Eigen::LLT<Mat<Scalar>> llt(shifted);
  if (llt.info() != Eigen::Success) throw Error(Errc::solve_failed, "c + id/n not positive definite");
  Vec<Scalar> theta = llt.solve(f.derived().template cast<Scalar>());
  if (!theta.allFinite()) throw Error(Errc::solve_failed, "non-finite regularized solution");
  return theta;
}

template <typename Scalar, typename Derived>
Vec<Scalar> regularized_coefficients(const BasicKernel<Scalar>& kernel, const Eigen::MatrixBase<Derived>& f,
                                     double n) {
  return regularized_coefficients<Scalar>(kernel.entries(), f, n);
}

struct LimitSchedule {
  std::vector<double> levels;  // increasing n
  double divergence_ratio = 1.5;
  double convergence_tolerance = 1e-6;  // relative change at the last two levels
  /// Shift used is (1/n) * scale; scale <= 0 means max diagonal of c.
  double shift_scale = 0.0;

  static LimitSchedule geometric(int first_decade = 0, int last_decade = 12) {
    LimitSchedule s;
    for (int d = first_decade; d <= last_decade; ++d) s.levels.push_back(std::pow(10.0, d));
    return s;
  }
};

/// Monotone-limit route: profile <theta^{f;n}, f> along the schedule, then
/// decide convergence (finite norm) or linear divergence (+inf).
template <typename Scalar, typename Derived>
NormResult<Scalar> norm_via_limit(const BasicKernel<Scalar>& kernel, const Eigen::MatrixBase<Derived>& f,
                                  const LimitSchedule& schedule = LimitSchedule::geometric()) {
  detail::require_conformable(kernel.size(), f.size(), "norm_via_limit");
  if (schedule.levels.size() < 2) throw Error(Errc::invalid_argument, "schedule needs two levels");
  NormResult<Scalar> out;
  if (f.size() == 0 || f.isZero(0)) {
    out.value = Scalar(0);
    out.coefficients = Vec<Scalar>::Zero(f.size());
    return out;
  }
  double scale = schedule.shift_scale;
  if (scale <= 0) scale = std::max(static_cast<double>(kernel.entries().diagonal().maxCoeff()), 0.0);
  if (scale <= 0) scale = 1.0;  // zero kernel: any shift diverges the same way

  Vec<Scalar> theta;
  for (double n : schedule.levels) {
    theta = regularized_coefficients<Scalar>(kernel.entries(), f, n, scale);
    out.profile.push_back(theta.dot(f.derived().template cast<Scalar>()));
    out.levels.push_back(n);
  }
  const std::size_t last = out.profile.size() - 1;
  const Scalar hi = out.profile[last];
  const Scalar lo = out.profile[last - 1];
  out.growth_ratio = lo > 0 ? hi / lo : detail::infinity<Scalar>();
  if (out.growth_ratio > Scalar(schedule.divergence_ratio)) {
    out.value = detail::infinity<Scalar>();
    return out;
  }
  if (std::abs(hi - lo) > Scalar(schedule.convergence_tolerance) * std::abs(hi)) {
    throw Error(Errc::inconclusive, "norm profile neither converged nor diverging (ratio " +
                                        std::to_string(static_cast<double>(out.growth_ratio)) + ")");
  }
  // v(eps) = v0 - a eps + O(eps^2): one Richardson step removes the linear term.
  const double r = schedule.levels[last] / schedule.levels[last - 1];
  const Scalar limit = (Scalar(r) * hi - lo) / Scalar(r - 1.0);
  out.value = std::sqrt(std::max(limit, hi));
  out.coefficients = std::move(theta);
  return out;
}

/// <f, g>_c. Throws NOT_IN_RKHS when either argument is outside R(c).
template <typename Scalar, typename DerivedF, typename DerivedG>
Scalar inner_product(const BasicKernel<Scalar>& kernel, const Eigen::MatrixBase<DerivedF>& f,
                     const Eigen::MatrixBase<DerivedG>& g, const MembershipOptions& options = {}) {
  detail::require_conformable(f.size(), g.size(), "inner_product");
  const auto spectrum = spectral_decomposition(kernel);
  const auto nf = spectral_norm(spectrum, f, options);
  if (!nf.finite()) throw Error(Errc::not_in_rkhs, "first argument outside R(c)");
  const auto ng = spectral_norm(spectrum, g, options);
  if (!ng.finite()) throw Error(Errc::not_in_rkhs, "second argument outside R(c)");
  // Symmetrized: each side equals the other in exact arithmetic.
  return Scalar(0.5) * (nf.coefficients->dot(g.derived().template cast<Scalar>()) +
                        ng.coefficients->dot(f.derived().template cast<Scalar>()));
}

/// Orthogonal projection of f onto span{c_{Ij} : j in J}. The result h
/// agrees with f on J; computed through the generalized inverse of c_{JJ}.
template <typename Scalar, typename Derived>
Vec<Scalar> project(const BasicKernel<Scalar>& kernel, const Eigen::MatrixBase<Derived>& f,
                    const Subset& subset, const MembershipOptions& options = {}) {
  detail::require_conformable(kernel.size(), f.size(), "project");
  if (subset.empty()) throw Error(Errc::invalid_argument, "projection subset is empty");
  if (!spectral_norm(kernel, f, options).finite()) throw Error(Errc::not_in_rkhs, "project");
  const auto restricted = kernel.restrict(subset);
  Vec<Scalar> f_sub(subset.size());
  for (std::size_t a = 0; a < subset.size(); ++a) f_sub(a) = f(subset[a]);
  const auto sub_norm = spectral_norm(restricted, f_sub, options);
  if (!sub_norm.finite()) throw Error(Errc::not_in_rkhs, "restriction outside R(c_JJ)");
  Vec<Scalar> h = Vec<Scalar>::Zero(f.size());
  for (std::size_t a = 0; a < subset.size(); ++a) h += (*sub_norm.coefficients)(a) * kernel.column(subset[a]);
  return h;
}

/// ||f_J||_{c_JJ} along a chain of subsets. Entries may be +inf.
template <typename Scalar, typename Derived>
std::vector<Scalar> subset_norm_profile(const BasicKernel<Scalar>& kernel, const Eigen::MatrixBase<Derived>& f,
                                        const std::vector<Subset>& chain, const MembershipOptions& options = {}) {
  detail::require_conformable(kernel.size(), f.size(), "subset_norm_profile");
  std::vector<Scalar> out;
  out.reserve(chain.size());
  for (const auto& subset : chain) {
    Vec<Scalar> f_sub(subset.size());
    for (std::size_t a = 0; a < subset.size(); ++a) f_sub(a) = f(subset[a]);
    out.push_back(spectral_norm(kernel.restrict(subset), f_sub, options).value);
  }
  return out;
}

/// True when every set in the chain contains its predecessor.
inline bool is_nested_chain(const std::vector<Subset>& chain) {
  for (std::size_t l = 1; l < chain.size(); ++l) {
    for (Index i : chain[l - 1]) {
      if (std::find(chain[l].begin(), chain[l].end(), i) == chain[l].end()) return false;
    }
  }
  return true;
}

}  // namespace rkint
