#pragma once

// Random instances for property tests. Every generator takes the engine by
// reference so a test case is reproducible from its seed.

#include <Eigen/Dense>

#include <random>
#include <string>

#include "rkint/rkhs.hpp"

namespace gen {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline VectorXd normal_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> z;
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

inline MatrixXd normal_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> z;
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

inline Eigen::Index uniform_index(std::mt19937_64& rng, Eigen::Index lo, Eigen::Index hi) {
  return std::uniform_int_distribution<Eigen::Index>(lo, hi)(rng);
}

inline rkint::Labels labels(Eigen::Index n) {
  rkint::Labels out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

/// B B^T with B dim x rank, so the kernel has exactly `rank` nonzero modes.
inline rkint::Kernel psd_kernel(std::mt19937_64& rng, Eigen::Index dim, Eigen::Index rank) {
  const MatrixXd b = normal_matrix(rng, dim, rank);
  return rkint::Kernel(labels(dim), b * b.transpose());
}

}  // namespace gen
