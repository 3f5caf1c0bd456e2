#pragma once

#include <doctest.h>

#include <Eigen/Dense>

#include <initializer_list>

#include "rkint/error.hpp"

namespace help {

template <typename F>
rkint::Errc code_of(F&& f) {
  try {
    f();
  } catch (const rkint::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return rkint::Errc::invalid_argument;
}

inline Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(r.size(), r.begin()->size());
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace help
