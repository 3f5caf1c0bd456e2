#pragma once

// CSV and number formatting shared by the tools. Every number is written
// with 17 significant digits so that a write/read cycle is lossless;
// infinities are spelled `inf` / `-inf`.

#include <Eigen/Dense>

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "rkint/hjm.hpp"
#include "rkint/rkhs.hpp"
#include "rkint/simulation.hpp"

namespace rkint::io {

std::string format(double v);
double parse_double(const std::string& text);
std::vector<std::string> split(const std::string& text, char sep);
std::string trim(const std::string& s);

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Comma separated, one header line, numeric body. Blank lines and lines
/// starting with `#` are skipped.
Table read_csv(std::istream& in);
void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values);

/// Kernel files: header = labels, body = square matrix. Validated.
Kernel read_kernel(std::istream& in);
void write_kernel(std::ostream& out, const Kernel& kernel);

/// Long format: path, step, t, then one column per asset.
void write_ensemble(std::ostream& out, const PathEnsemble& ensemble);

/// Field grids: first column t, one column per maturity node T_m.
void write_field(std::ostream& out, const TimeGrid& grid, const std::vector<double>& maturities,
                 const Eigen::MatrixXd& field);
Eigen::MatrixXd read_field(std::istream& in, std::vector<double>* times = nullptr,
                           std::vector<double>* maturities = nullptr);

}  // namespace rkint::io
