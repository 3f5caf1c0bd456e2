#include "rkint/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace rkint::io {

std::string format(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf" || t == "Inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf" || t == "-Inf") return -std::numeric_limits<double>::infinity();
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw Error(Errc::io_error, "not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

Table read_csv(std::istream& in) {
  Table table;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split(t, ',');
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw Error(Errc::io_error, "row has " + std::to_string(cells.size()) + " cells, header has " +
                                      std::to_string(table.header.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(Errc::io_error, "empty csv");
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) table.values(r, c) = rows[r][c];
  }
  return table;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format(values(r, c));
    out << '\n';
  }
}

Kernel read_kernel(std::istream& in) {
  Table t = read_csv(in);
  if (t.values.rows() != t.values.cols()) throw Error(Errc::io_error, "kernel file must hold a square matrix");
  return validate_kernel<double>(t.values, t.header);
}

void write_kernel(std::ostream& out, const Kernel& kernel) { write_csv(out, kernel.labels(), kernel.entries()); }

void write_ensemble(std::ostream& out, const PathEnsemble& ensemble) {
  out << "path,step,t";
  for (const auto& l : ensemble.labels) out << ',' << l;
  out << '\n';
  for (Index p = 0; p < ensemble.paths(); ++p) {
    for (Index k = 0; k <= ensemble.steps(); ++k) {
      out << ensemble.path_offset + p << ',' << k << ',' << format(ensemble.grid[k]);
      for (Index i = 0; i < ensemble.assets(); ++i) out << ',' << format(ensemble.P[p](k, i));
      out << '\n';
    }
  }
}

void write_field(std::ostream& out, const TimeGrid& grid, const std::vector<double>& maturities,
                 const Eigen::MatrixXd& field) {
  out << 't';
  for (Index m = 0; m < field.cols(); ++m) out << ',' << format(maturities[m]);
  out << '\n';
  for (Index k = 0; k < field.rows(); ++k) {
    out << format(grid[k]);
    for (Index m = 0; m < field.cols(); ++m) out << ',' << format(field(k, m));
    out << '\n';
  }
}

Eigen::MatrixXd read_field(std::istream& in, std::vector<double>* times, std::vector<double>* maturities) {
  Table t = read_csv(in);
  if (t.header.size() < 2) throw Error(Errc::io_error, "field grid needs a t column and maturities");
  if (maturities) {
    maturities->clear();
    for (std::size_t c = 1; c < t.header.size(); ++c) maturities->push_back(parse_double(t.header[c]));
  }
  if (times) {
    times->assign(t.values.rows(), 0.0);
    for (Index r = 0; r < t.values.rows(); ++r) (*times)[r] = t.values(r, 0);
  }
  return t.values.rightCols(t.values.cols() - 1);
}

}  // namespace rkint::io
