#include "rkint/hjm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace rkint {

namespace {

constexpr double kSlack = 1e-12;

/// Index of the cell containing t, clamped to the grid.
Index cell_of(const std::vector<double>& maturities, double t) {
  const auto it = std::upper_bound(maturities.begin(), maturities.end(), t * (1.0 + kSlack) + kSlack);
  const Index m = static_cast<Index>(it - maturities.begin()) - 1;
  return std::clamp<Index>(m, 0, static_cast<Index>(maturities.size()) - 2);
}

MatrixXd cumulate(const HjmModel& model, const MatrixXd& field, Quadrature rule) {
  const Index steps = model.grid.steps();
  const Index M = model.cells();
  MatrixXd out = MatrixXd::Zero(steps, M);
  for (Index k = 0; k < steps; ++k) {
    double acc = 0.0;
    for (Index m = 0; m < M; ++m) {
      double value = field(k, m);
      if (rule == Quadrature::trapezoid) value = 0.5 * (field(k, m) + field(k, std::min(m + 1, M - 1)));
      acc += value * model.width(m);
      out(k, m) = acc;
    }
  }
  return out;
}

BondSurface simulate_one(const HjmModel& model, std::mt19937_64& rng) {
  const Index steps = model.grid.steps();
  const Index M = model.cells();
  const Index D = model.drivers();
  std::normal_distribution<double> normal(0.0, 1.0);
  BondSurface s;
  s.forwards.resize(steps + 1, M);
  s.bonds.resize(steps + 1, M);
  s.short_rate.resize(steps + 1);
  s.dW.resize(steps, D);
  s.forwards.row(0) = model.initial_curve.transpose();
  for (Index k = 0; k < steps; ++k) {
    const double dt = model.grid.dt(k);
    const double sd = std::sqrt(dt);
    for (Index j = 0; j < D; ++j) s.dW(k, j) = sd * normal(rng);
    s.forwards.row(k + 1) = s.forwards.row(k) + model.drift.row(k) * dt;
    for (Index j = 0; j < D; ++j) s.forwards.row(k + 1) += model.loadings[j].row(k) * s.dW(k, j);
  }
  for (Index k = 0; k <= steps; ++k) {
    double acc = 0.0;
    for (Index m = 0; m < M; ++m) {
      acc += s.forwards(k, m) * model.width(m);
      s.bonds(k, m) = std::exp(-acc);
    }
    s.short_rate(k) = s.forwards(k, cell_of(model.maturities, model.grid[k]));
  }
  return s;
}

}  // namespace

bool HjmModel::alive(Index k, Index m) const { return maturities[m] >= grid[k] * (1.0 - kSlack) - kSlack; }

void HjmModel::validate() const {
  const Index steps = grid.steps();
  if (maturities.size() < 2 || maturities.front() != 0.0)
    throw Error(Errc::invalid_argument, "maturity grid must start at 0 with at least one cell");
  for (std::size_t m = 1; m < maturities.size(); ++m) {
    if (!(maturities[m] > maturities[m - 1])) throw Error(Errc::invalid_argument, "maturities must increase");
  }
  const Index M = cells();
  if (initial_curve.size() != M || !initial_curve.allFinite())
    throw Error(Errc::invalid_argument, "initial curve needs one finite rate per cell");
  if (drift.rows() != steps || drift.cols() != M || !drift.allFinite())
    throw Error(Errc::invalid_argument, "drift field must be a finite steps x cells grid");
  for (const auto& s : loadings) {
    if (s.rows() != steps || s.cols() != M || !s.allFinite())
      throw Error(Errc::invalid_argument, "loading fields must be finite steps x cells grids");
  }
  for (Index k = 0; k < steps; ++k) {
    for (Index m = 0; m < M; ++m) {
      if (alive(k, m)) continue;
      bool zero = drift(k, m) == 0.0;
      for (const auto& s : loadings) zero = zero && s(k, m) == 0.0;
      if (!zero)
        throw Error(Errc::invalid_argument, "field nonzero on dead cell (t=" + std::to_string(grid[k]) +
                                                ", T=" + std::to_string(maturities[m]) + ")");
    }
  }
}

Labels HjmModel::bond_labels() const {
  Labels out;
  for (Index m = 0; m < cells(); ++m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "P(%.6g)", maturities[m + 1]);
    out.emplace_back(buf);
  }
  return out;
}

HjmModel HjmModel::from_functions(TimeGrid grid, std::vector<double> maturities,
                                  const std::function<double(double)>& initial_curve, const Field& drift,
                                  const std::vector<Field>& loadings) {
  HjmModel model;
  model.grid = std::move(grid);
  model.maturities = std::move(maturities);
  const Index steps = model.grid.steps();
  const Index M = model.cells();
  if (M < 1) throw Error(Errc::invalid_argument, "maturity grid needs at least one cell");
  model.initial_curve.resize(M);
  for (Index m = 0; m < M; ++m) model.initial_curve(m) = initial_curve(model.maturities[m]);
  model.drift = MatrixXd::Zero(steps, M);
  model.loadings.assign(loadings.size(), MatrixXd::Zero(steps, M));
  for (Index k = 0; k < steps; ++k) {
    for (Index m = 0; m < M; ++m) {
      if (!model.alive(k, m)) continue;
      const double t = model.grid[k];
      const double T = model.maturities[m];
      if (drift) model.drift(k, m) = drift(t, T);
      for (std::size_t j = 0; j < loadings.size(); ++j) model.loadings[j](k, m) = loadings[j](t, T);
    }
  }
  model.validate();
  return model;
}

HjmModel HjmModel::ho_lee(TimeGrid grid, std::vector<double> maturities, double flat_rate, double sigma0) {
  HjmModel model = from_functions(
      std::move(grid), std::move(maturities), [flat_rate](double) { return flat_rate; }, nullptr,
      {[sigma0](double, double) { return sigma0; }});
  model.drift = apply_drift_restriction(model);
  return model;
}

MatrixXd IntegratedFields::sigma_star_sq() const {
  MatrixXd out = MatrixXd::Zero(kappa_star.rows(), kappa_star.cols());
  for (const auto& s : sigma_star) out += s.cwiseAbs2();
  return out;
}

IntegratedFields integrated_fields(const HjmModel& model, Quadrature rule) {
  IntegratedFields out;
  out.kappa_star = cumulate(model, model.drift, rule);
  for (const auto& s : model.loadings) out.sigma_star.push_back(cumulate(model, s, rule));
  return out;
}

MatrixXd apply_drift_restriction(const HjmModel& model) {
  const IntegratedFields fields = integrated_fields(model);
  MatrixXd kappa = MatrixXd::Zero(model.grid.steps(), model.cells());
  for (std::size_t j = 0; j < model.loadings.size(); ++j) {
    const MatrixXd& s = model.loadings[j];
    for (Index m = 0; m < model.cells(); ++m) {
      kappa.col(m).array() += s.col(m).array() * (fields.sigma_star[j].col(m).array() - 0.5 * model.width(m) * s.col(m).array());
    }
  }
  return kappa;
}

double drift_restriction_residual(const HjmModel& model) {
  return (model.drift - apply_drift_restriction(model)).cwiseAbs().maxCoeff();
}

MatrixXd drift_from_integrated(const HjmModel& model, const MatrixXd& kappa_star) {
  MatrixXd kappa(kappa_star.rows(), kappa_star.cols());
  for (Index m = 0; m < kappa_star.cols(); ++m) {
    const VectorXd prev = m == 0 ? VectorXd::Zero(kappa_star.rows()) : VectorXd(kappa_star.col(m - 1));
    kappa.col(m) = (kappa_star.col(m) - prev) / model.width(m);
  }
  return kappa;
}

MatrixXd bond_drift(const HjmModel& model) {
  const IntegratedFields fields = integrated_fields(model);
  return -fields.kappa_star + 0.5 * fields.sigma_star_sq();
}

HjmEnsemble simulate_surface(const HjmModel& model, Index paths, std::uint64_t seed, const SimulationOptions& options) {
  if (paths < 1) throw Error(Errc::invalid_argument, "need at least one path");
  model.validate();
  HjmEnsemble out;
  out.grid = model.grid;
  out.maturities = model.maturities;
  out.seed = seed;
  out.path_offset = options.path_offset;
  out.surfaces.resize(paths);
  parallel_for(paths, options.threads, [&](Index p) {
    auto rng = path_stream(seed, static_cast<std::uint64_t>(options.path_offset + p));
    out.surfaces[p] = simulate_one(model, rng);
  });
  return out;
}

PathEnsemble bond_ensemble(const HjmModel& model, const HjmEnsemble& ensemble) {
  const Index steps = model.grid.steps();
  const Index M = model.cells();
  const MatrixXd alpha = bond_drift(model);
  PathEnsemble out;
  out.grid = ensemble.grid;
  out.labels = model.bond_labels();
  out.seed = ensemble.seed;
  out.path_offset = ensemble.path_offset;
  out.drivers = model.drivers();
  for (const auto& s : ensemble.surfaces) {
    MatrixXd a = MatrixXd::Zero(steps + 1, M);
    for (Index k = 0; k < steps; ++k) {
      const double dt = model.grid.dt(k);
      for (Index m = 0; m < M; ++m) a(k + 1, m) = a(k, m) + s.bonds(k, m) * std::expm1(alpha(k, m) * dt);
    }
    MatrixXd mart = s.bonds - a;
    mart.rowwise() -= s.bonds.row(0);
    out.P.push_back(s.bonds);
    out.A.push_back(std::move(a));
    out.M.push_back(std::move(mart));
    out.dW.push_back(s.dW);
  }
  return out;
}

std::vector<MartingaleTest> bond_martingale_tests(const HjmModel& model, const BondTestOptions& options) {
  model.validate();
  if (options.paths < 2 || options.chunk < 1) throw Error(Errc::invalid_argument, "bond test needs paths >= 2");
  const Index M = model.cells();
  const Index T = model.grid.steps();
  std::vector<RunningStats> stats(M);
  MatrixXd terminal;
  for (Index start = 0; start < options.paths; start += options.chunk) {
    const Index n = std::min(options.chunk, options.paths - start);
    terminal.resize(n, M);
    parallel_for(n, options.threads, [&](Index p) {
      auto rng = path_stream(options.seed, static_cast<std::uint64_t>(start + p));
      terminal.row(p) = simulate_one(model, rng).bonds.row(T);
    });
    for (Index p = 0; p < n; ++p) {
      for (Index m = 0; m < M; ++m) stats[m].add(terminal(p, m));
    }
  }
  VectorXd p0(M);
  double acc = 0.0;
  for (Index m = 0; m < M; ++m) {
    acc += model.initial_curve(m) * model.width(m);
    p0(m) = std::exp(-acc);
  }
  const Labels labels = model.bond_labels();
  std::vector<MartingaleTest> out;
  for (Index m = 0; m < M; ++m) out.push_back(martingale_test(labels[m], stats[m], p0(m), options.band));
  return out;
}

VectorXd viability_norm_hjm(const HjmModel& model, double horizon, const MembershipOptions& membership) {
  model.validate();
  const IntegratedFields fields = integrated_fields(model);
  const MatrixXd half_sq = 0.5 * fields.sigma_star_sq();
  const MatrixXd alpha = -fields.kappa_star + half_sq;
  const Index steps = model.grid.steps();
  const Index M = model.cells();
  const Index D = model.drivers();
  VectorXd out = VectorXd::Zero(steps + 1);
  for (Index k = 0; k < steps; ++k) {
    if (std::isinf(out(k)) || model.grid[k] >= horizon) {
      out(k + 1) = out(k);
      continue;
    }
    MatrixXd loads(M, D);
    for (Index j = 0; j < D; ++j) loads.col(j) = fields.sigma_star[j].row(k).transpose();
    const MatrixXd c = loads * loads.transpose();
    MembershipOptions opts = membership;
    opts.reference_scale = std::max({opts.reference_scale, fields.kappa_star.row(k).norm(), half_sq.row(k).norm()});
    const VectorXd a = alpha.row(k).transpose();
    const auto norm = spectral_norm(spectral_decomposition(c), a, opts);
    out(k + 1) = norm.finite() ? out(k) + norm.squared() * model.grid.dt(k) : std::numeric_limits<double>::infinity();
  }
  return out;
}

std::vector<double> sigma_star_refinement_gaps(const std::function<double(double t, double T)>& sigma, double t,
                                               double horizon, Index base_cells, int levels) {
  if (base_cells < 1 || levels < 2 || !(horizon > 0.0))
    throw Error(Errc::invalid_argument, "refinement study needs cells >= 1, levels >= 2, horizon > 0");
  auto sample = [&](Index cells) {
    const double h = horizon / static_cast<double>(cells);
    const Index stride = cells / base_cells;
    VectorXd coarse(base_cells);
    double acc = 0.0;
    for (Index m = 0; m < cells; ++m) {
      const double T = h * static_cast<double>(m);
      if (T >= t * (1.0 - kSlack) - kSlack) acc += sigma(t, T) * h;
      if ((m + 1) % stride == 0) coarse((m + 1) / stride - 1) = acc;
    }
    return coarse;
  };
  std::vector<double> gaps;
  VectorXd prev = sample(base_cells);
  const double coarse_width = horizon / static_cast<double>(base_cells);
  for (int level = 1; level < levels; ++level) {
    const VectorXd next = sample(base_cells << level);
    gaps.push_back(std::sqrt((next - prev).squaredNorm() * coarse_width));
    prev = next;
  }
  return gaps;
}

}  // namespace rkint
