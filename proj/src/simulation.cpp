#include "rkint/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace rkint {

void SemimartingaleModel::validate() const {
  const Index d = assets();
  if (d == 0) throw Error(Errc::invalid_argument, "model has no assets");
  if (drift_rate.rows() != grid.steps() || drift_rate.cols() != d)
    throw Error(Errc::invalid_argument, "drift rate must be steps x assets");
  if (!drift_rate.allFinite()) throw Error(Errc::invalid_argument, "non-finite drift");
  if (loadings.size() != 1 && static_cast<Index>(loadings.size()) != grid.steps())
    throw Error(Errc::invalid_argument, "need one loading matrix or one per step");
  for (const auto& s : loadings) {
    if (s.rows() != d || s.cols() != drivers) throw Error(Errc::invalid_argument, "loading must be assets x drivers");
    if (!s.allFinite()) throw Error(Errc::invalid_argument, "non-finite loading");
  }
  if (initial.size() != d || !initial.allFinite()) throw Error(Errc::invalid_argument, "bad initial values");
}

StochasticAggregateKernel SemimartingaleModel::model_kernel() const {
  return from_model(grid, labels, loadings);
}

IncrementFamily SemimartingaleModel::drift_family() const {
  IncrementFamily out{labels, MatrixXd(grid.steps(), assets())};
  for (Index k = 0; k < grid.steps(); ++k) out.increments.row(k) = drift_increment(k).transpose();
  return out;
}

SemimartingaleModel ContinuousModel::discretize(const TimeGrid& grid) const {
  SemimartingaleModel m;
  m.labels = labels;
  m.drivers = drivers;
  m.grid = grid;
  m.initial = initial;
  const Index d = static_cast<Index>(labels.size());
  m.drift_rate.resize(grid.steps(), d);
  VectorXd prev = cumulative_drift(grid[0]);
  for (Index k = 0; k < grid.steps(); ++k) {
    VectorXd next = cumulative_drift(grid[k + 1]);
    m.drift_rate.row(k) = ((next - prev) / grid.dt(k)).transpose();
    prev = std::move(next);
    m.loadings.push_back(loading(grid[k]));
  }
  m.validate();
  return m;
}

ContinuousModel ContinuousModel::constant(Labels labels, VectorXd drift_rate, MatrixXd loading, VectorXd initial) {
  ContinuousModel m;
  m.labels = std::move(labels);
  m.drivers = loading.cols();
  m.initial = std::move(initial);
  m.cumulative_drift = [a = std::move(drift_rate)](double t) -> VectorXd { return a * t; };
  m.loading = [s = std::move(loading)](double) { return s; };
  return m;
}

ContinuousModel ContinuousModel::power_drift(Labels labels, VectorXd coefficient, double exponent, MatrixXd loading,
                                             VectorXd initial) {
  if (!(exponent > -1.0)) throw Error(Errc::invalid_argument, "power drift exponent must exceed -1");
  ContinuousModel m;
  m.labels = std::move(labels);
  m.drivers = loading.cols();
  m.initial = std::move(initial);
  m.cumulative_drift = [c = std::move(coefficient), exponent](double t) -> VectorXd {
    return c * (std::pow(t, exponent + 1.0) / (exponent + 1.0));
  };
  m.loading = [s = std::move(loading)](double) { return s; };
  return m;
}

std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Index>(threads, std::max<Index>(count, 1)));
  if (threads <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> workers;
  const Index block = (count + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const Index lo = w * block;
    const Index hi = std::min(count, lo + block);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, &body] {
      for (Index i = lo; i < hi; ++i) body(i);
    });
  }
}

PathEnsemble simulate_ensemble(const SemimartingaleModel& model, Index paths, std::uint64_t seed,
                               const SimulationOptions& options) {
  if (paths < 1) throw Error(Errc::invalid_argument, "need at least one path");
  model.validate();
  const Index steps = model.grid.steps();
  const Index d = model.assets();
  const Index D = model.drivers;

  PathEnsemble out;
  out.grid = model.grid;
  out.labels = model.labels;
  out.seed = seed;
  out.path_offset = options.path_offset;
  out.drivers = D;
  out.P.resize(paths);
  out.A.resize(paths);
  out.M.resize(paths);
  out.dW.resize(paths);

  // A is deterministic; build it once and copy.
  MatrixXd drift = MatrixXd::Zero(steps + 1, d);
  for (Index k = 0; k < steps; ++k) drift.row(k + 1) = drift.row(k) + model.drift_increment(k).transpose();

  parallel_for(paths, options.threads, [&](Index p) {
    auto rng = path_stream(seed, static_cast<std::uint64_t>(options.path_offset + p));
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd dw(steps, D);
    MatrixXd m = MatrixXd::Zero(steps + 1, d);
    for (Index k = 0; k < steps; ++k) {
      const double sd = std::sqrt(model.grid.dt(k));
      for (Index j = 0; j < D; ++j) dw(k, j) = sd * normal(rng);
      m.row(k + 1) = m.row(k) + (model.loading(k) * dw.row(k).transpose()).transpose();
    }
    MatrixXd price = drift + m;
    price.rowwise() += model.initial.transpose();
    out.P[p] = std::move(price);
    out.A[p] = drift;
    out.M[p] = std::move(m);
    out.dW[p] = std::move(dw);
  });
  return out;
}

std::vector<StochasticAggregateKernel> realized_covariation(const PathEnsemble& ensemble) {
  std::vector<StochasticAggregateKernel> out;
  out.reserve(ensemble.paths());
  for (const auto& p : ensemble.P) out.push_back(from_realized(ensemble.grid, ensemble.labels, p));
  return out;
}

TimeGrid refine_grid(const TimeGrid& grid, Index factor) {
  if (factor < 1) throw Error(Errc::invalid_argument, "refinement factor must be >= 1");
  if (factor == 1) return grid;
  std::vector<double> t;
  t.reserve(grid.steps() * factor + 1);
  for (Index k = 0; k < grid.steps(); ++k) {
    const double lo = grid[k];
    const double width = grid.dt(k);
    for (Index s = 0; s < factor; ++s) t.push_back(lo + width * static_cast<double>(s) / static_cast<double>(factor));
  }
  t.push_back(grid.horizon());
  return TimeGrid(std::move(t));
}

}  // namespace rkint
