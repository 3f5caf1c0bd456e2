#include "experiments.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "rkint/discrete_oracle.hpp"
#include "rkint/error.hpp"
#include "rkint/finance.hpp"
#include "rkint/hjm.hpp"
#include "rkint/integration.hpp"
#include "rkint/io.hpp"
#include "rkint/rkhs.hpp"
#include "rkint/simulation.hpp"

namespace rkint::cli {

namespace fs = std::filesystem;
using io::format;

bool RunResult::pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"kernel", "integrate", "viability", "hedge-tree", "hjm", "refine-study"};
  return kinds;
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::config_invalid, what); }

class Config {
 public:
  explicit Config(const fs::path& file) : dir_(file.parent_path()) {
    if (!fs::exists(file)) invalid("config file not found: " + file.string());
    try {
      boost::property_tree::ini_parser::read_ini(file.string(), tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      invalid(e.what());
    }
  }

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string text(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) invalid("missing key " + key);
    return io::trim(*v);
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  double number(const std::string& key) const {
    try {
      return io::parse_double(text(key));
    } catch (const Error&) {
      invalid("key " + key + " is not a number");
    }
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  Index count(const std::string& key) const {
    const double v = number(key);
    if (!(v >= 0) || v != std::floor(v) || v > 1e15) invalid("key " + key + " must be a nonnegative integer");
    return static_cast<Index>(v);
  }
  Index count(const std::string& key, Index fallback) const { return has(key) ? count(key) : fallback; }

  std::uint64_t seed(const std::string& key) const {
    const std::string t = text(key);
    try {
      std::size_t used = 0;
      const auto v = std::stoull(t, &used);
      if (used != t.size()) invalid("seed must be an unsigned integer");
      return v;
    } catch (const std::logic_error&) {
      invalid("seed must be an unsigned integer");
    }
  }

  VectorXd vector(const std::string& key) const {
    std::vector<double> values;
    for (const auto& cell : io::split(text(key), ',')) {
      try {
        values.push_back(io::parse_double(cell));
      } catch (const Error&) {
        invalid("key " + key + " has a non-numeric entry '" + cell + "'");
      }
    }
    return Eigen::Map<VectorXd>(values.data(), static_cast<Index>(values.size()));
  }

  /// Rows separated by ';', entries by ','.
  MatrixXd matrix(const std::string& key) const {
    std::vector<VectorXd> rows;
    for (const auto& row : io::split(text(key), ';')) {
      std::vector<double> values;
      for (const auto& cell : io::split(row, ',')) {
        try {
          values.push_back(io::parse_double(cell));
        } catch (const Error&) {
          invalid("key " + key + " has a non-numeric entry '" + cell + "'");
        }
      }
      rows.push_back(Eigen::Map<VectorXd>(values.data(), static_cast<Index>(values.size())));
    }
    if (rows.empty() || rows.front().size() == 0) invalid("key " + key + " is an empty matrix");
    MatrixXd m(static_cast<Index>(rows.size()), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols()) invalid("key " + key + " has ragged rows");
      m.row(r) = rows[r].transpose();
    }
    return m;
  }

  Labels labels(const std::string& key) const { return io::split(text(key), ','); }

  fs::path file(const std::string& key) const { return resolve(text(key), key); }

  /// Paths are relative to the config file.
  fs::path resolve(const fs::path& name, const std::string& key) const {
    fs::path p = name;
    if (p.is_relative()) p = dir_ / p;
    if (!fs::exists(p)) invalid("file for " + key + " not found: " + p.string());
    return p;
  }

 private:
  fs::path dir_;
  boost::property_tree::ptree tree_;
};

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::io_error, "cannot read " + p.string());
  return in;
}

/// Output directory, report and verdict bookkeeping for one run.
class Bundle {
 public:
  Bundle(std::string kind, const RunOptions& options) : dir_(options.out), quiet_(options.quiet) {
    result_.kind = std::move(kind);
    fs::create_directories(dir_);
  }

  RunResult& result() { return result_; }
  const fs::path& dir() const { return dir_; }

  void progress(const std::string& msg) const {
    if (!quiet_) std::cerr << "[" << result_.kind << "] " << msg << '\n';
  }

  void line(const std::string& text) { body_ << text << '\n'; }

  void check(std::string name, bool pass, std::string detail = {}) {
    body_ << (pass ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) body_ << "  (" << detail << ")";
    body_ << '\n';
    result_.checks.push_back({std::move(name), pass, std::move(detail)});
  }

  void stat(const MartingaleTest& t) {
    std::ostringstream s;
    s << t.name << ": mean=" << format(t.mean) << " se=" << format(t.standard_error) << " target=" << format(t.target)
      << " z=" << format(t.z) << " n=" << t.samples;
    line(s.str());
  }

  void table(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(dir_ / name);
    if (!out) throw Error(Errc::io_error, "cannot write " + (dir_ / name).string());
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << '\n';
    }
  }

  void numeric(const std::string& name, const std::vector<std::string>& header, const MatrixXd& values) {
    std::ofstream out(dir_ / name);
    if (!out) throw Error(Errc::io_error, "cannot write " + (dir_ / name).string());
    io::write_csv(out, header, values);
  }

  void finish() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ofstream report(dir_ / "report.txt");
    report << "# rkint " << result_.kind << " report\n";
    report << "# generated " << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << "\n";
    report << "# seed " << result_.seed << "\n\n";
    report << body_.str();
    report << "\nverdict: " << (result_.pass() ? "PASS" : "FAIL") << '\n';

    nlohmann::json summary;
    summary["kind"] = result_.kind;
    summary["seed"] = result_.seed;
    summary["pass"] = result_.pass();
    summary["checks"] = nlohmann::json::array();
    for (const auto& c : result_.checks)
      summary["checks"].push_back({{"name", c.name}, {"verdict", c.pass ? "PASS" : "FAIL"}, {"detail", c.detail}});
    std::ofstream(dir_ / "summary.json") << summary.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  bool quiet_;
  RunResult result_;
  std::ostringstream body_;
};

std::string mark(bool pass) { return pass ? "PASS" : "FAIL"; }

SemimartingaleModel read_model(const Config& cfg) {
  const Labels labels = cfg.labels("model.labels");
  const Index steps = cfg.count("model.steps");
  const double horizon = cfg.number("model.horizon", 1.0);
  const VectorXd initial = cfg.vector("model.initial");
  const VectorXd drift = cfg.vector("model.drift");
  const MatrixXd loading = cfg.matrix("model.loading");
  const auto d = static_cast<Index>(labels.size());
  if (initial.size() != d || drift.size() != d || loading.rows() != d)
    invalid("[model] initial, drift and loading rows must match the label count");
  if (steps < 1 || !(horizon > 0)) invalid("[model] needs steps >= 1 and horizon > 0");
  return ContinuousModel::constant(labels, drift, loading, initial).discretize(TimeGrid::uniform(horizon, steps));
}

// kernel -------------------------------------------------------------------

void run_kernel(const Config& cfg, Bundle& b) {
  auto kin = open_in(cfg.file("kernel.file"));
  const Kernel kernel = io::read_kernel(kin);
  auto tin = open_in(cfg.file("kernel.targets"));
  const io::Table targets = io::read_csv(tin);
  if (targets.header != kernel.labels()) invalid("target columns must match the kernel labels");
  const double tol = cfg.number("kernel.tolerance", 1e-8);
  VectorXd expected;
  if (cfg.has("kernel.expected")) {
    expected = cfg.vector("kernel.expected");
    if (expected.size() != targets.values.rows()) invalid("kernel.expected needs one value per target");
  }
  std::vector<Subset> chain;
  if (cfg.has("kernel.chain")) {
    for (const auto& level : io::split(cfg.text("kernel.chain"), ';')) {
      Subset subset;
      for (const auto& label : io::split(level, ',')) {
        const auto idx = kernel.find(label);
        if (!idx) invalid("chain label " + label + " is not a kernel label");
        subset.push_back(*idx);
      }
      chain.push_back(std::move(subset));
    }
    if (!is_nested_chain(chain)) invalid("kernel.chain is not nested");
  }

  const auto spectrum = spectral_decomposition(kernel);
  MatrixXd modes(spectrum.eigenvalues.size(), 2);
  for (Index j = 0; j < modes.rows(); ++j) modes.row(j) << static_cast<double>(j), spectrum.eigenvalues(j);
  b.numeric("spectrum.csv", {"mode", "eigenvalue"}, modes);
  b.line("kernel size " + std::to_string(kernel.size()) + ", rank " + std::to_string(spectrum.rank));

  std::vector<std::vector<std::string>> rows, profile_rows;
  for (Index t = 0; t < targets.values.rows(); ++t) {
    const VectorXd f = targets.values.row(t).transpose();
    const auto spectral = spectral_norm(spectrum, f);
    std::string limit_text;
    bool agree = false;
    try {
      const auto limit = norm_via_limit(kernel, f);
      limit_text = format(limit.value);
      if (spectral.finite() && limit.finite()) {
        agree = std::abs(limit.value - spectral.value) <= tol * std::max(1.0, spectral.value);
      } else {
        agree = spectral.finite() == limit.finite();
      }
    } catch (const Error& e) {
      limit_text = to_string(e.code());
    }
    rows.push_back({std::to_string(t), format(spectral.value), limit_text, spectral.finite() ? "1" : "0"});
    b.check("target " + std::to_string(t) + " spectral/limit routes agree", agree,
            "spectral " + format(spectral.value) + ", limit " + limit_text);
    if (expected.size()) {
      const double want = expected(t);
      const bool ok = std::isinf(want) ? !spectral.finite()
                                       : spectral.finite() && std::abs(spectral.value - want) <= tol * std::max(1.0, want);
      b.check("target " + std::to_string(t) + " expected norm", ok, "expected " + format(want));
    }
    if (!chain.empty()) {
      const auto profile = subset_norm_profile(kernel, f, chain);
      bool monotone = true;
      for (std::size_t l = 0; l < profile.size(); ++l) {
        profile_rows.push_back({std::to_string(t), std::to_string(l), format(profile[l])});
        if (l > 0 && profile[l] < profile[l - 1] - 1e-10 * std::max(1.0, profile[l - 1])) monotone = false;
      }
      b.check("target " + std::to_string(t) + " subset profile nondecreasing", monotone);
    }
  }
  b.table("norms.csv", {"target", "spectral_norm", "limit_norm", "member"}, rows);
  if (!chain.empty()) b.table("profile.csv", {"target", "level", "norm"}, profile_rows);
}

// integrate ----------------------------------------------------------------

void run_integrate(const Config& cfg, Bundle& b, unsigned threads) {
  const SemimartingaleModel model = read_model(cfg);
  const Index paths = cfg.count("integrate.paths", 100);
  const VectorXd w = cfg.vector("integrate.weights");
  if (w.size() != model.assets()) invalid("integrate.weights needs one entry per asset");
  const double tol = cfg.number("integrate.tolerance", 1e-10);

  const PathEnsemble ens = simulate_ensemble(model, paths, b.result().seed, {threads, 0});
  const auto kernels = realized_covariation(ens);
  std::vector<IncrementFamily> families;
  families.reserve(kernels.size());
  for (const auto& k : kernels) families.push_back(k.apply(w.transpose().replicate(k.steps(), 1)));
  const IntegralResult integral = integrate(kernels, families, ens);

  MatrixXd table(paths, 5);
  double worst = 0.0;
  for (Index p = 0; p < paths; ++p) {
    const VectorXd& x = integral.X[p];
    double qv = 0.0;
    for (Index k = 0; k < ens.steps(); ++k) qv += std::pow(x(k + 1) - x(k), 2);
    const double norm = stoch_norm_sq(kernels[p], families[p])(ens.steps());
    const double res = isometry_residual(x, kernels[p], families[p]);
    worst = std::max(worst, res / (1.0 + qv));
    table.row(p) << static_cast<double>(p), x(ens.steps()), qv, norm, res;
  }
  b.numeric("integral.csv", {"path", "X_T", "quadratic_variation", "kernel_norm_sq", "isometry_residual"}, table);
  b.check("isometry residual", worst <= tol, "max relative " + format(worst));
  const MetricEstimate rt = roundtrip_residual(kernels, families, ens);
  b.line("roundtrip residual " + format(rt.value) + " se " + format(rt.standard_error));
  b.check("roundtrip residual", rt.value <= tol, format(rt.value));
}

// viability ----------------------------------------------------------------

void run_viability(const Config& cfg, Bundle& b, unsigned threads) {
  const SemimartingaleModel model = read_model(cfg);
  const Index paths = cfg.count("viability.paths", 100000);
  const Index chunk = std::max<Index>(1, cfg.count("viability.chunk", 20000));
  const double band = cfg.number("viability.band", 3.0);
  DeflatorOptions opts;
  const std::string form = cfg.text("viability.form", "product");
  if (form == "exponential") {
    opts.form = ExponentialForm::exponential;
  } else if (form != "product") {
    invalid("viability.form must be product or exponential");
  }
  opts.positivity_guard = cfg.number("viability.positivity_guard", opts.positivity_guard);
  MatrixXd control;
  if (cfg.has("viability.control_loading")) {
    control = cfg.matrix("viability.control_loading");
    if (control.cols() != model.drivers) invalid("control_loading needs one column per driver");
  }

  const StochasticAggregateKernel kernel = model.model_kernel();
  const IncrementFamily drift = model.drift_family();
  std::vector<RunningStats> stats, control_stats;
  Index guarded = 0;
  double defect = 0.0;
  PathEnsemble last;
  for (Index start = 0; start < paths; start += chunk) {
    const Index n = std::min(chunk, paths - start);
    b.progress("paths " + std::to_string(start) + ".." + std::to_string(start + n));
    PathEnsemble ens = simulate_ensemble(model, n, b.result().seed, {threads, start});
    const DeflatorPath y = compute_MA_and_deflator({&kernel, 1}, {&drift, 1}, ens, opts);
    guarded += y.positivity_violations;
    accumulate_deflated_prices(y, ens, stats);
    if (control.size()) {
      const FamilyResult fam = deflator_family(y, ens, model, control, opts.positivity_guard);
      defect = fam.orthogonality_defect;
      accumulate_deflated_prices(fam.deflator, ens, control_stats);
    }
    last = std::move(ens);
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& t : deflated_price_tests(stats, last, band)) {
    b.stat(t);
    b.check("martingale " + t.name, t.pass, "z=" + format(t.z));
    rows.push_back({"deflator", t.name, format(t.mean), format(t.standard_error), format(t.target), format(t.z),
                    std::to_string(t.samples), mark(t.pass)});
  }
  b.line("guarded paths " + std::to_string(guarded));
  if (control.size()) {
    bool rejected = false;
    for (const auto& t : deflated_price_tests(control_stats, last, band)) {
      b.stat(t);
      rejected = rejected || !t.pass;
      rows.push_back({"control", t.name, format(t.mean), format(t.standard_error), format(t.target), format(t.z),
                      std::to_string(t.samples), mark(t.pass)});
    }
    b.check("negative control rejected", rejected, "orthogonality defect " + format(defect));
  }
  b.table("martingale_tests.csv", {"deflator", "test", "mean", "se", "target", "z", "samples", "verdict"}, rows);
}

// hedge-tree ---------------------------------------------------------------

void run_hedge_tree(const Config& cfg, Bundle& b) {
  auto tin = open_in(cfg.file("tree.file"));
  const TreeMarket tree = TreeMarket::parse(tin);
  NodeValues stream;
  if (cfg.has("tree.stream")) {
    auto sin = open_in(cfg.file("tree.stream"));
    stream = parse_node_values(tree, sin);
  } else {
    const Index asset = cfg.count("tree.asset", 0);
    if (asset >= tree.assets()) invalid("tree.asset out of range");
    stream = terminal_call_stream(tree, cfg.number("tree.strike"), asset);
  }
  const double tol = cfg.number("tree.tolerance", 1e-9);

  const DeflatorPolytope poly = deflator_polytope(tree);
  b.line("deflator polytope dimension " + std::to_string(poly.dimension) + ", vertices " +
         std::to_string(poly.vertices.size()) + (poly.complete() ? ", complete" : ", incomplete"));
  {
    std::vector<std::string> header;
    for (Index n = 0; n < tree.size(); ++n) header.push_back(tree.node(n).id);
    MatrixXd v(static_cast<Index>(poly.vertices.size()), tree.size());
    for (std::size_t r = 0; r < poly.vertices.size(); ++r) v.row(r) = poly.vertices[r].transpose();
    b.numeric("deflator_vertices.csv", header, v);
  }

  const DualityResult dual = superhedge_duality(tree, stream);
  b.table("duality.csv", {"primal", "dual", "gap"}, {{format(dual.primal), format(dual.dual), format(dual.gap)}});
  b.line("hedging value primal " + format(dual.primal) + " dual " + format(dual.dual));
  b.check("duality gap", std::abs(dual.gap) <= tol, format(dual.gap));

  const DynamicHedgeCheck dyn = dynamic_hedge_check(tree, stream);
  std::vector<std::vector<std::string>> rows;
  for (Index n = 0; n < tree.size(); ++n)
    rows.push_back({tree.node(n).id, format(stream(n)), format(dyn.backward(n)), format(dyn.dual(n))});
  b.table("dynamic.csv", {"node", "K", "backward", "dual"}, rows);
  b.check("dynamic hedge values", dyn.max_gap <= tol, format(dyn.max_gap));
}

// hjm ----------------------------------------------------------------------

HjmModel read_hjm(const Config& cfg) {
  const double horizon = cfg.number("hjm.horizon", 1.0);
  const Index steps = cfg.count("hjm.steps", 20);
  const double maturity_end = cfg.number("hjm.maturity_end", horizon);
  const Index cells = cfg.count("hjm.cells", steps);
  if (steps < 1 || cells < 1 || !(horizon > 0) || !(maturity_end > 0)) invalid("[hjm] grid parameters invalid");
  const TimeGrid grid = TimeGrid::uniform(horizon, steps);
  const TimeGrid mat_grid = TimeGrid::uniform(maturity_end, cells);
  const std::vector<double> maturities = mat_grid.times();
  const double flat = cfg.number("hjm.flat_rate", 0.0);

  HjmModel model;
  if (cfg.has("hjm.loading_files")) {
    model.grid = grid;
    model.maturities = maturities;
    model.initial_curve = VectorXd::Constant(cells, flat);
    model.drift = MatrixXd::Zero(steps, cells);
    for (const auto& name : io::split(cfg.text("hjm.loading_files"), ',')) {
      auto in = open_in(cfg.resolve(name, "hjm.loading_files"));
      MatrixXd field = io::read_field(in);
      if (field.rows() != steps || field.cols() != cells) invalid("loading file " + name + " has the wrong shape");
      model.loadings.push_back(std::move(field));
    }
    model.validate();
  } else {
    const double sigma0 = cfg.number("hjm.sigma0");
    model = HjmModel::from_functions(grid, maturities, [flat](double) { return flat; }, nullptr,
                                     {[sigma0](double, double) { return sigma0; }});
  }
  model.drift = apply_drift_restriction(model);
  const double bias = cfg.number("hjm.drift_bias", 0.0);
  for (Index k = 0; k < steps; ++k) {
    for (Index m = 0; m < cells; ++m) {
      if (model.alive(k, m)) model.drift(k, m) += bias;
    }
  }
  return model;
}

void run_hjm(const Config& cfg, Bundle& b, unsigned threads) {
  const HjmModel model = read_hjm(cfg);
  BondTestOptions opts;
  opts.paths = cfg.count("hjm.paths", 100000);
  opts.chunk = std::max<Index>(1, cfg.count("hjm.chunk", 20000));
  opts.band = cfg.number("hjm.band", 3.0);
  opts.seed = b.result().seed;
  opts.threads = threads;

  const double residual = drift_restriction_residual(model);
  b.check("drift restriction residual", residual <= 1e-12, format(residual));

  const IntegratedFields fields = integrated_fields(model);
  {
    std::ofstream out(b.dir() / "kappa.csv");
    io::write_field(out, model.grid, model.maturities, model.drift);
  }
  {
    std::ofstream out(b.dir() / "sigma_star.csv");
    io::write_field(out, model.grid, model.maturities, fields.sigma_star.front());
  }

  const VectorXd norm = viability_norm_hjm(model);
  MatrixXd path(norm.size(), 2);
  for (Index k = 0; k < norm.size(); ++k) path.row(k) << model.grid[k], norm(k);
  b.numeric("viability_norm.csv", {"t", "cumulative_norm_sq"}, path);
  b.check("viability norm", norm(norm.size() - 1) <= 1e-12, format(norm(norm.size() - 1)));

  b.progress("bond martingale tests over " + std::to_string(opts.paths) + " paths");
  std::vector<std::vector<std::string>> rows;
  for (const auto& t : bond_martingale_tests(model, opts)) {
    b.stat(t);
    b.check("martingale " + t.name, t.pass, "z=" + format(t.z));
    rows.push_back({t.name, format(t.mean), format(t.standard_error), format(t.target), format(t.z),
                    std::to_string(t.samples), mark(t.pass)});
  }
  b.table("bond_tests.csv", {"bond", "mean", "se", "target", "z", "samples", "verdict"}, rows);
}

// refine-study -------------------------------------------------------------

void run_refine(const Config& cfg, Bundle& b, unsigned threads) {
  const Labels labels = cfg.labels("refine.labels");
  const auto d = static_cast<Index>(labels.size());
  const MatrixXd loading = cfg.matrix("refine.loading");
  const VectorXd initial = cfg.has("refine.initial") ? cfg.vector("refine.initial") : VectorXd::Ones(d);
  const VectorXd coef = cfg.vector("refine.coefficient");
  if (loading.rows() != d || coef.size() != d || initial.size() != d) invalid("[refine] shapes must match labels");
  const std::string drift = cfg.text("refine.drift", "constant");
  ContinuousModel model;
  if (drift == "constant") {
    model = ContinuousModel::constant(labels, coef, loading, initial);
  } else if (drift == "power") {
    model = ContinuousModel::power_drift(labels, coef, cfg.number("refine.exponent"), loading, initial);
  } else {
    invalid("refine.drift must be constant or power");
  }
  const TimeGrid base = TimeGrid::uniform(cfg.number("refine.horizon", 1.0), cfg.count("refine.base_steps", 16));
  const int levels = static_cast<int>(cfg.count("refine.levels", 4));
  const double tol = cfg.number("refine.tolerance", 0.05);

  const StructuralReport report = structural_condition_report(model, base, levels, tol);
  MatrixXd table(static_cast<Index>(report.levels.size()), 3);
  for (std::size_t l = 0; l < report.levels.size(); ++l)
    table.row(l) << static_cast<double>(report.levels[l].steps), report.levels[l].dt, report.levels[l].value;
  b.numeric("levels.csv", {"steps", "dt", "drift_norm_sq"}, table);
  b.line("fitted exponent " + format(report.exponent));
  b.check("structural condition", report.verdict == Verdict::pass, "exponent " + format(report.exponent));

  const Index rt_paths = cfg.count("refine.roundtrip_paths", 0);
  if (rt_paths > 0) {
    MatrixXd rt(levels, 4);
    TimeGrid grid = base;
    for (int l = 0; l < levels; ++l) {
      const SemimartingaleModel discrete = model.discretize(grid);
      const PathEnsemble ens = simulate_ensemble(discrete, rt_paths, b.result().seed, {threads, 0});
      const StochasticAggregateKernel kernel = discrete.model_kernel();
      const IncrementFamily family = discrete.drift_family();
      const MetricEstimate est = roundtrip_discrepancy({&kernel, 1}, {&family, 1}, ens);
      rt.row(l) << static_cast<double>(grid.steps()), grid.dt(0), est.value, est.standard_error;
      grid = refine_grid(grid, 2);
    }
    b.numeric("roundtrip.csv", {"steps", "dt", "discrepancy", "se"}, rt);
    for (int l = 1; l < levels; ++l) {
      const double ratio = rt(l, 2) / rt(l - 1, 2);
      b.check("roundtrip discrepancy halves at level " + std::to_string(l), ratio >= 0.4 && ratio <= 0.6,
              "ratio " + format(ratio));
    }
  }
}

}  // namespace

RunResult run_experiment(const std::string& kind, const RunOptions& options) {
  if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end())
    invalid("unknown experiment kind " + kind);
  Config cfg(options.config);
  if (cfg.has("experiment.kind") && cfg.text("experiment.kind") != kind)
    invalid("config is for experiment " + cfg.text("experiment.kind") + ", not " + kind);

  Bundle b(kind, options);
  if (options.seed) {
    b.result().seed = *options.seed;
  } else if (cfg.has("experiment.seed")) {
    b.result().seed = cfg.seed("experiment.seed");
  } else {
    invalid("a seed is required ([experiment] seed or --seed)");
  }
  const unsigned threads =
      options.threads ? *options.threads : static_cast<unsigned>(cfg.count("experiment.threads", 1));

  try {
    if (kind == "kernel") {
      run_kernel(cfg, b);
    } else if (kind == "integrate") {
      run_integrate(cfg, b, threads);
    } else if (kind == "viability") {
      run_viability(cfg, b, threads);
    } else if (kind == "hedge-tree") {
      run_hedge_tree(cfg, b);
    } else if (kind == "hjm") {
      run_hjm(cfg, b, threads);
    } else {
      run_refine(cfg, b, threads);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::config_invalid) throw;
    throw Error(e.code(), kind + ": " + e.what());
  }
  b.finish();
  return b.result();
}

int main(int argc, char** argv) {
  CLI::App app{"rkint experiment runner"};
  app.require_subcommand(1);
  RunOptions options;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  for (const auto& kind : experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run a " + kind + " experiment");
    sub->add_option("--config", options.config, "experiment config (INI)")->required();
    sub->add_option("--out", options.out, "output directory")->required();
    sub->add_option("--seed", seed, "seed, overrides the config");
    sub->add_option("--threads", threads, "worker threads, overrides the config");
    sub->add_flag("--quiet", options.quiet, "suppress progress output");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--threads")) options.threads = threads;
  try {
    const RunResult result = run_experiment(sub->get_name(), options);
    if (!options.quiet) {
      for (const auto& c : result.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << '\n';
    }
    return result.pass() ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace rkint::cli
