#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "experiments.hpp"
#include "generators.hpp"
#include "helpers.hpp"
#include "rkint/io.hpp"

using namespace rkint;
using help::code_of;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = RKINT_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rkint_io_cli" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rkint-run");
  args.push_back("--quiet");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("number formatting round trips") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = gen::normal_vector(rng, 1)(0) * std::pow(10.0, gen::uniform_index(rng, -30, 30));
    CHECK(io::parse_double(io::format(v)) == v);
  }
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(io::format(inf) == "inf");
  CHECK(io::format(-inf) == "-inf");
  CHECK(io::parse_double("inf") == inf);
  CHECK(io::parse_double(" +2.5 ") == 2.5);
  CHECK(std::isnan(io::parse_double(io::format(std::nan("")))));
  CHECK(code_of([] { io::parse_double("1.5x"); }) == Errc::io_error);
  CHECK(code_of([] { io::parse_double(""); }) == Errc::io_error);
  CHECK(io::split("a, b,", ',') == std::vector<std::string>{"a", "b", ""});
}

TEST_CASE("csv and kernel files") {
  std::mt19937_64 rng(2);
  const Kernel k = gen::psd_kernel(rng, 4, 2);
  std::stringstream ss;
  io::write_kernel(ss, k);
  const Kernel back = io::read_kernel(ss);
  CHECK(back.labels() == k.labels());
  CHECK(back.entries() == k.entries());

  std::stringstream asym("a,b\n1,0.5\n0.4,1\n");
  CHECK(code_of([&] { io::read_kernel(asym); }) == Errc::asymmetric);
  std::stringstream ragged("a,b\n1\n");
  CHECK(code_of([&] { io::read_csv(ragged); }) == Errc::io_error);
  std::stringstream comments("# note\nx,y\n\n1,inf\n");
  const auto t = io::read_csv(comments);
  CHECK(t.values.rows() == 1);
  CHECK(std::isinf(t.values(0, 1)));
}

TEST_CASE("field grids") {
  const TimeGrid g = TimeGrid::uniform(1.0, 3);
  const std::vector<double> mats{0.5, 1.0};
  const MatrixXd f = (MatrixXd(3, 2) << 0.1, 0.2, 0.3, 0.4, 1.0 / 3, 0).finished();
  std::stringstream ss;
  io::write_field(ss, g, mats, f);
  std::vector<double> times, back_mats;
  CHECK(io::read_field(ss, &times, &back_mats) == f);
  CHECK(back_mats == mats);
  CHECK(times == std::vector<double>{0.0, 1.0 / 3, 2.0 / 3});
}

TEST_CASE("ensemble dump") {
  const auto m = ContinuousModel::constant({"a"}, VectorXd::Zero(1), MatrixXd::Ones(1, 1), VectorXd::Ones(1))
                     .discretize(TimeGrid::uniform(1.0, 2));
  const PathEnsemble e = simulate_ensemble(m, 2, 3, {.path_offset = 5});
  std::stringstream ss;
  io::write_ensemble(ss, e);
  const auto t = io::read_csv(ss);
  CHECK(t.header == std::vector<std::string>{"path", "step", "t", "a"});
  CHECK(t.values.rows() == 6);
  CHECK(t.values(3, 0) == 6);
  CHECK(t.values(5, 3) == e.P[1](2, 0));
}

TEST_CASE("experiments on the shipped configs") {
  const fs::path out = scratch("kernel");
  const auto r = cli::run_experiment("kernel", {kConfigs / "kernel_identity.ini", out, {}, {}, true});
  CHECK(r.pass());
  CHECK(r.seed == 1);
  for (const char* f : {"report.txt", "summary.json", "spectrum.csv", "norms.csv"}) CHECK(fs::exists(out / f));
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(summary["pass"] == true);
  CHECK(summary["kind"] == "kernel");

  CHECK(cli::run_experiment("hedge-tree", {kConfigs / "hedge_binomial.ini", scratch("bin"), 4, {}, true}).seed == 4);
  CHECK(code_of([&] { cli::run_experiment("hjm", {kConfigs / "kernel_identity.ini", scratch("x"), {}, {}, true}); }) ==
        Errc::config_invalid);
  CHECK(code_of([&] { cli::run_experiment("nope", {kConfigs / "kernel_identity.ini", scratch("x"), {}, {}, true}); }) ==
        Errc::config_invalid);
}

TEST_CASE("a seed is mandatory") {
  const fs::path dir = scratch("noseed");
  fs::create_directories(dir);
  fs::copy(kConfigs / "data", dir / "data", fs::copy_options::recursive);
  std::ofstream(dir / "k.ini") << "[experiment]\nkind = kernel\n\n[kernel]\nfile = data/identity.csv\ntargets = data/identity_targets.csv\n";
  CHECK(code_of([&] { cli::run_experiment("kernel", {dir / "k.ini", dir / "out", {}, {}, true}); }) ==
        Errc::config_invalid);
  CHECK(cli::run_experiment("kernel", {dir / "k.ini", dir / "out", 9, {}, true}).pass());
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"kernel", "--config", (kConfigs / "kernel_rank1.ini").string(), "--out", scratch("e0").string()}) == 0);
  CHECK(run_cli({"refine-study", "--config", (kConfigs / "refine_power.ini").string(), "--out",
                 scratch("e1").string()}) == 1);
  CHECK(run_cli({"kernel", "--config", "/nonexistent.ini", "--out", scratch("e2").string()}) == 2);
  CHECK(run_cli({"kernel"}) == 2);
}

TEST_CASE("outputs do not depend on the thread count") {
  const fs::path a = scratch("t1"), b = scratch("t5");
  const fs::path cfg = kConfigs / "integrate.ini";
  CHECK(run_cli({"integrate", "--config", cfg.string(), "--out", a.string(), "--threads", "1"}) == 0);
  CHECK(run_cli({"integrate", "--config", cfg.string(), "--out", b.string(), "--threads", "5"}) == 0);
  Index compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    ++compared;
  }
  CHECK(compared > 0);
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
}
