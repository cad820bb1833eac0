#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "kzsparse/harness.hpp"
#include "kzsparse/output.hpp"

using namespace kzsparse;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("kzsparse_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("version and usage") {
  const auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(library_version()) != std::string::npos);
  CHECK(v.out.find("schema 1") != std::string::npos);

  CHECK(run({}).code == 1);
  const auto bad = run({"solve", "--no-such-flag"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("Usage") != std::string::npos);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"solve", "--help"}).code == 0);
}

TEST_CASE("solve resolves gamma auto and prints the seed") {
  const auto dir = scratch("solve");
  const auto r = run({"solve", "--matrix", "hadamard", "--m", "256", "--N", "1024", "--s", "5", "--solver",
                      "kziht", "--gamma", "auto", "--seed", "7", "--epochs", "60", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("seed: 7\n") != std::string::npos);
  CHECK(r.out.find("gamma: 4\n") != std::string::npos);
  CHECK(r.out.find("final_relative_error: ") != std::string::npos);
  CHECK(fs::exists(dir / "trials_s5.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config"]["base_seed"] == 7);
  CHECK(manifest["resolved_params"][0]["gamma"] == 4.0);
  fs::remove_all(dir);
}

TEST_CASE("configuration problems exit with 1 and name the field") {
  const auto r = run({"curve", "--matrix", "hadamard", "--N", "1000", "--out", scratch("bad").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("matrix.N") != std::string::npos);
  const auto unknown = run({"curve", "--set", "solver.stepsize=3"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("solver.stepsize") != std::string::npos);
  CHECK(run({"curve", "--gamma", "fast"}).code == 1);
  CHECK(run({"curve", "--config", "/nonexistent/grid.toml"}).code == 1);
  const auto infeasible =
      run({"solve", "--matrix", "bernoulli", "--m", "100", "--N", "1024", "--s", "50", "--preset", "subgaussian"});
  CHECK(infeasible.code == 1);
  CHECK(infeasible.err.find("smallest admissible m") != std::string::npos);
}

TEST_CASE("a diverging solve exits with 2") {
  const auto dir = scratch("diverge");
  const auto r = run({"solve", "--matrix", "hadamard", "--m", "256", "--N", "1024", "--s", "5", "--gamma", "4",
                      "--rule", "replacement", "--seed", "0", "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.out.find("status: diverged") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("phase from a TOML config is byte-identical across runs") {
  const auto dir = scratch("phase");
  {
    std::ofstream toml(dir / "grid.toml");
    toml << "trials = 3\nbase_seed = 5\nthreads = 1\n[matrix]\nkind = \"bernoulli\"\nm = 32\nN = 64\n"
            "[signal]\ns = [2, 6]\n[solver]\nname = \"kziht\"\nepochs = 30\n[phase]\nm_values = [16, 32]\n";
  }
  const auto a = run({"phase", "--config", (dir / "grid.toml").string(), "--out", (dir / "a").string()});
  const auto b = run({"phase", "--config", (dir / "grid.toml").string(), "--out", (dir / "b").string()});
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(a.out.find("seed: 5") != std::string::npos);
  CHECK(slurp(dir / "a" / "phase.csv") == slurp(dir / "b" / "phase.csv"));
  CHECK(!slurp(dir / "a" / "phase.csv").empty());
  fs::remove_all(dir);
}

TEST_CASE("flags win over file values") {
  const auto dir = scratch("flags");
  {
    std::ofstream js(dir / "c.json");
    js << R"({"trials": 2, "base_seed": 1, "threads": 1, "matrix": {"kind": "hadamard", "m": 16, "N": 64},
             "signal": {"s": 2}, "solver": {"epochs": 5}})";
  }
  const auto r = run({"curve", "--config", (dir / "c.json").string(), "--set", "trials=3", "--seed", "9", "--out",
                      dir.string()});
  CHECK(r.code == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config"]["base_seed"] == 9);
  CHECK(manifest["config"]["trials"] == 3);
  fs::remove_all(dir);
}

TEST_CASE("curve is a thin adapter over the harness") {
  const auto dir = scratch("thin");
  const auto r = run({"curve", "--matrix", "bernoulli", "--m", "24", "--N", "64", "--s", "2,4", "--trials", "3",
                      "--epochs", "12", "--seed", "4", "--threads", "1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  ExperimentConfig c;
  c.matrix = {OperatorKind::Bernoulli, 24, 64};
  c.s_values = {2, 4};
  c.trials = 3;
  c.solver.epochs = 12;
  c.base_seed = 4;
  c.threads = 1;
  const auto curves = run_error_curve(c);
  CHECK(slurp(dir / "curve_s2.csv") == curve_csv(curves[0].aggregate));
  CHECK(slurp(dir / "curve_s4.csv") == curve_csv(curves[1].aggregate));
  fs::remove_all(dir);
}

TEST_CASE("ablate and sweep-period write their tables") {
  const auto dir = scratch("ablate");
  CHECK(run({"ablate", "--m", "16", "--N", "64", "--s", "2", "--trials", "2", "--epochs", "5", "--out",
             (dir / "a").string()})
            .code == 0);
  CHECK(fs::exists(dir / "a" / "curve_reshuffle_s2.csv"));
  CHECK(fs::exists(dir / "a" / "curve_replacement_s2.csv"));
  const auto sweep = run({"sweep-period", "--m", "16", "--N", "64", "--s", "2", "--trials", "2", "--epochs", "30",
                          "--p-list", "8,16", "--out", (dir / "p").string()});
  CHECK(sweep.code == 0);
  CHECK(fs::exists(dir / "p" / "sweep.csv"));
  CHECK(fs::exists(dir / "p" / "curve_p8.csv"));
  CHECK(run({"sweep-period", "--m", "16", "--N", "64", "--p-list", "17"}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("analysis oracles print JSON") {
  const auto id = run({"verify-identity", "--m", "16", "--N", "32", "--trials", "100"});
  CHECK(id.code == 0);
  const auto j = nlohmann::json::parse(id.out.substr(id.out.find('{')));
  CHECK(j["max_relative_deviation"].get<double>() <= 1e-9);
  CHECK(j["trials"] == 100);

  const auto rip = run({"rip", "--matrix", "bernoulli", "--m", "8", "--N", "12", "--s", "2", "--seed", "3"});
  CHECK(rip.code == 0);
  CHECK(nlohmann::json::parse(rip.out.substr(rip.out.find('{')))["s"] == 2);
  CHECK(run({"rip", "--matrix", "bernoulli", "--m", "8", "--N", "200", "--s", "5"}).code == 1);

  const auto ct = run({"cross-term", "--matrix", "hadamard", "--m", "16", "--N", "64", "--gamma", "2",
                       "--schedules", "5"});
  CHECK(ct.code == 0);
  const auto report = nlohmann::json::parse(ct.out.substr(ct.out.find('{')));
  CHECK(report["max_operator_norm"].get<double>() <= 1e-10);
  CHECK(report["reports"].size() == 5);
}
