#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sindykit/cli.hpp"
#include "sindykit/config.hpp"
#include "sindykit/model_io.hpp"
#include "sindykit/reference.hpp"

using namespace sindykit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("SINDYKIT_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "sindykit_cli_test";
  const fs::path p = root / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

const char* kPlantSchema =
    R"({"t": "time", "x1": "state", "x2": "state", "x3": "state", "x4": "state", "x5": "state", "x6": "state",
        "u1": "input", "u2": "input"})";

}  // namespace

TEST_CASE("reference eq15 renders the input term") {
  const auto dir = scratch("reference");
  const auto r = run({"reference", "eq15", "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("0.0317 u2") != std::string::npos);
  CHECK(slurp(dir / "equations.txt").find("0.0317 u2") != std::string::npos);
  const auto file = load_model(dir / "model.json");
  CHECK(file.model.Xi == plant_model_lambda_0025().model.Xi);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("command") == "reference");
  CHECK(manifest.at("tool_version") == kToolVersion);
  CHECK(manifest.contains("config_hash"));
}

TEST_CASE("excite is deterministic") {
  const auto a = scratch("excite_a");
  const auto b = scratch("excite_b");
  REQUIRE(run({"excite", "--seed", "1", "--out", a.string()}).code == kExitOk);
  REQUIRE(run({"excite", "--seed", "1", "--out", b.string(), "--threads", "3"}).code == kExitOk);
  CHECK(slurp(a / "inputs.csv") == slurp(b / "inputs.csv"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  const auto c = scratch("excite_c");
  REQUIRE(run({"excite", "--seed", "2", "--out", c.string()}).code == kExitOk);
  CHECK(slurp(a / "inputs.csv") != slurp(c / "inputs.csv"));
}

TEST_CASE("excite, simulate, fit, validate, sweep") {
  const auto dir = scratch("pipeline");
  REQUIRE(run({"excite", "--seed", "1", "--out", (dir / "ex").string()}).code == kExitOk);
  const auto sim = run({"simulate", "--name", "eq15", "--inputs", (dir / "ex" / "inputs.csv").string(), "--out",
                        (dir / "sim").string()});
  REQUIRE(sim.code == kExitOk);
  const std::string traj = slurp(dir / "sim" / "trajectory.csv");
  // 200 h at 0.02 h plus the header row.
  CHECK(std::count(traj.begin(), traj.end(), '\n') == 10002);
  CHECK(traj.rfind("t,x1,x2,x3,x4,x5,x6,u1,u2\n", 0) == 0);

  write(dir / "schema.json", kPlantSchema);
  const std::string data = (dir / "sim" / "trajectory.csv").string();
  const std::string schema = (dir / "schema.json").string();

  SUBCASE("fit") {
    const auto r = run({"fit", "--data", data, "--schema", schema, "--lambda", "0.025", "--out", (dir / "fit").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("dx1/dt = ", 0) == 0);
    CHECK(r.err.empty());
    CHECK(fs::exists(dir / "fit" / "model.json"));
    CHECK(fs::exists(dir / "fit" / "equations.txt"));
    CHECK(fs::exists(dir / "fit" / "fit_report.json"));
    const auto m = load_model(dir / "fit" / "model.json");
    CHECK(m.model.lambda == 0.025);
    CHECK_FALSE(m.provenance.config_hash.empty());

    const auto v = run({"validate", "--model", (dir / "fit" / "model.json").string(), "--data", data, "--schema",
                        schema, "--out", (dir / "val").string()});
    REQUIRE(v.code == kExitOk);
    const std::string csv = slurp(dir / "val" / "validation.csv");
    CHECK(csv.rfind("lambda,fold,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  }
  SUBCASE("huge lambda succeeds with a sparsity warning") {
    const auto r = run({"fit", "--data", data, "--schema", schema, "--lambda", "100", "--out", (dir / "zero").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(load_model(dir / "zero" / "model.json").model.is_zero());
  }
  SUBCASE("sweep") {
    const auto r = run({"sweep", "--data", data, "--schema", schema, "--lambda-grid", "0:0.05:0.025", "--out",
                        (dir / "sweep").string(), "--threads", "2"});
    REQUIRE(r.code == kExitOk);
    const std::string csv = slurp(dir / "sweep" / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 5);
    const auto summary = nlohmann::json::parse(slurp(dir / "sweep" / "sweep_summary.json"));
    CHECK(summary.at("grid").size() == 3);
  }
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  write(dir / "d.csv", "t,x1\n0,1\n1,0.5\n2,0.25\n3,0.125\n");
  write(dir / "s.json", R"({"t": "time", "x1": "state"})");
  SUBCASE("missing schema file") {
    CHECK(run({"fit", "--data", (dir / "d.csv").string(), "--out", (dir / "o").string()}).code == kExitConfig);
    CHECK(run({"fit", "--data", (dir / "d.csv").string(), "--schema", (dir / "nope.json").string(), "--out",
               (dir / "o").string()})
              .code == kExitConfig);
  }
  SUBCASE("unknown subcommand or flag") {
    CHECK(run({"frobnicate"}).code == kExitConfig);
    CHECK(run({"fit", "--bogus"}).code == kExitConfig);
  }
  SUBCASE("bad parameter values") {
    CHECK(run({"fit", "--data", (dir / "d.csv").string(), "--schema", (dir / "s.json").string(), "--lambda", "-1"})
              .code == kExitConfig);
    CHECK(run({"sweep", "--lambda-grid", "0:0.1"}).code == kExitConfig);
    CHECK(run({"reference", "eq99"}).code == kExitConfig);
  }
  SUBCASE("unknown config key") {
    write(dir / "c.json", R"({"lambda": 0.1, "nonsense": true})");
    CHECK(run({"fit", "--config", (dir / "c.json").string()}).code == kExitConfig);
  }
  SUBCASE("data errors") {
    CHECK(run({"fit", "--data", (dir / "missing.csv").string(), "--schema", (dir / "s.json").string(), "--out",
               (dir / "o").string()})
              .code == kExitData);
    write(dir / "dup.csv", "t,x1\n0,1\n0,2\n1,3\n");
    CHECK(run({"fit", "--data", (dir / "dup.csv").string(), "--schema", (dir / "s.json").string(), "--out",
               (dir / "o").string()})
              .code == kExitData);
  }
  SUBCASE("numerical failure") {
    // x' = x^2 from x0 = 1 diverges before t = 1.
    ModelFile f;
    f.model = make_model(build_spec(1, 0, 2), (MatrixXd(3, 1) << 0.0, 0.0, 1.0).finished());
    save_model(dir / "blowup.json", f);
    CHECK(run({"simulate", "--model", (dir / "blowup.json").string(), "--x0", "1", "--t-span", "0:2", "--dt", "0.01",
               "--out", (dir / "o").string()})
              .code == kExitNumerical);
  }
}

TEST_CASE("config hash ignores threads and output directory") {
  RunConfig a = RunConfig::defaults();
  RunConfig b = a;
  b.threads = 7;
  b.out = "elsewhere";
  CHECK(a.hash() == b.hash());
  b.lambda = 0.5;
  CHECK(a.hash() != b.hash());
  CHECK(RunConfig::from_json(a.to_json()).to_json() == a.to_json());
}
