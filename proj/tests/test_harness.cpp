#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "foliascan/error.hpp"
#include "foliascan/export.hpp"
#include "foliascan/harness.hpp"
#include "foliascan/scenario_config.hpp"

using namespace foliascan;
using namespace foliascan::harness;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidInput;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path config_path(const char* name) { return fs::path(FOLIASCAN_SOURCE_DIR) / "configs" / name; }

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "foliascan_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmallScan = R"(
name = "small"
seed = 3
[scan]
dt = 1e-3
duration = 2.0
reach = 0.03
self_test_samples = 50
[scan.mesh]
source = "sphere_cap"
radius = 0.1
half_angle_deg = 60.0
rings = 8
[scan.gains]
K_u = 2000.0
K_v = 2000.0
K_d = 5000.0
D_u = 49.0
D_v = 49.0
D_d = 77.5
K_rot = 1.0
D_rot = 0.04
[scan.trajectory]
kind = "raster"
rect = [-0.1, -0.05, 0.1, 0.05]
spacing = 0.05
speed = 0.1
d = 0.005
)";

int run_cli(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + "\"" + FOLIASCAN_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("metric examples") {
  const std::vector<double> pair{3.0, 4.0};
  CHECK(compute_metrics(pair).rmse == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(compute_metrics(pair).mae == doctest::Approx(3.5));
  CHECK(compute_metrics(pair).max_abs == 4.0);
  const std::vector<double> one{-0.7};
  CHECK(compute_metrics(one).rmse == doctest::Approx(0.7).epsilon(1e-15));
  const std::vector<double> zeros(10, 0.0);
  CHECK(compute_metrics(zeros).rmse == 0.0);
  CHECK(code_of([] { compute_metrics(std::vector<double>{}); }) == ErrorCode::EmptyRun);
}

TEST_CASE("tracking report skips excluded windows") {
  std::vector<StepRecord> log;
  for (int k = 0; k < 10; ++k) {
    StepRecord r;
    r.t = k;
    r.e_d = k < 5 ? 0.001 : 1.0;
    log.push_back(r);
  }
  const std::vector<planning::Interval> excluded{{5.0, 9.0}};
  const auto report = compute_tracking_report(log, excluded);
  CHECK(report.tracked_samples == 5);
  CHECK(*report.rmse_d == doctest::Approx(0.001));
  CHECK(*report.max_abs_e_d == doctest::Approx(0.001));
}

TEST_CASE("step log CSV") {
  SUBCASE("empty log is headers only") {
    std::stringstream out;
    write_step_log_csv(out, {});
    CHECK(out.str() == "t,u,v,d,e_u,e_v,e_d,f_n,V\n");
    CHECK(read_step_log_csv(out).empty());
  }
  SUBCASE("round trip is exact") {
    std::vector<StepRecord> log{{0.1, 1.0 / 3.0, -2e-17, 0.05, 1e-300, -0.0, 123456.789, 16.666666666666668, 0.0}};
    std::stringstream out;
    write_step_log_csv(out, log);
    const auto back = read_step_log_csv(out);
    REQUIRE(back.size() == 1);
    CHECK(back[0].u == log[0].u);
    CHECK(back[0].v == log[0].v);
    CHECK(back[0].e_u == log[0].e_u);
    CHECK(back[0].f_n == log[0].f_n);
  }
}

TEST_CASE("summary JSON round trip") {
  RunReport r;
  r.rmse_d = 1.234e-4;
  r.rmse_u = 1.0 / 3.0;
  r.max_abs_e_d = 2e-4;
  r.tracked_samples = 59000;
  r.passivity_checks = 59999;
  r.excluded = {{10.0, 13.0}, {20.5, 23.5}};
  r.disparity_mae = 0.129;
  r.wall_clock_s = 0.5;
  CHECK(report_from_json(report_to_json(r, "x")) == r);
  CHECK(code_of([] { report_from_json("{not json"); }) == ErrorCode::IoFailure);
}

TEST_CASE("configuration validation") {
  SUBCASE("small config is accepted") { CHECK_NOTHROW(validate_config(parse_config(kSmallScan))); }
  SUBCASE("syntax error") { CHECK(code_of([] { parse_config("[scan\n"); }) == ErrorCode::ConfigError); }
  SUBCASE("unknown key") {
    CHECK(code_of([] { parse_config(std::string(kSmallScan) + "bogus = 1\n"); }) == ErrorCode::ConfigError);
  }
  SUBCASE("no section") { CHECK(code_of([] { parse_config("name = \"x\"\n"); }) == ErrorCode::ConfigError); }

  auto rejects = [](auto&& mutate) {
    ScenarioConfig cfg = parse_config(kSmallScan);
    mutate(cfg);
    return code_of([&] { validate_config(cfg); }) == ErrorCode::ConfigError;
  };
  CHECK(rejects([](ScenarioConfig& c) { c.scan->dt = 0.0; }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->dt = 0.05; }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->duration = -1.0; }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->gains.K_d = -1.0; }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->contact.k_t = 0.0; }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->probe.mass = 0.0; }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->trajectory.rect = {-0.9, -0.9, 0.9, 0.9}; }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->trajectory.d = 0.05; }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->trajectory.speed = 0.0; }));
  CHECK(rejects([](ScenarioConfig& c) {
    c.scan->mesh.source = MeshSource::File;
    c.scan->mesh.path = "/nonexistent/mesh.off";
  }));
  CHECK(rejects([](ScenarioConfig& c) { c.scan->mesh.source = MeshSource::Reconstructed; }));
  CHECK(rejects([](ScenarioConfig& c) {
    c.depth = DepthConfig{};
    c.depth->match.window = 4;
  }));
  CHECK(rejects([](ScenarioConfig& c) {
    c.depth = DepthConfig{};
    c.depth->scene.kind = "sphere";
  }));
  CHECK(rejects([](ScenarioConfig& c) {
    c.depth = DepthConfig{};
    c.depth->n_bits = 4;
  }));
}

TEST_CASE("bundled configs parse and validate") {
  for (const auto& entry : fs::directory_iterator(fs::path(FOLIASCAN_SOURCE_DIR) / "configs")) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(validate_config(load_config(entry.path())));
  }
}

TEST_CASE("zero-duration run is EmptyRun") {
  ScenarioConfig cfg = parse_config(kSmallScan);
  cfg.scan->duration = 1e-5;
  CHECK(code_of([&] { run_scan_scenario(cfg); }) == ErrorCode::EmptyRun);
}

TEST_CASE("scan scenario is deterministic and its summary matches its CSV") {
  const ScenarioConfig cfg = parse_config(kSmallScan);
  const auto a = run_scan_scenario(cfg);
  const auto b = run_scan_scenario(cfg);
  std::ostringstream ca, cb;
  write_step_log_csv(ca, a.log);
  write_step_log_csv(cb, b.log);
  CHECK(ca.str() == cb.str());
  CHECK(a.log.size() == 2000);
  CHECK(a.report.passivity_violations == 0);

  const fs::path dir = scratch("determinism");
  export_scan(dir, cfg.name, a);
  std::ifstream log_in(dir / "step_log.csv");
  const auto log = read_step_log_csv(log_in);
  const auto summary = report_from_json(slurp(dir / "summary.json"));
  const auto recomputed = compute_tracking_report(log, summary.excluded);
  CHECK(std::abs(*recomputed.rmse_d - *summary.rmse_d) <= 1e-12);
  CHECK(std::abs(*recomputed.rmse_u - *summary.rmse_u) <= 1e-12);
  CHECK(std::abs(*recomputed.rmse_v - *summary.rmse_v) <= 1e-12);

  const std::string svg = slurp(dir / "tracking.svg");
  const std::regex channel("<polyline class=\"channel\" data-channel=\"([a-z_]+)\"");
  std::vector<std::string> channels;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), channel); it != std::sregex_iterator(); ++it) {
    channels.push_back((*it)[1]);
  }
  CHECK(channels == std::vector<std::string>{"e_u", "e_v", "e_d", "d"});
}

TEST_CASE("hand-guided scenario moves along the surface at constant distance") {
  const auto result = run_scan_scenario(load_config(config_path("hand_guided.toml")));
  const auto& log = result.log;
  REQUIRE(!log.empty());
  const double travel = std::hypot(log.back().u - log.front().u, log.back().v - log.front().v);
  CHECK(travel > 0.0);
  double worst = 0.0;
  for (const auto& r : log) worst = std::max(worst, std::abs(r.e_d));
  CHECK(worst <= 1e-3);
  CHECK(result.report.passivity_violations == 0);
}

TEST_CASE("depth scenario with an empty perturbation grid decodes once") {
  DepthConfig cfg;
  cfg.rig = light::StereoRig::centered(96, 48, 300.0, 0.05);
  cfg.scene.kind = "plane";
  cfg.scene.plane = light::ScenePlane{{0, 0, 1.0}, {0, 0, -1}};
  cfg.build_mesh = false;
  const auto result = run_depth_pipeline(cfg);
  CHECK(result.perturbation.empty());
  CHECK(*result.report.disparity_mae <= 0.5);
  CHECK(!result.mesh.has_value());
}

TEST_CASE("CLI exit codes") {
  const fs::path out = scratch("cli");
  const std::string env = "FOLIASCAN_OUT=\"" + out.string() + "\" ";
  const fs::path bad = out / "bad.toml";
  std::ofstream(bad) << "[scan]\ndt = 0.5\n";
  const fs::path depth_only = out / "depth_only.toml";
  std::ofstream(depth_only) << "name = \"d\"\n[depth]\n[depth.scene]\nkind = \"plane\"\n";

  auto cli = [&](const std::string& args) { return run_cli(args, env); };

  CHECK(cli("scan-sim \"" + config_path("hand_guided.toml").string() + "\"") == 0);
  CHECK(fs::exists(out / "hand_guided" / "step_log.csv"));
  CHECK(fs::exists(out / "hand_guided" / "summary.json"));
  CHECK(cli("report \"" + (out / "hand_guided").string() + "\"") == 0);
  CHECK(cli("scan-sim \"" + bad.string() + "\"") == 2);
  CHECK(cli("scan-sim \"" + depth_only.string() + "\"") == 2);
  CHECK(cli("scan-sim /nonexistent.toml") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("param \"" + (fs::path(FOLIASCAN_SOURCE_DIR) / "data/meshes/flat_patch.off").string() + "\" -o \"" +
            (out / "param.csv").string() + "\"") == 0);
  CHECK(slurp(out / "param.csv").rfind("vertex_id,u,v", 0) == 0);

  // A tampered summary no longer matches its log.
  const fs::path summary = out / "hand_guided" / "summary.json";
  std::string text = slurp(summary);
  text = std::regex_replace(text, std::regex("\"rmse_d\":\\s*[-0-9.eE+]+"), "\"rmse_d\": 1.0");
  std::ofstream(summary) << text;
  CHECK(cli("report \"" + (out / "hand_guided").string() + "\"") == 3);
  CHECK(run_cli("--help") == 0);
}
