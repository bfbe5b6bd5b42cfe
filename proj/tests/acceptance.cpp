// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "foliascan/harness.hpp"
#include "foliascan/impedance.hpp"
#include "foliascan/mesh_io.hpp"
#include "foliascan/mesh_shapes.hpp"
#include "foliascan/parametrization.hpp"
#include "foliascan/scenario_config.hpp"
#include "oracles.hpp"
#include "settling.hpp"

using namespace foliascan;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

harness::ScenarioConfig config(const char* name) {
  return harness::load_config(fs::path(FOLIASCAN_SOURCE_DIR) / "configs" / name);
}

Verdict depth_accuracy() {
  Verdict v{true, ""};
  for (const char* name : {"depth_plane.toml", "depth_sphere.toml"}) {
    auto cfg = *config(name).depth;
    cfg.alphas.clear();
    cfg.betas.clear();
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = harness::run_depth_pipeline(cfg);
    const double elapsed = seconds_since(t0);
    const bool ok = cfg.rig.width == 256 && cfg.rig.height == 192 && cfg.rig.f == 500.0 && cfg.rig.baseline == 0.05 &&
                    *r.report.disparity_mae <= 0.5 && *r.report.valid_fraction >= 0.9 && elapsed < 10.0;
    v.pass = v.pass && ok;
    v.detail += fmt("%s MAE %.3f px valid %.1f%% %.2f s; ", name, *r.report.disparity_mae,
                    100.0 * *r.report.valid_fraction, elapsed);
  }
  return v;
}

Verdict perturbation_robustness() {
  Verdict v{true, ""};
  for (const char* name : {"depth_plane.toml", "depth_sphere.toml"}) {
    auto cfg = *config(name).depth;
    cfg.build_mesh = false;
    cfg.alphas = {0.8, 0.9, 1.0, 1.1, 1.2};
    cfg.betas = {-0.1, -0.05, 0.0, 0.05, 0.1};
    const auto r = harness::run_depth_pipeline(cfg);
    double worst = 0.0;
    for (const auto& row : r.perturbation) {
      worst = std::isfinite(row.mae) ? std::max(worst, std::abs(row.mae - *r.report.disparity_mae)) : INFINITY;
    }
    v.pass = v.pass && r.perturbation.size() == 25 && worst <= 0.05;
    v.detail += fmt("%s max |dMAE| %.4f px over 25 cells; ", name, worst);
  }
  return v;
}

harness::ScanResult default_scan_result;
double default_scan_seconds = 0.0;

Verdict tracking() {
  const auto cfg = config("default_scan.toml");
  const auto t0 = std::chrono::steady_clock::now();
  default_scan_result = harness::run_scan_scenario(cfg);
  default_scan_seconds = seconds_since(t0);
  const auto& r = default_scan_result.report;
  const bool setup = cfg.scan->mesh.source == harness::MeshSource::SphereCap && cfg.scan->mesh.radius == 0.1 &&
                     cfg.scan->dt == 1e-3 && cfg.scan->duration == 60.0 &&
                     cfg.scan->trajectory.levels == std::vector<double>{0.0, 0.05, -0.05};
  return {setup && *r.rmse_d <= 0.5e-3 && default_scan_seconds < 60.0,
          fmt("RMSE_d %.4f mm over %zu samples, %.2f s", 1e3 * *r.rmse_d, r.tracked_samples, default_scan_seconds)};
}

Verdict equilibrium() {
  Verdict v{true, ""};
  const double combos[3][3] = {{1000.0, 500.0, -0.05}, {5000.0, 20.0, -0.02}, {800.0, 2000.0, -0.04}};
  for (const auto& c : combos) {
    const double want = settling::predicted_depth(c[0], c[1], c[2]);
    const double got = settling::settle(c[0], c[1], c[2]).d;
    const double rel = std::abs(got - want) / std::abs(want);
    v.pass = v.pass && rel <= 0.01;
    v.detail += fmt("K_d=%g k_t=%g: %.5f vs %.5f m (%.3f%%); ", c[0], c[1], got, want, 100.0 * rel);
  }
  return v;
}

Verdict round_trip() {
  auto mesh = shapes::sphere_cap(0.1, std::numbers::pi / 3, 16);
  auto param = parametrize_disk(mesh);
  const Foliation fol(std::move(mesh), std::move(param));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double uv_err = 0.0, d_err = 0.0;
  for (int k = 0; k < 1000;) {
    const Vec2 uv(unit(rng), unit(rng));
    if (!fol.in_domain(uv)) continue;
    const TaskCoords x{uv.x(), uv.y(), 0.999 * fol.reach() * unit(rng)};
    const TaskCoords back = fol.task_coords(fol.embed(x));
    uv_err = std::max(uv_err, (back.uv() - x.uv()).norm());
    d_err = std::max(d_err, std::abs(back.d - x.d));
    ++k;
  }
  return {uv_err <= 1e-6 && d_err <= 1e-8, fmt("max uv error %.2e, max d error %.2e m", uv_err, d_err)};
}

Verdict closest_point_oracle() {
  double worst = 0.0;
  int queries = 0;
  std::mt19937_64 rng(6);
  for (const char* name : {"sphere_cap.off", "irregular_patch.off", "saddle.off", "sphere_octant.off"}) {
    const auto mesh = load_mesh(fs::path(FOLIASCAN_SOURCE_DIR) / "data" / "meshes" / name);
    const ClosestPointIndex index(mesh);
    Eigen::AlignedBox3d box;
    for (const Vec3& x : mesh.vertices()) box.extend(x);
    const Vec3 pad = Vec3::Constant(0.5 * box.diagonal().norm());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 250; ++k, ++queries) {
      const Vec3 lo = box.min() - pad, span = box.diagonal() + 2.0 * pad;
      const Vec3 p = lo + Vec3(unit(rng), unit(rng), unit(rng)).cwiseProduct(span);
      const auto got = index.query(p);
      const auto want = oracle::exhaustive_closest(mesh, p);
      worst = std::max({worst, std::abs(got.distance - want.distance), (got.foot - want.foot).norm()});
    }
  }
  return {queries == 1000 && worst <= 1e-9, fmt("%d queries, max deviation %.2e m", queries, worst)};
}

Verdict gray_code() {
  std::size_t checked = 0;
  for (int n = 1; n <= 12; ++n) {
    const auto table = oracle::reflected_gray_table(n);
    std::vector<bool> hit(table.size(), false);
    for (std::uint32_t c = 0; c < table.size(); ++c) {
      const std::uint32_t g = light::gray_encode(c);
      if (g != table[c] || g >= table.size() || hit[g] || light::gray_decode(g) != c) return {false, fmt("n=%d c=%u", n, c)};
      hit[g] = true;
      if (c + 1 < table.size() && oracle::popcount(g ^ light::gray_encode(c + 1)) != 1) return {false, fmt("adjacency n=%d c=%u", n, c)};
      ++checked;
    }
  }
  return {true, fmt("%zu codes over n_bits 1..12", checked)};
}

Verdict passivity() {
  std::size_t violations = default_scan_result.report.passivity_violations;
  std::size_t checks = default_scan_result.report.passivity_checks;
  std::string detail = fmt("default_scan %zu/%zu; ", violations, checks);
  for (const char* name : {"hand_guided.toml", "file_scan.toml", "reconstructed_scan.toml"}) {
    const auto r = harness::run_scan_scenario(config(name)).report;
    violations += r.passivity_violations;
    checks += r.passivity_checks;
    detail += fmt("%s %zu/%zu; ", name, r.passivity_violations, r.passivity_checks);
  }
  return {violations == 0 && checks > 0, detail + fmt("total %zu violations", violations)};
}

Verdict oscillator() {
  control::ProbeParams params;
  params.mass = 1.0;
  const double K = 100.0, D = 20.0, x0 = 0.01, dt = 1e-4;
  control::ProbeState s;
  s.p = Vec3(x0, 0, 0);
  double worst = 0.0;
  for (int k = 1; k <= 20000; ++k) {
    s = control::step_dynamics(s, {Vec3(-K * s.p.x() - D * s.v.x(), 0, 0), Vec3::Zero()}, {}, params, dt);
    worst = std::max(worst, std::abs(s.p.x() - oracle::critically_damped(x0, 0.0, 10.0, k * dt)));
  }
  return {worst <= 1e-4, fmt("max deviation %.2e m over 2 s", worst)};
}

Verdict parametrization() {
  int meshes = 0, flips = 0;
  double boundary = 0.0;
  for (const auto& entry : fs::directory_iterator(fs::path(FOLIASCAN_SOURCE_DIR) / "data" / "meshes")) {
    const auto mesh = load_mesh(entry.path());
    const auto param = parametrize_disk(mesh);
    flips += static_cast<int>(count_flipped_faces(mesh, param));
    for (int b : param.boundary_loop) boundary = std::max(boundary, std::abs(param.uv[static_cast<std::size_t>(b)].norm() - 1.0));
    ++meshes;
  }
  return {meshes >= 6 && flips == 0 && boundary <= 1e-12,
          fmt("%d meshes, %d flipped faces, max | |uv|-1 | %.1e", meshes, flips, boundary)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"depth pipeline accuracy", depth_accuracy},
      {"perturbation robustness", perturbation_robustness},
      {"tracking RMSE_d", tracking},
      {"contact-force equilibrium", equilibrium},
      {"foliation round trip", round_trip},
      {"closest-point oracle", closest_point_oracle},
      {"Gray code bijection", gray_code},
      {"passivity", passivity},
      {"dynamics integrator", oscillator},
      {"parametrization validity", parametrization},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
