#include "foliascan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "foliascan/error.hpp"
#include "foliascan/impedance.hpp"
#include "foliascan/mesh_io.hpp"
#include "foliascan/mesh_shapes.hpp"

namespace foliascan::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

light::DisparityMap decode_and_match(const light::StereoCapture& cap, const DepthConfig& cfg, int n_bits) {
  const auto left = light::decode_codewords(light::binarize_stack(cap.left, cfg.contrast_floor));
  const auto right = light::decode_codewords(light::binarize_stack(cap.right, cfg.contrast_floor));
  light::MatchOptions match = cfg.match;
  match.n_bits = n_bits;
  return light::match_disparity(left, right, match);
}

// Maps setup failures to configuration errors so the CLI reports them as such.
template <typename F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

}  // namespace

ErrorStats compute_metrics(std::span<const double> errors) {
  if (errors.empty()) throw Error(ErrorCode::EmptyRun, "no samples to compute metrics over");
  ErrorStats s;
  double sq = 0.0;
  double abs_sum = 0.0;
  for (double e : errors) {
    sq += e * e;
    abs_sum += std::abs(e);
    s.max_abs = std::max(s.max_abs, std::abs(e));
  }
  s.count = errors.size();
  s.rmse = std::sqrt(sq / static_cast<double>(s.count));
  s.mae = abs_sum / static_cast<double>(s.count);
  return s;
}

RunReport compute_tracking_report(std::span<const StepRecord> log, std::span<const planning::Interval> excluded) {
  std::vector<double> eu, ev, ed;
  for (const StepRecord& r : log) {
    const bool skip = std::any_of(excluded.begin(), excluded.end(), [&](const planning::Interval& w) { return w.contains(r.t); });
    if (skip) continue;
    eu.push_back(r.e_u);
    ev.push_back(r.e_v);
    ed.push_back(r.e_d);
  }
  RunReport report;
  report.excluded.assign(excluded.begin(), excluded.end());
  const ErrorStats d = compute_metrics(ed);
  report.rmse_d = d.rmse;
  report.max_abs_e_d = d.max_abs;
  report.rmse_u = compute_metrics(eu).rmse;
  report.rmse_v = compute_metrics(ev).rmse;
  report.tracked_samples = d.count;
  return report;
}

DepthResult run_depth_pipeline(const DepthConfig& cfg) {
  const auto start = Clock::now();
  DepthResult out;
  const int n_bits = cfg.n_bits > 0 ? cfg.n_bits : light::default_bit_count(cfg.rig.width);
  out.scene = light::render_scene(cfg.scene, cfg.rig);
  const auto patterns = light::generate_gray_patterns(cfg.rig.width, cfg.rig.height, n_bits);
  out.capture = light::simulate_capture(out.scene, cfg.rig, patterns);
  out.truth = light::ground_truth_disparity(out.scene, cfg.rig);
  out.disparity = decode_and_match(out.capture, cfg, n_bits);
  out.depth = light::disparity_to_depth(out.disparity, cfg.rig);

  const auto err = light::disparity_mae(out.disparity, out.truth);
  out.report.disparity_mae = err.mae;
  out.report.valid_fraction = err.valid_fraction;
  double truth_sum = 0.0;
  std::size_t truth_count = 0;
  for (std::size_t i = 0; i < out.truth.values.size(); ++i) {
    if (out.truth.valid.data[i]) {
      truth_sum += out.truth.values.data[i];
      ++truth_count;
    }
  }
  if (truth_count > 0) out.report.mean_true_disparity = truth_sum / static_cast<double>(truth_count);

  if (cfg.build_mesh) out.mesh = light::depth_to_mesh(out.depth, cfg.rig, cfg.meshing);

  if (!cfg.alphas.empty() || !cfg.betas.empty()) {
    const std::vector<double> alphas = cfg.alphas.empty() ? std::vector<double>{1.0} : cfg.alphas;
    const std::vector<double> betas = cfg.betas.empty() ? std::vector<double>{0.0} : cfg.betas;
    for (double alpha : alphas) {
      for (double beta : betas) {
        light::StereoCapture perturbed{light::perturb_images(out.capture.left, alpha, beta),
                                       light::perturb_images(out.capture.right, alpha, beta), out.capture.right_valid};
        PerturbationRow row{alpha, beta, std::numeric_limits<double>::quiet_NaN(), 0.0};
        const auto disparity = decode_and_match(perturbed, cfg, n_bits);
        try {
          const auto e = light::disparity_mae(disparity, out.truth);
          row.mae = e.mae;
          row.valid_fraction = e.valid_fraction;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::EmptyOverlap) throw;
        }
        out.perturbation.push_back(row);
      }
    }
  }
  out.report.wall_clock_s = seconds_since(start);
  return out;
}

Foliation build_foliation(const ScenarioConfig& config) {
  if (!config.scan) throw Error(ErrorCode::ConfigError, "scenario has no [scan] section");
  const ScanConfig& scan = *config.scan;
  return as_config_error([&] {
    TriangleMesh mesh = [&] {
      switch (scan.mesh.source) {
        case MeshSource::SphereCap:
          return shapes::sphere_cap(scan.mesh.radius, scan.mesh.half_angle_deg * std::numbers::pi / 180.0, scan.mesh.rings);
        case MeshSource::File:
          return load_mesh(scan.mesh.path);
        case MeshSource::Reconstructed: {
          if (!config.depth) throw Error(ErrorCode::ConfigError, "reconstructed mesh needs a [depth] section");
          DepthConfig depth = *config.depth;
          depth.alphas.clear();
          depth.betas.clear();
          depth.build_mesh = true;
          return std::move(*run_depth_pipeline(depth).mesh);
        }
      }
      throw Error(ErrorCode::ConfigError, "unknown mesh source");
    }();
    DiskParam param = parametrize_disk(mesh);
    FoliationOptions options;
    options.reach = scan.reach;
    return Foliation(std::move(mesh), std::move(param), options);
  });
}

planning::Trajectory build_trajectory(const ScanConfig& scan, double reach) {
  return as_config_error([&] {
    const auto& tr = scan.trajectory;
    if (tr.kind == "raster") {
      auto traj = planning::raster_scan(tr.rect, tr.spacing, tr.speed, tr.d);
      traj.validate(reach);
      return traj;
    }
    const auto base = planning::raster_scan(tr.rect, tr.spacing, tr.speed, 0.0);
    auto traj = planning::leaf_switch_trajectory(base, tr.levels, tr.dwell, reach);
    traj.validate(reach);
    return traj;
  });
}

ScanResult run_scan_scenario(const ScenarioConfig& config) {
  if (!config.scan) throw Error(ErrorCode::ConfigError, "scenario has no [scan] section");
  const Foliation foliation = build_foliation(config);
  return run_scan_scenario(*config.scan, foliation, config.seed);
}

ScanResult run_scan_scenario(const ScanConfig& scan, const Foliation& foliation, std::uint64_t seed) {
  const auto start = Clock::now();
  const auto steps = static_cast<long>(std::floor(scan.duration / scan.dt + 0.5));
  if (!(steps > 0)) throw Error(ErrorCode::EmptyRun, "scenario duration covers no time step");

  ScanResult out;
  out.trajectory = build_trajectory(scan, foliation.reach());
  const auto& traj = out.trajectory;
  for (const auto& knot : traj.knots) {
    if (!foliation.in_domain(knot.x.uv())) {
      throw Error(ErrorCode::ConfigError, "trajectory leaves the parametrized domain at t = " + std::to_string(knot.t));
    }
  }

  // Foliation round-trip self test on seeded random task coordinates.
  if (scan.self_test_samples > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double d_span = std::isfinite(foliation.reach()) ? 0.5 * foliation.reach() : 0.01;
    double uv_err = 0.0;
    double d_err = 0.0;
    for (int i = 0; i < scan.self_test_samples;) {
      const TaskCoords x{0.95 * unit(rng), 0.95 * unit(rng), d_span * unit(rng)};
      if (!foliation.in_domain(x.uv())) continue;
      const TaskCoords back = foliation.task_coords(foliation.embed(x));
      uv_err = std::max(uv_err, (back.uv() - x.uv()).norm());
      d_err = std::max(d_err, std::abs(back.d - x.d));
      ++i;
    }
    out.report.self_test_uv_error = uv_err;
    out.report.self_test_d_error = d_err;
  }

  const auto first = planning::sample_setpoint(traj, 0.0);
  control::ProbeState state;
  state.p = foliation.embed(first.x);
  state.q = control::aligned_orientation(foliation.surface_frame(first.x.u, first.x.v).n_hat);

  control::PassivityMonitor monitor(control::max_natural_frequency(scan.gains, scan.contact, scan.probe));
  TaskCoords hint = first.x;
  double prev_storage = 0.0;
  double supplied = 0.0;
  out.log.reserve(static_cast<std::size_t>(steps));
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * scan.dt;
    auto sp = planning::sample_setpoint(traj, t);
    const TaskCoords probe = foliation.task_coords(state.p, hint);
    if (scan.trajectory.free_uv) {
      sp.x.u = probe.u;
      sp.x.v = probe.v;
      sp.rate.x() = 0.0;
      sp.rate.y() = 0.0;
    }
    const auto snap = control::evaluate_task(foliation, state, sp.x, sp.rate, probe);
    const Vec3 contact = control::contact_force(snap.probe.d, snap.frame.n_hat, state.v, scan.contact);
    control::Wrench applied = control::impedance_wrench(snap.error, snap.frame, state, scan.gains);
    const Vec3 control_force = applied.force;
    applied.force += contact;
    control::Wrench external;
    if (scan.external && t >= scan.external->start && t < scan.external->end) {
      external.force = snap.frame.reassemble(scan.external->force);
    }

    const double storage = control::storage_function(state, snap.error, scan.gains, scan.contact, snap.probe.d,
                                                     snap.frame.n_hat, scan.probe);
    if (k > 0) monitor.check(prev_storage, storage, supplied, scan.dt);
    out.log.push_back({t, snap.probe.u, snap.probe.v, snap.probe.d, snap.error.e_u, snap.error.e_v, snap.error.e_d,
                       contact.dot(snap.frame.n_hat), storage});

    const control::ProbeState next = control::step_dynamics(state, applied, external, scan.probe, scan.dt);
    // Energy entering through the moving setpoint and the external force.
    supplied = scan.dt * (control_force.dot(snap.target_velocity) + external.force.dot(next.v));
    prev_storage = storage;
    state = next;
    hint = snap.probe;
  }

  std::vector<planning::Interval> excluded;
  for (const auto& sw : traj.leaf_switches) excluded.push_back({sw.begin, sw.end + scan.trajectory.transient});
  RunReport tracking = compute_tracking_report(out.log, excluded);
  tracking.self_test_uv_error = out.report.self_test_uv_error;
  tracking.self_test_d_error = out.report.self_test_d_error;
  tracking.passivity_violations = monitor.violations();
  tracking.passivity_checks = monitor.checks();
  // Check k compares the storage at steps k and k + 1.
  if (const auto k = monitor.first_violation()) tracking.first_violation_t = out.log[*k + 1].t;
  tracking.wall_clock_s = seconds_since(start);
  out.report = tracking;
  return out;
}

}  // namespace foliascan::harness
