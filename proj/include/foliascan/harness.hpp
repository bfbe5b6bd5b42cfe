#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foliascan/foliation.hpp"
#include "foliascan/scenario_config.hpp"

namespace foliascan::harness {

/// One row of the per-step log: CSV `t,u,v,d,e_u,e_v,e_d,f_n,V` (SI units).
struct StepRecord {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
  double e_u = 0.0;
  double e_v = 0.0;
  double e_d = 0.0;
  double f_n = 0.0;
  double V = 0.0;
};

struct ErrorStats {
  double rmse = 0.0;
  double mae = 0.0;
  double max_abs = 0.0;
  std::size_t count = 0;
};

/// RMSE = sqrt(mean of squares), MAE = mean of absolute values. Throws EmptyRun.
ErrorStats compute_metrics(std::span<const double> errors);

struct RunReport {
  // Tracking (scan scenarios), meters.
  std::optional<double> rmse_d;
  std::optional<double> rmse_u;
  std::optional<double> rmse_v;
  std::optional<double> max_abs_e_d;
  std::size_t tracked_samples = 0;
  std::size_t passivity_violations = 0;
  std::size_t passivity_checks = 0;
  std::optional<double> first_violation_t;  // s
  std::vector<planning::Interval> excluded;  // windows left out of the RMSE
  // Foliation round-trip self test.
  std::optional<double> self_test_uv_error;
  std::optional<double> self_test_d_error;
  // Depth pipeline.
  std::optional<double> disparity_mae;
  std::optional<double> valid_fraction;
  std::optional<double> mean_true_disparity;
  double wall_clock_s = 0.0;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Tracking metrics over log rows whose time falls outside every excluded window.
RunReport compute_tracking_report(std::span<const StepRecord> log, std::span<const planning::Interval> excluded);

struct PerturbationRow {
  double alpha = 1.0;
  double beta = 0.0;
  double mae = 0.0;
  double valid_fraction = 0.0;
};

struct DepthResult {
  light::DepthScene scene;
  light::StereoCapture capture;
  light::DisparityMap truth;
  light::DisparityMap disparity;
  light::DepthMap depth;
  std::optional<TriangleMesh> mesh;
  std::vector<PerturbationRow> perturbation;
  RunReport report;
};

/// patterns -> capture -> binarize -> decode -> match -> depth -> mesh, plus
/// one extra decode per (alpha, beta) in the perturbation grid.
DepthResult run_depth_pipeline(const DepthConfig& config);

struct ScanResult {
  RunReport report;
  std::vector<StepRecord> log;
  planning::Trajectory trajectory;
};

/// Builds the surface foliation a scan scenario runs on.
Foliation build_foliation(const ScenarioConfig& config);

/// Planned trajectory of a scan scenario.
planning::Trajectory build_trajectory(const ScanConfig& scan, double reach);

/// Simulates the probe along the scenario trajectory. Throws EmptyRun for a
/// zero-step run, ConfigError for setup failures (mesh, reach, trajectory)
/// and NonFiniteState / BeyondReach / NoConvergence during simulation.
ScanResult run_scan_scenario(const ScenarioConfig& config);

/// Same, on a prepared foliation.
ScanResult run_scan_scenario(const ScanConfig& scan, const Foliation& foliation, std::uint64_t seed);

}  // namespace foliascan::harness
