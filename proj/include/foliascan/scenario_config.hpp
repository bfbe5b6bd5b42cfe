#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "foliascan/impedance.hpp"
#include "foliascan/scan_planner.hpp"
#include "foliascan/structured_light.hpp"

namespace foliascan::harness {

struct DepthConfig {
  light::StereoRig rig;
  light::SceneDescriptor scene;
  int n_bits = 0;  // 0: ceil(log2(width))
  light::MatchOptions match;
  double contrast_floor = light::kDefaultContrastFloor;
  bool build_mesh = true;
  light::MeshingOptions meshing{4, 0.05};
  /// Perturbation grid (Cartesian product). Empty lists mean a single clean run.
  std::vector<double> alphas;
  std::vector<double> betas;
};

enum class MeshSource { SphereCap, File, Reconstructed };

struct MeshConfig {
  MeshSource source = MeshSource::SphereCap;
  std::filesystem::path path;  // File
  double radius = 0.1;         // SphereCap, m
  double half_angle_deg = 60.0;
  int rings = 16;
};

struct TrajectoryConfig {
  std::string kind = "leaf_switch";  // leaf_switch | raster
  planning::UvRect rect{-0.2, -0.1, 0.2, 0.1};
  double spacing = 0.1;
  double speed = 0.1;  // uv units / s
  std::vector<double> levels{0.0, 0.05, -0.05};  // leaf_switch, m
  double d = 0.0;      // raster, m
  double dwell = 1.0;  // ramp duration between leaves, s
  double transient = 2.0;  // excluded from RMSE after each ramp, s
  /// Zero-impedance hand guiding: the tangential setpoint follows the probe.
  bool free_uv = false;
};

/// Scripted external force, components along (t_u, t_v, n_hat) of the probe's leaf frame.
struct ExternalForceConfig {
  Vec3 force = Vec3::Zero();
  double start = 0.0;
  double end = 0.0;
};

struct ScanConfig {
  MeshConfig mesh;
  std::optional<double> reach;
  control::ImpedanceGains gains;
  control::ContactModel contact;
  control::ProbeParams probe;
  TrajectoryConfig trajectory;
  double dt = 1e-3;
  double duration = 60.0;
  std::optional<ExternalForceConfig> external;
  int self_test_samples = 200;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  std::optional<DepthConfig> depth;
  std::optional<ScanConfig> scan;
};

/// Parses a TOML scenario. Relative mesh paths resolve against `base_dir`.
/// Throws Error(ConfigError) on syntax errors, unknown keys or wrong types.
ScenarioConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});

/// Reads and parses a scenario file, then applies FOLIASCAN_OUT if set.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Rejects every module-precondition violation. Throws Error(ConfigError).
void validate_config(const ScenarioConfig& config);

}  // namespace foliascan::harness
