#include "foliascan/scenario_config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "foliascan/error.hpp"

namespace foliascan::harness {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

// Rejects keys that are not in `known`; catches typos that would silently fall back to defaults.
void check_keys(const toml::table& table, const std::string& where, std::initializer_list<std::string_view> known) {
  const std::set<std::string_view> allowed(known);
  for (const auto& [key, node] : table) {
    if (!allowed.count(key.str())) fail("unknown key '" + std::string(key.str()) + "' in [" + where + "]");
  }
}

const toml::table* subtable(const toml::table& table, std::string_view key, const std::string& where) {
  const toml::node* node = table.get(key);
  if (!node) return nullptr;
  if (!node->is_table()) fail("'" + std::string(key) + "' in [" + where + "] must be a table");
  return node->as_table();
}

std::optional<double> get_number(const toml::table& table, std::string_view key, const std::string& where) {
  const toml::node* node = table.get(key);
  if (!node) return std::nullopt;
  if (const auto* f = node->as_floating_point()) return f->get();
  if (const auto* i = node->as_integer()) return static_cast<double>(i->get());
  fail("'" + std::string(key) + "' in [" + where + "] must be a number");
}

void read_number(const toml::table& table, std::string_view key, const std::string& where, double& out) {
  if (const auto v = get_number(table, key, where)) out = *v;
}

void read_int(const toml::table& table, std::string_view key, const std::string& where, int& out) {
  const toml::node* node = table.get(key);
  if (!node) return;
  const auto* i = node->as_integer();
  if (!i) fail("'" + std::string(key) + "' in [" + where + "] must be an integer");
  out = static_cast<int>(i->get());
}

void read_bool(const toml::table& table, std::string_view key, const std::string& where, bool& out) {
  const toml::node* node = table.get(key);
  if (!node) return;
  const auto* b = node->as_boolean();
  if (!b) fail("'" + std::string(key) + "' in [" + where + "] must be a boolean");
  out = b->get();
}

void read_string(const toml::table& table, std::string_view key, const std::string& where, std::string& out) {
  const toml::node* node = table.get(key);
  if (!node) return;
  const auto* s = node->as_string();
  if (!s) fail("'" + std::string(key) + "' in [" + where + "] must be a string");
  out = s->get();
}

std::optional<std::vector<double>> get_numbers(const toml::table& table, std::string_view key, const std::string& where) {
  const toml::node* node = table.get(key);
  if (!node) return std::nullopt;
  const auto* arr = node->as_array();
  if (!arr) fail("'" + std::string(key) + "' in [" + where + "] must be an array of numbers");
  std::vector<double> out;
  for (const toml::node& item : *arr) {
    if (const auto* f = item.as_floating_point()) {
      out.push_back(f->get());
    } else if (const auto* i = item.as_integer()) {
      out.push_back(static_cast<double>(i->get()));
    } else {
      fail("'" + std::string(key) + "' in [" + where + "] must contain only numbers");
    }
  }
  return out;
}

Vec3 get_vec3(const toml::table& table, std::string_view key, const std::string& where, const Vec3& fallback) {
  const auto v = get_numbers(table, key, where);
  if (!v) return fallback;
  if (v->size() != 3) fail("'" + std::string(key) + "' in [" + where + "] must have 3 components");
  return {(*v)[0], (*v)[1], (*v)[2]};
}

light::SceneDescriptor parse_scene(const toml::table& t) {
  const std::string where = "depth.scene";
  check_keys(t, where, {"kind", "plane", "spheres"});
  light::SceneDescriptor scene;
  read_string(t, "kind", where, scene.kind);
  if (const auto* plane = subtable(t, "plane", where)) {
    check_keys(*plane, where + ".plane", {"point", "normal"});
    light::ScenePlane p;
    p.point = get_vec3(*plane, "point", where + ".plane", p.point);
    p.normal = get_vec3(*plane, "normal", where + ".plane", p.normal);
    scene.plane = p;
  }
  if (const toml::node* node = t.get("spheres")) {
    const auto* arr = node->as_array();
    if (!arr) fail("'spheres' in [depth.scene] must be an array of tables");
    for (const toml::node& item : *arr) {
      const auto* s = item.as_table();
      if (!s) fail("'spheres' in [depth.scene] must be an array of tables");
      check_keys(*s, where + ".spheres", {"center", "radius"});
      light::SceneSphere sphere;
      sphere.center = get_vec3(*s, "center", where + ".spheres", sphere.center);
      read_number(*s, "radius", where + ".spheres", sphere.radius);
      scene.spheres.push_back(sphere);
    }
  }
  return scene;
}

DepthConfig parse_depth(const toml::table& t) {
  const std::string where = "depth";
  check_keys(t, where, {"width", "height", "f", "cx", "cy", "baseline", "n_bits", "window", "d_max", "mismatch_ceiling",
                        "contrast_floor", "mesh", "mesh_stride", "jump_ratio", "scene", "perturbation"});
  DepthConfig cfg;
  int width = 256;
  int height = 192;
  double f = 500.0;
  double baseline = 0.05;
  read_int(t, "width", where, width);
  read_int(t, "height", where, height);
  read_number(t, "f", where, f);
  read_number(t, "baseline", where, baseline);
  cfg.rig = light::StereoRig::centered(width, height, f, baseline);
  read_number(t, "cx", where, cfg.rig.cx);
  read_number(t, "cy", where, cfg.rig.cy);
  read_int(t, "n_bits", where, cfg.n_bits);
  read_int(t, "window", where, cfg.match.window);
  read_int(t, "d_max", where, cfg.match.d_max);
  read_number(t, "mismatch_ceiling", where, cfg.match.mismatch_ceiling);
  read_number(t, "contrast_floor", where, cfg.contrast_floor);
  read_bool(t, "mesh", where, cfg.build_mesh);
  read_int(t, "mesh_stride", where, cfg.meshing.stride);
  read_number(t, "jump_ratio", where, cfg.meshing.jump_ratio);
  const auto* scene = subtable(t, "scene", where);
  if (!scene) fail("[depth] needs a [depth.scene] table");
  cfg.scene = parse_scene(*scene);
  if (const auto* grid = subtable(t, "perturbation", where)) {
    check_keys(*grid, where + ".perturbation", {"alphas", "betas"});
    if (auto a = get_numbers(*grid, "alphas", where + ".perturbation")) cfg.alphas = std::move(*a);
    if (auto b = get_numbers(*grid, "betas", where + ".perturbation")) cfg.betas = std::move(*b);
  }
  return cfg;
}

ScanConfig parse_scan(const toml::table& t, const std::filesystem::path& base_dir) {
  const std::string where = "scan";
  check_keys(t, where, {"dt", "duration", "reach", "self_test_samples", "mesh", "gains", "contact", "probe", "trajectory", "external"});
  ScanConfig cfg;
  read_number(t, "dt", where, cfg.dt);
  read_number(t, "duration", where, cfg.duration);
  cfg.reach = get_number(t, "reach", where);
  read_int(t, "self_test_samples", where, cfg.self_test_samples);

  if (const auto* m = subtable(t, "mesh", where)) {
    check_keys(*m, "scan.mesh", {"source", "path", "radius", "half_angle_deg", "rings"});
    std::string source = "sphere_cap";
    read_string(*m, "source", "scan.mesh", source);
    if (source == "sphere_cap") {
      cfg.mesh.source = MeshSource::SphereCap;
    } else if (source == "file") {
      cfg.mesh.source = MeshSource::File;
    } else if (source == "reconstructed") {
      cfg.mesh.source = MeshSource::Reconstructed;
    } else {
      fail("unknown mesh source '" + source + "'");
    }
    std::string path;
    read_string(*m, "path", "scan.mesh", path);
    if (!path.empty()) cfg.mesh.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
    read_number(*m, "radius", "scan.mesh", cfg.mesh.radius);
    read_number(*m, "half_angle_deg", "scan.mesh", cfg.mesh.half_angle_deg);
    read_int(*m, "rings", "scan.mesh", cfg.mesh.rings);
  }
  if (const auto* g = subtable(t, "gains", where)) {
    check_keys(*g, "scan.gains", {"K_u", "K_v", "K_d", "D_u", "D_v", "D_d", "K_rot", "D_rot"});
    read_number(*g, "K_u", "scan.gains", cfg.gains.K_u);
    read_number(*g, "K_v", "scan.gains", cfg.gains.K_v);
    read_number(*g, "K_d", "scan.gains", cfg.gains.K_d);
    read_number(*g, "D_u", "scan.gains", cfg.gains.D_u);
    read_number(*g, "D_v", "scan.gains", cfg.gains.D_v);
    read_number(*g, "D_d", "scan.gains", cfg.gains.D_d);
    read_number(*g, "K_rot", "scan.gains", cfg.gains.K_rot);
    read_number(*g, "D_rot", "scan.gains", cfg.gains.D_rot);
  }
  if (const auto* c = subtable(t, "contact", where)) {
    check_keys(*c, "scan.contact", {"k_t", "c_t"});
    read_number(*c, "k_t", "scan.contact", cfg.contact.k_t);
    read_number(*c, "c_t", "scan.contact", cfg.contact.c_t);
  }
  if (const auto* p = subtable(t, "probe", where)) {
    check_keys(*p, "scan.probe", {"mass", "inertia"});
    read_number(*p, "mass", "scan.probe", cfg.probe.mass);
    cfg.probe.inertia = get_vec3(*p, "inertia", "scan.probe", cfg.probe.inertia);
  }
  if (const auto* tr = subtable(t, "trajectory", where)) {
    const std::string w = "scan.trajectory";
    check_keys(*tr, w, {"kind", "rect", "spacing", "speed", "levels", "d", "dwell", "transient", "free_uv"});
    read_string(*tr, "kind", w, cfg.trajectory.kind);
    if (const auto rect = get_numbers(*tr, "rect", w)) {
      if (rect->size() != 4) fail("'rect' in [scan.trajectory] must be [u_min, v_min, u_max, v_max]");
      cfg.trajectory.rect = {(*rect)[0], (*rect)[1], (*rect)[2], (*rect)[3]};
    }
    read_number(*tr, "spacing", w, cfg.trajectory.spacing);
    read_number(*tr, "speed", w, cfg.trajectory.speed);
    if (auto levels = get_numbers(*tr, "levels", w)) cfg.trajectory.levels = std::move(*levels);
    read_number(*tr, "d", w, cfg.trajectory.d);
    read_number(*tr, "dwell", w, cfg.trajectory.dwell);
    read_number(*tr, "transient", w, cfg.trajectory.transient);
    read_bool(*tr, "free_uv", w, cfg.trajectory.free_uv);
  }
  if (const auto* e = subtable(t, "external", where)) {
    check_keys(*e, "scan.external", {"force", "start", "end"});
    ExternalForceConfig ext;
    ext.force = get_vec3(*e, "force", "scan.external", ext.force);
    read_number(*e, "start", "scan.external", ext.start);
    read_number(*e, "end", "scan.external", ext.end);
    cfg.external = ext;
  }
  return cfg;
}

bool all_finite(std::initializer_list<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

ScenarioConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML syntax error: " << e.description() << " at line " << e.source().begin.line;
    fail(msg.str());
  }
  check_keys(root, "root", {"name", "seed", "output_dir", "depth", "scan"});
  ScenarioConfig cfg;
  read_string(root, "name", "root", cfg.name);
  if (const toml::node* seed = root.get("seed")) {
    const auto* i = seed->as_integer();
    if (!i || i->get() < 0) fail("'seed' must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(i->get());
  }
  std::string out;
  read_string(root, "output_dir", "root", out);
  if (!out.empty()) cfg.output_dir = out;
  if (const auto* d = subtable(root, "depth", "root")) cfg.depth = parse_depth(*d);
  if (const auto* s = subtable(root, "scan", "root")) cfg.scan = parse_scan(*s, base_dir);
  if (!cfg.depth && !cfg.scan) fail("scenario defines neither [depth] nor [scan]");
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  ScenarioConfig cfg = parse_config(text.str(), path.parent_path());
  if (const char* env = std::getenv("FOLIASCAN_OUT"); env && *env) cfg.output_dir = env;
  return cfg;
}

void validate_config(const ScenarioConfig& cfg) {
  auto guard = [](auto&& check) {
    try {
      check();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      fail(e.what());
    }
  };

  if (cfg.depth) {
    const DepthConfig& d = *cfg.depth;
    guard([&] { d.rig.validate(); });
    guard([&] { d.scene.validate(); });
    if (d.n_bits != 0 && (d.n_bits < 1 || d.n_bits > 31 || (std::int64_t{1} << d.n_bits) < d.rig.width)) {
      fail("n_bits = " + std::to_string(d.n_bits) + " cannot code " + std::to_string(d.rig.width) + " columns");
    }
    if (d.match.window < 1 || d.match.window % 2 == 0) fail("window must be odd and >= 1");
    if (d.match.d_max < -1 || d.match.d_max >= d.rig.width) fail("d_max must lie in [0, width)");
    if (!(d.match.mismatch_ceiling >= 0.0 && d.match.mismatch_ceiling <= 1.0)) fail("mismatch_ceiling must lie in [0, 1]");
    if (!(d.contrast_floor > 0.0 && d.contrast_floor <= 1.0)) fail("contrast_floor must lie in (0, 1]");
    if (d.meshing.stride < 1) fail("mesh_stride must be >= 1");
    if (!(d.meshing.jump_ratio > 0.0)) fail("jump_ratio must be positive");
    for (double a : d.alphas) {
      if (!(a > 0.0) || !std::isfinite(a)) fail("perturbation alphas must be > 0");
    }
    for (double b : d.betas) {
      if (!std::isfinite(b)) fail("perturbation betas must be finite");
    }
  }

  if (cfg.scan) {
    const ScanConfig& s = *cfg.scan;
    if (!(s.dt > 0.0 && s.dt <= 0.01)) fail("dt must lie in (0, 0.01] s");
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) fail("duration must be positive");
    if (s.reach && !(*s.reach > 0.0)) fail("reach must be positive");
    if (s.self_test_samples < 0) fail("self_test_samples must be >= 0");
    guard([&] { s.gains.validate(); });
    guard([&] { s.contact.validate(); });
    guard([&] { s.probe.validate(); });

    switch (s.mesh.source) {
      case MeshSource::SphereCap:
        if (!(s.mesh.radius > 0.0) || !(s.mesh.half_angle_deg > 0.0 && s.mesh.half_angle_deg <= 90.0) || s.mesh.rings < 1) {
          fail("sphere_cap needs radius > 0, 0 < half_angle_deg <= 90, rings >= 1");
        }
        break;
      case MeshSource::File:
        if (s.mesh.path.empty() || !std::filesystem::exists(s.mesh.path)) {
          fail("mesh file '" + s.mesh.path.string() + "' does not exist");
        }
        break;
      case MeshSource::Reconstructed:
        if (!cfg.depth) fail("mesh source 'reconstructed' needs a [depth] section");
        if (!cfg.depth->build_mesh) fail("mesh source 'reconstructed' needs depth.mesh = true");
        break;
    }

    const TrajectoryConfig& tr = s.trajectory;
    if (tr.kind != "leaf_switch" && tr.kind != "raster") fail("trajectory kind must be 'leaf_switch' or 'raster'");
    if (!all_finite({tr.rect.u_min, tr.rect.v_min, tr.rect.u_max, tr.rect.v_max})) fail("trajectory rect must be finite");
    if (!(tr.rect.u_max >= tr.rect.u_min && tr.rect.v_max >= tr.rect.v_min)) fail("trajectory rect must have max >= min");
    for (double u : {tr.rect.u_min, tr.rect.u_max}) {
      for (double v : {tr.rect.v_min, tr.rect.v_max}) {
        if (!(std::hypot(u, v) < 1.0)) fail("trajectory rect must lie inside the unit disk");
      }
    }
    if (!(tr.spacing > 0.0) || !(tr.speed > 0.0)) fail("trajectory spacing and speed must be positive");
    if (!(tr.dwell > 0.0) || !(tr.transient >= 0.0)) fail("trajectory dwell must be > 0 and transient >= 0");
    if (tr.kind == "leaf_switch" && tr.levels.empty()) fail("leaf_switch trajectory needs at least one level");
    const std::vector<double> levels = tr.kind == "leaf_switch" ? tr.levels : std::vector<double>{tr.d};
    for (double level : levels) {
      if (!std::isfinite(level)) fail("leaf levels must be finite");
      if (s.reach && !(std::abs(level) < *s.reach)) {
        fail("leaf level " + std::to_string(level) + " m is not within reach " + std::to_string(*s.reach) + " m");
      }
    }
    if (s.external) {
      if (!s.external->force.allFinite() || !(s.external->end >= s.external->start)) {
        fail("external force needs finite components and end >= start");
      }
    }
  }
}

}  // namespace foliascan::harness
