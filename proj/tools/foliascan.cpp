#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "foliascan/error.hpp"
#include "foliascan/export.hpp"
#include "foliascan/harness.hpp"
#include "foliascan/mesh_io.hpp"
#include "foliascan/parametrization.hpp"

namespace {

namespace fs = std::filesystem;
using foliascan::Error;
using foliascan::ErrorCode;
using namespace foliascan::harness;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kIoError = 1;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidInput:
      return kConfigError;
    case ErrorCode::IoFailure:
      return kIoError;
    default:
      return kNumericalError;
  }
}

struct Outcome {
  int code = kOk;
  std::string message;
};

std::string fmt_opt(const std::optional<double>& x, double scale = 1.0) {
  if (!x) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", *x * scale);
  return buf;
}

enum class Section { Depth, Scan };

template <typename Job>
int run_parallel(const std::vector<std::string>& paths, Section needed, Job job) {
  // Configs are loaded and validated up front so no simulation starts on a bad suite.
  std::vector<ScenarioConfig> configs;
  for (const auto& path : paths) {
    try {
      configs.push_back(load_config(path));
      validate_config(configs.back());
      const bool present = needed == Section::Depth ? configs.back().depth.has_value() : configs.back().scan.has_value();
      if (!present) {
        throw Error(ErrorCode::ConfigError, needed == Section::Depth ? "scenario has no [depth] section" : "scenario has no [scan] section");
      }
    } catch (const Error& e) {
      std::cerr << path << ": " << e.what() << '\n';
      return kConfigError;
    }
  }

  std::vector<std::future<Outcome>> futures;
  for (const auto& cfg : configs) {
    futures.push_back(std::async(std::launch::async, [&cfg, &job] {
      try {
        return Outcome{kOk, job(cfg)};
      } catch (const Error& e) {
        return Outcome{exit_code_for(e.code()), cfg.name + ": " + e.what()};
      } catch (const std::exception& e) {
        return Outcome{kNumericalError, cfg.name + ": " + e.what()};
      }
    }));
  }
  int worst = kOk;
  for (auto& f : futures) {
    const Outcome o = f.get();
    (o.code == kOk ? std::cout : std::cerr) << o.message << '\n';
    if (o.code != kOk && worst == kOk) worst = o.code;
  }
  return worst;
}

std::string depth_job(const ScenarioConfig& cfg) {
  if (!cfg.depth) throw Error(ErrorCode::ConfigError, "scenario has no [depth] section");
  const DepthResult result = run_depth_pipeline(*cfg.depth);
  const fs::path dir = cfg.output_dir / cfg.name;
  export_depth(dir, cfg.name, result);
  std::ostringstream msg;
  msg << cfg.name << ": disparity MAE " << fmt_opt(result.report.disparity_mae) << " px, valid "
      << fmt_opt(result.report.valid_fraction, 100.0) << " %, mean true disparity "
      << fmt_opt(result.report.mean_true_disparity) << " px";
  if (result.mesh) msg << ", mesh " << result.mesh->vertices().size() << " v / " << result.mesh->faces().size() << " f";
  for (const auto& row : result.perturbation) {
    msg << "\n  alpha " << row.alpha << " beta " << row.beta << ": MAE " << fmt_opt(row.mae) << " px, valid "
        << fmt_opt(row.valid_fraction, 100.0) << " %";
  }
  msg << "\n  -> " << dir.string() << " (" << fmt_opt(result.report.wall_clock_s) << " s)";
  return msg.str();
}

std::string scan_job(const ScenarioConfig& cfg) {
  const ScanResult result = run_scan_scenario(cfg);
  const fs::path dir = cfg.output_dir / cfg.name;
  export_scan(dir, cfg.name, result);
  const RunReport& r = result.report;
  std::ostringstream msg;
  msg << cfg.name << ": RMSE_d " << fmt_opt(r.rmse_d, 1e3) << " mm, RMSE_u " << fmt_opt(r.rmse_u, 1e3)
      << " mm, RMSE_v " << fmt_opt(r.rmse_v, 1e3) << " mm, max|e_d| " << fmt_opt(r.max_abs_e_d, 1e3)
      << " mm, passivity violations " << r.passivity_violations << "/" << r.passivity_checks
      << "\n  -> " << dir.string() << " (" << fmt_opt(r.wall_clock_s) << " s)";
  return msg.str();
}

int param_command(const std::string& mesh_path, const std::string& out_path) {
  try {
    const auto mesh = foliascan::load_mesh(mesh_path);
    const auto param = foliascan::parametrize_disk(mesh);
    if (out_path.empty()) {
      foliascan::write_param_csv(std::cout, param);
    } else {
      std::ofstream out(out_path);
      if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + out_path);
      foliascan::write_param_csv(out, param);
      std::cerr << mesh.vertices().size() << " vertices, " << param.boundary_loop.size() << " on the boundary, "
                << foliascan::count_flipped_faces(mesh, param) << " flipped faces -> " << out_path << '\n';
    }
    return kOk;
  } catch (const Error& e) {
    std::cerr << mesh_path << ": " << e.what() << '\n';
    // A mesh that is not a valid disk is bad input, not a numerical failure.
    return e.code() == ErrorCode::SolverFailure ? kNumericalError
           : e.code() == ErrorCode::IoFailure   ? kIoError
                                                : kConfigError;
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Recomputes the tracking metrics from step_log.csv and checks them against summary.json.
int report_command(const fs::path& dir) {
  try {
    const RunReport summary = report_from_json(read_text(dir / "summary.json"));
    std::cout << "summary: " << (dir / "summary.json").string() << '\n';
    if (!summary.rmse_d) {
      std::cout << "disparity MAE " << fmt_opt(summary.disparity_mae) << " px, valid "
                << fmt_opt(summary.valid_fraction, 100.0) << " %\n";
      return kOk;
    }
    std::ifstream log_in(dir / "step_log.csv");
    if (!log_in) throw Error(ErrorCode::IoFailure, "cannot read " + (dir / "step_log.csv").string());
    const auto log = read_step_log_csv(log_in);
    const RunReport again = compute_tracking_report(log, summary.excluded);
    bool ok = true;
    auto compare = [&](const char* name, const std::optional<double>& a, const std::optional<double>& b) {
      const double diff = std::abs(a.value_or(NAN) - b.value_or(NAN));
      const bool same = diff <= 1e-12;
      ok = ok && same;
      std::cout << name << ": summary " << fmt_opt(a, 1e3) << " mm, recomputed " << fmt_opt(b, 1e3) << " mm "
                << (same ? "[match]" : "[MISMATCH]") << '\n';
    };
    compare("RMSE_d", summary.rmse_d, again.rmse_d);
    compare("RMSE_u", summary.rmse_u, again.rmse_u);
    compare("RMSE_v", summary.rmse_v, again.rmse_v);
    compare("max|e_d|", summary.max_abs_e_d, again.max_abs_e_d);
    std::cout << "passivity violations: " << summary.passivity_violations << "/" << summary.passivity_checks << '\n';
    return ok ? kOk : kNumericalError;
  } catch (const Error& e) {
    std::cerr << dir.string() << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Foliation-based ultrasound scan simulator"};
  app.require_subcommand(1);

  std::vector<std::string> depth_cfgs;
  auto* depth = app.add_subcommand("depth-sim", "Run structured-light depth scenarios");
  depth->add_option("configs", depth_cfgs, "Scenario TOML files")->required()->check(CLI::ExistingFile);

  std::vector<std::string> scan_cfgs;
  auto* scan = app.add_subcommand("scan-sim", "Run impedance-controlled scan scenarios");
  scan->add_option("configs", scan_cfgs, "Scenario TOML files")->required()->check(CLI::ExistingFile);

  std::string mesh_path;
  std::string param_out;
  auto* param = app.add_subcommand("param", "Parametrize a disk-topology mesh onto the unit disk");
  param->add_option("mesh", mesh_path, "Mesh file (.off or .ply)")->required()->check(CLI::ExistingFile);
  param->add_option("-o,--output", param_out, "CSV output (default: stdout)");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Check a scenario output directory");
  report->add_option("dir", report_dir, "Output directory of one scenario")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*depth) return run_parallel(depth_cfgs, Section::Depth, depth_job);
  if (*scan) return run_parallel(scan_cfgs, Section::Scan, scan_job);
  if (*param) return param_command(mesh_path, param_out);
  return report_command(report_dir);
}
