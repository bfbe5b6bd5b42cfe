#include "foliascan/export.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "foliascan/error.hpp"
#include "foliascan/mesh_io.hpp"
#include "foliascan/raster_io.hpp"

namespace foliascan::harness {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kStepHeader = "t,u,v,d,e_u,e_v,e_d,f_n,V";

// Shortest representation that parses back to the same double.
std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::IoFailure, "malformed number '" + std::string(s) + "'");
  }
  return x;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path, ExportedFiles& files) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
  files.paths.push_back(path);
}

template <typename Writer>
void write_file(const fs::path& path, ExportedFiles& files, Writer&& writer, bool binary = false) {
  auto out = open_out(path, binary ? std::ios::out | std::ios::binary : std::ios::out);
  writer(out);
  finish(out, path, files);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, "cannot create directory " + dir.string());
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

struct Panel {
  const char* channel;
  const char* label;
  double StepRecord::*field;
};

}  // namespace

void write_step_log_csv(std::ostream& out, std::span<const StepRecord> log) {
  out << kStepHeader << '\n';
  for (const StepRecord& r : log) {
    out << fmt(r.t) << ',' << fmt(r.u) << ',' << fmt(r.v) << ',' << fmt(r.d) << ',' << fmt(r.e_u) << ','
        << fmt(r.e_v) << ',' << fmt(r.e_d) << ',' << fmt(r.f_n) << ',' << fmt(r.V) << '\n';
  }
}

std::vector<StepRecord> read_step_log_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kStepHeader) throw Error(ErrorCode::IoFailure, "missing step log header");
  std::vector<StepRecord> log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 9> v{};
    std::size_t pos = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::size_t comma = line.find(',', pos);
      const bool last = i + 1 == v.size();
      if (last != (comma == std::string::npos)) throw Error(ErrorCode::IoFailure, "step log row needs 9 fields");
      v[i] = parse_double(std::string_view(line).substr(pos, last ? std::string::npos : comma - pos));
      pos = comma + 1;
    }
    log.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return log;
}

void write_tracking_svg(std::ostream& out, std::span<const StepRecord> log, const planning::Trajectory& trajectory) {
  static constexpr Panel panels[] = {
      {"e_u", "e_u [mm]", &StepRecord::e_u},
      {"e_v", "e_v [mm]", &StepRecord::e_v},
      {"e_d", "e_d [mm]", &StepRecord::e_d},
      {"d", "d [mm]", &StepRecord::d},
  };
  constexpr double width = 900.0, panel_h = 160.0, left = 70.0, right = 20.0, gap = 30.0;
  const double plot_w = width - left - right;
  const double height = gap + std::size(panels) * (panel_h + gap);

  const double t0 = log.empty() ? 0.0 : log.front().t;
  const double t1 = log.empty() ? 1.0 : std::max(log.back().t, t0 + 1e-9);
  auto sx = [&](double t) { return left + plot_w * (t - t0) / (t1 - t0); };

  // Thin the polylines to at most ~2000 vertices each.
  const std::size_t stride = std::max<std::size_t>(1, log.size() / 2000);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << std::setprecision(6);
  for (std::size_t k = 0; k < std::size(panels); ++k) {
    const Panel& p = panels[k];
    const double top = gap + k * (panel_h + gap);
    double lo = 0.0, hi = 0.0;
    for (const StepRecord& r : log) {
      lo = std::min(lo, r.*p.field * 1e3);
      hi = std::max(hi, r.*p.field * 1e3);
    }
    if (hi - lo < 1e-6) { lo -= 1.0; hi += 1.0; }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto sy = [&](double y) { return top + panel_h * (hi - y) / (hi - lo); };

    out << "<g id=\"panel-" << p.channel << "\">\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << panel_h
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"4\" y=\"" << top + 12 << "\">" << p.label << "</text>\n";
    out << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << hi << "</text>\n";
    out << "<text x=\"" << left - 4 << "\" y=\"" << top + panel_h << "\" text-anchor=\"end\">" << lo << "</text>\n";
    if (lo < 0.0 && hi > 0.0) {
      out << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << sy(0.0) << "\" y2=\"" << sy(0.0)
          << "\" stroke=\"#ccc\"/>\n";
    }

    // sgn(d_des) as a shaded step curve scaled to the panel.
    out << "<polyline class=\"sgn\" fill=\"none\" stroke=\"#f4a261\" stroke-dasharray=\"4 3\" points=\"";
    const double mid = top + 0.5 * panel_h;
    for (std::size_t i = 0; i < log.size(); i += stride) {
      const int s = trajectory.knots.empty() ? 0 : planning::sign_of_leaf(trajectory, log[i].t);
      out << sx(log[i].t) << ',' << mid - 0.4 * panel_h * s << ' ';
    }
    out << "\"/>\n";

    out << "<polyline class=\"channel\" data-channel=\"" << p.channel
        << "\" fill=\"none\" stroke=\"#1d3557\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < log.size(); i += stride) {
      out << sx(log[i].t) << ',' << sy(log[i].*p.field * 1e3) << ' ';
    }
    out << "\"/>\n</g>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 6 << "\" text-anchor=\"middle\">t [s] ("
      << t0 << " .. " << t1 << ")</text>\n";
  out << "</svg>\n";
}

std::string report_to_json(const RunReport& report, const std::string& name) {
  json excluded = json::array();
  for (const auto& w : report.excluded) excluded.push_back({w.begin, w.end});
  const json j = {
      {"name", name},
      {"rmse_d", optional_number(report.rmse_d)},
      {"rmse_u", optional_number(report.rmse_u)},
      {"rmse_v", optional_number(report.rmse_v)},
      {"max_abs_e_d", optional_number(report.max_abs_e_d)},
      {"tracked_samples", report.tracked_samples},
      {"passivity_violations", report.passivity_violations},
      {"passivity_checks", report.passivity_checks},
      {"first_violation_t", optional_number(report.first_violation_t)},
      {"excluded", excluded},
      {"self_test_uv_error", optional_number(report.self_test_uv_error)},
      {"self_test_d_error", optional_number(report.self_test_d_error)},
      {"disparity_mae", optional_number(report.disparity_mae)},
      {"valid_fraction", optional_number(report.valid_fraction)},
      {"mean_true_disparity", optional_number(report.mean_true_disparity)},
      {"wall_clock_s", report.wall_clock_s},
  };
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunReport r;
    r.rmse_d = read_optional(j, "rmse_d");
    r.rmse_u = read_optional(j, "rmse_u");
    r.rmse_v = read_optional(j, "rmse_v");
    r.max_abs_e_d = read_optional(j, "max_abs_e_d");
    r.tracked_samples = j.at("tracked_samples").get<std::size_t>();
    r.passivity_violations = j.at("passivity_violations").get<std::size_t>();
    r.passivity_checks = j.at("passivity_checks").get<std::size_t>();
    r.first_violation_t = read_optional(j, "first_violation_t");
    for (const auto& w : j.at("excluded")) r.excluded.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    r.self_test_uv_error = read_optional(j, "self_test_uv_error");
    r.self_test_d_error = read_optional(j, "self_test_d_error");
    r.disparity_mae = read_optional(j, "disparity_mae");
    r.valid_fraction = read_optional(j, "valid_fraction");
    r.mean_true_disparity = read_optional(j, "mean_true_disparity");
    r.wall_clock_s = j.at("wall_clock_s").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("malformed summary: ") + e.what());
  }
}

ExportedFiles export_scan(const fs::path& dir, const std::string& name, const ScanResult& result) {
  ensure_dir(dir);
  ExportedFiles files;
  write_file(dir / "step_log.csv", files, [&](std::ostream& o) { write_step_log_csv(o, result.log); });
  write_file(dir / "setpoint.csv", files, [&](std::ostream& o) { planning::write_trajectory_csv(o, result.trajectory); });
  write_file(dir / "tracking.svg", files, [&](std::ostream& o) { write_tracking_svg(o, result.log, result.trajectory); });
  write_file(dir / "summary.json", files, [&](std::ostream& o) { o << report_to_json(result.report, name); });
  return files;
}

ExportedFiles export_depth(const fs::path& dir, const std::string& name, const DepthResult& result) {
  ensure_dir(dir);
  ExportedFiles files;
  const auto& cap = result.capture;
  write_file(dir / "left_white.pgm", files, [&](std::ostream& o) { io::write_pgm(o, cap.left.white_ref); }, true);
  write_file(dir / "right_white.pgm", files, [&](std::ostream& o) { io::write_pgm(o, cap.right.white_ref); }, true);
  for (std::size_t b = 0; b < cap.left.bit_planes.size(); ++b) {
    std::ostringstream stem;
    stem << "bit" << std::setw(2) << std::setfill('0') << b;
    write_file(dir / ("left_" + stem.str() + ".pgm"), files, [&](std::ostream& o) { io::write_pgm(o, cap.left.bit_planes[b]); }, true);
    write_file(dir / ("right_" + stem.str() + ".pgm"), files, [&](std::ostream& o) { io::write_pgm(o, cap.right.bit_planes[b]); }, true);
  }
  write_file(dir / "disparity.fsr", files, [&](std::ostream& o) { io::write_raster(o, result.disparity); }, true);
  write_file(dir / "disparity_truth.fsr", files, [&](std::ostream& o) { io::write_raster(o, result.truth); }, true);
  write_file(dir / "depth.fsr", files, [&](std::ostream& o) { io::write_raster(o, result.depth); }, true);
  write_file(dir / "disparity.csv", files, [&](std::ostream& o) { io::write_scalar_csv(o, result.disparity, "disparity"); });
  write_file(dir / "depth.csv", files, [&](std::ostream& o) { io::write_scalar_csv(o, result.depth, "depth"); });
  if (result.mesh) write_file(dir / "mesh.ply", files, [&](std::ostream& o) { write_ply(o, *result.mesh); });
  if (!result.perturbation.empty()) {
    write_file(dir / "perturbation.csv", files, [&](std::ostream& o) {
      o << "alpha,beta,mae,valid_fraction\n";
      for (const auto& row : result.perturbation) {
        o << fmt(row.alpha) << ',' << fmt(row.beta) << ',' << fmt(row.mae) << ',' << fmt(row.valid_fraction) << '\n';
      }
    });
  }
  write_file(dir / "summary.json", files, [&](std::ostream& o) { o << report_to_json(result.report, name); });
  return files;
}

}  // namespace foliascan::harness
