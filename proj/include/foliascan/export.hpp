#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "foliascan/harness.hpp"

namespace foliascan::harness {

/// CSV `t,u,v,d,e_u,e_v,e_d,f_n,V` with round-trip precision. An empty log
/// produces the header line only.
void write_step_log_csv(std::ostream& out, std::span<const StepRecord> log);
std::vector<StepRecord> read_step_log_csv(std::istream& in);

/// SVG with one polyline per logged channel (e_u, e_v, e_d, d) against t and
/// a step curve of sgn(d_des(t)) underneath.
void write_tracking_svg(std::ostream& out, std::span<const StepRecord> log, const planning::Trajectory& trajectory);

/// Summary JSON. Absent optional metrics are written as null.
std::string report_to_json(const RunReport& report, const std::string& name);
RunReport report_from_json(const std::string& text);

struct ExportedFiles {
  std::vector<std::filesystem::path> paths;
};

/// Writes step_log.csv, setpoint.csv, tracking.svg and summary.json into `dir`.
/// Throws IoFailure.
ExportedFiles export_scan(const std::filesystem::path& dir, const std::string& name, const ScanResult& result);

/// Writes PGM captures, disparity/depth rasters and CSVs, mesh.ply,
/// perturbation.csv and summary.json into `dir`. Throws IoFailure.
ExportedFiles export_depth(const std::filesystem::path& dir, const std::string& name, const DepthResult& result);

}  // namespace foliascan::harness
