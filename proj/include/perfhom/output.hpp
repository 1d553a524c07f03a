#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "perfhom/experiment.hpp"
#include "perfhom/path_record.hpp"

namespace perfhom {

/// Shortest decimal that round-trips the 64-bit float.
std::string format_shortest(double v);

/// FNV-1a 64-bit checksum, hex-encoded. Used in manifests to pin output bytes.
std::string fnv1a_hex(std::span<const char> bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

/// samples.csv: epsilon,model,path_id,functional_id,sample_time,value.
/// Mode functionals appear once per sample time; the space-time L2 functional
/// is a per-path scalar reported at the final sample time. Failed paths emit
/// no sample rows (they appear in the report's failure counts).
std::string samples_csv(const SweepResult& result, const ExperimentPlan& plan);

/// energy.csv: epsilon,model,path_id,x0_final,x1_integral,diagnostic,failed.
std::string energy_csv(const SweepResult& result);

/// Full comparison report, including tensor provenance.
std::string report_json(const SweepResult& result, const ExperimentPlan& plan);

/// cell subcommand CSV: rho,m,theta,lambda,a11,a12,a21,a22,residual1,residual2,iters1,iters2.
std::string cell_csv(const HomogenizedTensor& tensor);

/// Log-log SVG chart of Wasserstein distance against epsilon, one polyline per
/// functional.
std::string wasserstein_svg(const ComparisonReport& report);

/// Run manifest: resolved config text, artifact version, RNG algorithm id,
/// tensor provenance and per-file checksums of everything written so far.
std::string manifest_json(const std::string& resolved_config,
                          const std::vector<std::pair<std::string, std::string>>& file_checksums,
                          const HomogenizedTensor* tensor);

/// Raw little-endian float64 dump of a full-grid field plus a text sidecar
/// (<path>.meta) with dimensions, spacing and time.
void write_field_dump(const std::string& path, std::span<const double> field, int intervals,
                      double spacing, double time);

/// Headered CSV (x,y,value) of a full-grid field.
std::string field_csv(std::span<const double> field, int intervals, double spacing);

inline const char* artifact_version() { return "perfhom 0.1.0"; }

}  // namespace perfhom
