#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "creditgrid/grid.hpp"
#include "creditgrid/metrics.hpp"

namespace creditgrid {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr const char* kManifestFile = "manifest.json";

struct Manifest {
  std::string version = kToolkitVersion;
  std::string config_set_hash;
  std::string command_line;
  std::uint64_t base_seed = 0;
  std::string started_at;  // UTC, ISO 8601
  std::string finished_at;

  bool operator==(const Manifest&) const = default;
};

void to_json(nlohmann::json& j, const Manifest& m);
void from_json(const nlohmann::json& j, Manifest& m);

/// Order-independent hash of the configs' canonical JSON, as 16 hex digits.
std::string config_set_hash(std::span<const GridConfig> configs);

std::string utc_timestamp();
std::string join_command_line(int argc, const char* const* argv);

void write_manifest(const std::string& dir, const Manifest& m);
Manifest read_manifest(const std::string& dir);

/// One row per (group, metric, episode).
inline constexpr const char* kCurvesCsvHeader = "group,metric,episode,value";
void write_curves_csv(std::ostream& out, std::span<const Curve> curves);
std::vector<Curve> read_curves_csv(std::istream& in);

/// Per-episode metric rows, one per episode record.
void write_metric_rows_csv(std::ostream& out, std::span<const MetricRow> rows);

/// Groups are "<label>/<condition>". Differences are taken against the
/// reference label's group in the same condition when it exists.
inline constexpr const char* kSummaryCsvHeader = "group,pmax,poptimal,pmax_diff,poptimal_diff";
void write_summary_csv(std::ostream& out, std::span<const Curve> curves,
                       const std::optional<std::string>& reference_label);

/// Splits "label/condition"; a group without a slash has an empty condition.
std::pair<std::string, std::string> split_group(const std::string& group);

struct PlotSeries {
  std::string label;
  std::vector<double> values;
};

/// Line plot over 1-based episodes with y in [0,1] (grows if values exceed it).
std::string render_line_plot(const std::string& title, std::span<const PlotSeries> series);

/// One SVG per metric x condition, overlaying every label. Returns written paths.
std::vector<std::string> emit_plots(std::span<const Curve> curves, const std::string& out_dir);

}  // namespace creditgrid
