#pragma once

#include "tvmcf/flow.hpp"
#include "tvmcf/stability.hpp"
#include "tvmcf/suite.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvmcf::io {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModeSpec {
  int component = 0;
  std::array<int, 2> k{0, 0};
  double amplitude = 0.0;
  double phase = 0.0;
};

struct InitialSpec {
  std::vector<ModeSpec> modes;
  std::uint64_t seed = 1;
  int band_limit = 3;
  /// H^3(dF) norm of the random part; zero disables it.
  double amplitude = 0.0;
  /// Graph of F + translation is added to the modes and the random part.
  Vec3 translation = Vec3::Zero();
};

struct OutputSpec {
  std::string csv_path = "timeseries.csv";
  /// Column name -> SVG file.
  std::vector<std::pair<std::string, std::string>> svg_paths;
  /// Written after every record; "{step}" in the name is replaced by the step index.
  std::string checkpoint_path;
  std::string report_path = "report.json";
  std::string sweep_csv_path = "sweep.csv";
};

struct Tolerances {
  double lyapunov_increase = 1e-10;
  double cross_path = 1e-7;
  double fd_rel = 1e-4;
  double fd_abs = 1e-10;
  double fd_ratio_lo = 3.5;
  double fd_ratio_hi = 4.5;
  double dt_fd = 1e-5;
  double linearization_order = 0.9;
  double decay_fraction = 0.95;
};

struct SweepSpec {
  std::string parameter;
  double from = 0.0;
  double to = 0.0;
  int steps = 0;
};

struct StabilitySpec {
  int mode_cutoff = 4;
  int certify_samples = 20;
  std::optional<SweepSpec> sweep;
};

struct VerifySpec {
  /// Surfaces the suite runs on; empty means the configured surface.
  std::vector<ReferenceSurface> surfaces;
  int n_per_axis = 64;
  int samples = 2;
  int interpolation_samples = 200;
  std::uint64_t seed = 1;
};

struct RunConfig {
  json document;
  json surface_document;
  ReferenceSurface surface = ReferenceSurface::circle(0.5, 0.5, 0.2);
  int n_per_axis = 64;
  InitialSpec initial;
  FlowOptions flow;
  OutputSpec outputs;
  Tolerances tolerances;
  StabilitySpec stability;
  VerifySpec verify;
};

/// Parses and validates a configuration; syntax errors report line and column, unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig config_from_json(const json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// {kind, params} -> reference surface; ambient dimensions other than 2 and 3 are rejected.
ReferenceSurface surface_from_json(const json& j);
json surface_to_json(const ReferenceSurface& f);

FieldBundle initial_data(const RunConfig& cfg);

/// "%.17g"; non-finite values are written as nan/inf.
std::string format_double(double v);

extern const char* const kCsvHeader;
std::string csv_row(const DiagnosticsRecord& r, int ambient_dim);
/// Column value by CSV header name.
double record_column(const DiagnosticsRecord& r, const std::string& column);

struct PlotSeries {
  std::string title;
  std::string y_label;
  std::vector<double> t;
  std::vector<double> y;
  bool log_scale = false;
};
/// Stand-alone SVG line plot with axes and min/max tick labels; log scale drops non-positive samples.
std::string svg_plot(const PlotSeries& s);

struct Checkpoint {
  json config;
  /// t, step, v0 and recorded; psi is rebuilt by checkpoint_state.
  FlowState state;
  std::vector<std::array<int, 2>> shapes;
  std::vector<std::vector<double>> values;
};
void write_checkpoint(const std::filesystem::path& path, const json& config, const FlowState& state);
/// Rebuilds the state on the chart grids of `surface`; throws ConfigError on malformed files.
Checkpoint read_checkpoint(const std::filesystem::path& path);
FlowState checkpoint_state(const Checkpoint& c, const ReferenceSurface& surface);

json to_json(const DecayFit& fit);
json to_json(const DiagnosticsRecord& r, int ambient_dim);
json to_json(const StabilityReport& r);
json to_json(const CheckResult& r);
json to_json(const DerivativeReport& r);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tvmcf::io
