#pragma once

// Experiment configuration: optics, per-plane source models, detectors and
// scan plans. Parsing is strict; keys starting with '_' are comments.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "biphoton/correlation_model.hpp"
#include "biphoton/optics_geometry.hpp"
#include "biphoton/serialization.hpp"
#include "biphoton/simulator.hpp"

namespace biphoton {

struct PlaneScanSettings {
  Protocol protocol = Protocol::LineScan;
  int points = 35;
  double window_m = 20e-6;
  int orth_points = 35;
  double orth_window_m = 20e-6;
  std::vector<double> passive_positions_m;
  double dwell_s = 1.0;
  double drift_sigma_m = 0.0;

  ScanPlan plan(Plane plane, Axis axis) const;
};

struct ExperimentConfig {
  OpticalTrain optics;
  std::map<std::pair<Plane, Axis>, CorrelationModel> sources;
  std::map<Plane, DetectorSpec> detectors;
  std::map<Plane, PlaneScanSettings> scans;
  bool apply_probe_blur = false;
  std::string output_directory = "out";
  std::vector<std::string> output_formats{"csv", "json"};
  std::uint64_t seed = 1;

  const CorrelationModel& source(Plane plane, Axis axis) const;
  const DetectorSpec& detector(Plane plane) const;
  const PlaneScanSettings& scan(Plane plane) const;
  bool has_source(Plane plane, Axis axis) const;
  bool writes(const std::string& format) const;
};

/// Throws ConfigError on unknown keys, missing sections or invalid values.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

/// Resolves a config path, falling back to $BIPHOTON_CONFIG_DIR for bare
/// file names that do not exist relative to the working directory.
std::string resolve_config_path(const std::string& path);

}  // namespace biphoton
