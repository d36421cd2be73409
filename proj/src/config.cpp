#include "biphoton/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <set>

namespace biphoton {

namespace {

const Json& section(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_object())
    throw ConfigError(where + ": missing section '" + key + "'");
  return j.at(key);
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!key.empty() && key.front() == '_') continue;
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T required(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": wrong type for '" + key + "'");
  }
}

template <class T>
T optional_value(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return required<T>(j, key, where);
}

double wavevector(double wavelength_m) {
  return 2.0 * std::numbers::pi / wavelength_m;
}

OpticalTrain parse_optics(const Json& j) {
  const std::string where = "optics";
  check_keys(j,
             {"pump_wavelength_m", "pump_waist_m", "pump_divergence_rad", "signal_wavelength_m",
              "signal_divergence_rad", "crystal_length_m", "crystal_index",
              "nearfield_magnification", "momentum_calibration_m",
              "fiber_mode_field_diameter_m"},
             where);
  OpticalTrain t;
  const double pump_wl = required<double>(j, "pump_wavelength_m", where);
  const double signal_wl = required<double>(j, "signal_wavelength_m", where);
  if (!(pump_wl > 0.0) || !(signal_wl > 0.0)) throw ConfigError("optics: wavelengths must be positive");
  t.pump_wavevector_per_m = wavevector(pump_wl);
  t.signal_wavevector_per_m = wavevector(signal_wl);
  t.pump_waist_m = required<double>(j, "pump_waist_m", where);
  t.pump_divergence_rad = required<double>(j, "pump_divergence_rad", where);
  t.signal_divergence_rad = required<double>(j, "signal_divergence_rad", where);
  t.crystal_length_m = required<double>(j, "crystal_length_m", where);
  t.crystal_index = required<double>(j, "crystal_index", where);
  t.nearfield_magnification = required<double>(j, "nearfield_magnification", where);
  t.momentum_calibration_m = required<double>(j, "momentum_calibration_m", where);
  t.fiber_mode_field_diameter_m = required<double>(j, "fiber_mode_field_diameter_m", where);
  try {
    t.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("optics: ") + e.what());
  }
  return t;
}

CorrelationModel parse_source(const Json& j, Plane plane, Axis axis, const std::string& where) {
  const std::string unit = plane == Plane::NearField ? "_m" : "_per_m";
  const std::string c1 = "center_1" + unit, c2 = "center_2" + unit;
  const std::string s1 = "sigma_1" + unit, s2 = "sigma_2" + unit;
  check_keys(j, {c1, c2, s1, s2, "rho"}, where);
  try {
    return {plane, axis, optional_value<double>(j, c1.c_str(), 0.0, where),
            optional_value<double>(j, c2.c_str(), 0.0, where),
            covariance_from_sigmas(required<double>(j, s1.c_str(), where),
                                   required<double>(j, s2.c_str(), where),
                                   required<double>(j, "rho", where))};
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

DetectorSpec parse_detector(const Json& j, double mfd, double accidental, const std::string& where) {
  check_keys(j, {"peak_coincidence_rate_hz", "peak_singles_rate_hz", "dark_rate_hz"}, where);
  DetectorSpec d;
  d.fiber_mode_field_diameter_m = mfd;
  d.peak_coincidence_rate_hz = required<double>(j, "peak_coincidence_rate_hz", where);
  d.peak_singles_rate_hz = required<double>(j, "peak_singles_rate_hz", where);
  d.dark_rate_hz = optional_value<double>(j, "dark_rate_hz", 0.0, where);
  d.accidental_rate_hz = accidental;
  try {
    d.validate();
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return d;
}

PlaneScanSettings parse_scan(const Json& j, const std::string& where) {
  check_keys(j,
             {"protocol", "points", "window_m", "orth_points", "orth_window_m", "passive_count",
              "passive_positions_m", "dwell_s", "drift_sigma_m"},
             where);
  PlaneScanSettings s;
  try {
    s.protocol = parse_protocol(required<std::string>(j, "protocol", where));
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  s.points = required<int>(j, "points", where);
  s.window_m = required<double>(j, "window_m", where);
  s.orth_points = optional_value<int>(j, "orth_points", s.points, where);
  s.orth_window_m = optional_value<double>(j, "orth_window_m", s.window_m, where);
  s.dwell_s = required<double>(j, "dwell_s", where);
  s.drift_sigma_m = optional_value<double>(j, "drift_sigma_m", 0.0, where);
  const bool has_list = j.contains("passive_positions_m");
  const bool has_count = j.contains("passive_count");
  if (has_list == has_count)
    throw ConfigError(where + ": give exactly one of 'passive_positions_m' and 'passive_count'");
  if (has_list) {
    s.passive_positions_m = required<std::vector<double>>(j, "passive_positions_m", where);
  } else {
    const int n = required<int>(j, "passive_count", where);
    if (n < 1) throw ConfigError(where + ": passive_count must be >= 1");
    s.passive_positions_m = centered_positions(n, 0.5 * s.window_m);
  }
  if (s.points < 2 || !(s.window_m > 0.0) || !(s.dwell_s > 0.0) || s.drift_sigma_m < 0.0)
    throw ConfigError(where + ": invalid scan geometry");
  if (s.protocol == Protocol::FullGrid && (s.orth_points < 2 || !(s.orth_window_m > 0.0)))
    throw ConfigError(where + ": invalid orthogonal grid");
  return s;
}

}  // namespace

ScanPlan PlaneScanSettings::plan(Plane plane, Axis axis) const {
  ScanPlan p;
  p.plane = plane;
  p.axis = axis;
  p.protocol = protocol;
  p.grid.points_axis = points;
  p.grid.spacing_axis_m = window_m / (points - 1);
  p.grid.points_orth = protocol == Protocol::FullGrid ? orth_points : 1;
  p.grid.spacing_orth_m = protocol == Protocol::FullGrid ? orth_window_m / (orth_points - 1) : 1e-6;
  p.passive_positions_m = passive_positions_m;
  p.dwell_s = dwell_s;
  p.drift_sigma_m = drift_sigma_m;
  p.validate();
  return p;
}

const CorrelationModel& ExperimentConfig::source(Plane plane, Axis axis) const {
  const auto it = sources.find({plane, axis});
  if (it == sources.end())
    throw ConfigError("config has no source model for " + std::string(to_string(plane)) + "_" +
                      std::string(to_string(axis)));
  return it->second;
}

bool ExperimentConfig::has_source(Plane plane, Axis axis) const {
  return sources.contains({plane, axis});
}

const DetectorSpec& ExperimentConfig::detector(Plane plane) const {
  const auto it = detectors.find(plane);
  if (it == detectors.end())
    throw ConfigError("config has no detector section for " + std::string(to_string(plane)));
  return it->second;
}

const PlaneScanSettings& ExperimentConfig::scan(Plane plane) const {
  const auto it = scans.find(plane);
  if (it == scans.end())
    throw ConfigError("config has no scan section for " + std::string(to_string(plane)));
  return it->second;
}

bool ExperimentConfig::writes(const std::string& format) const {
  return std::find(output_formats.begin(), output_formats.end(), format) != output_formats.end();
}

ExperimentConfig parse_config(const Json& j) {
  check_keys(j, {"seed", "optics", "source", "detector", "scan", "output"}, "config");
  ExperimentConfig cfg;
  cfg.seed = optional_value<std::uint64_t>(j, "seed", 1, "config");
  cfg.optics = parse_optics(section(j, "optics", "config"));

  const Json& src = section(j, "source", "config");
  check_keys(src, {"near_x", "near_y", "far_x", "far_y"}, "source");
  for (Plane plane : {Plane::NearField, Plane::FarField})
    for (Axis axis : {Axis::X, Axis::Y}) {
      const std::string key = std::string(to_string(plane)) + "_" + std::string(to_string(axis));
      if (src.contains(key))
        cfg.sources.emplace(std::pair{plane, axis},
                            parse_source(src.at(key), plane, axis, "source." + key));
    }
  if (cfg.sources.empty()) throw ConfigError("source: no models given");

  const Json& det = section(j, "detector", "config");
  check_keys(det, {"near", "far", "accidental_rate_hz", "apply_probe_blur"}, "detector");
  const double accidental = optional_value<double>(det, "accidental_rate_hz", 0.0, "detector");
  cfg.apply_probe_blur = optional_value<bool>(det, "apply_probe_blur", false, "detector");
  for (Plane plane : {Plane::NearField, Plane::FarField}) {
    const std::string key(to_string(plane));
    if (det.contains(key))
      cfg.detectors.emplace(plane,
                            parse_detector(det.at(key), cfg.optics.fiber_mode_field_diameter_m,
                                           accidental, "detector." + key));
  }

  const Json& scan = section(j, "scan", "config");
  check_keys(scan, {"near", "far"}, "scan");
  for (Plane plane : {Plane::NearField, Plane::FarField}) {
    const std::string key(to_string(plane));
    if (scan.contains(key)) cfg.scans.emplace(plane, parse_scan(scan.at(key), "scan." + key));
  }

  if (j.contains("output")) {
    const Json& out = j.at("output");
    check_keys(out, {"directory", "formats"}, "output");
    cfg.output_directory = optional_value<std::string>(out, "directory", "out", "output");
    cfg.output_formats =
        optional_value<std::vector<std::string>>(out, "formats", cfg.output_formats, "output");
    for (const auto& f : cfg.output_formats)
      if (f != "csv" && f != "json") throw ConfigError("output: unknown format '" + f + "'");
  }
  return cfg;
}

std::string resolve_config_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  if (const char* dir = std::getenv("BIPHOTON_CONFIG_DIR")) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string resolved = resolve_config_path(path);
  Json j;
  try {
    j = read_json_file(resolved);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(j);
}

}  // namespace biphoton
