#pragma once

// Forward model of the scanning-fiber coincidence experiment: expected
// singles and coincidence rates at a pair of probe positions, and Poisson
// count generation over line scans and full 2D grids.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biphoton/correlation_model.hpp"
#include "biphoton/kernels.hpp"
#include "biphoton/optics_geometry.hpp"

namespace biphoton {

enum class Protocol { LineScan, FullGrid };

std::string_view to_string(Protocol protocol);
Protocol parse_protocol(std::string_view text);

/// Active-probe grid in the measurement plane, centred on the optical axis.
struct ScanGrid {
  int points_axis = 2;
  double spacing_axis_m = 1e-6;
  /// Orthogonal extent; only used by FullGrid.
  int points_orth = 1;
  double spacing_orth_m = 1e-6;

  std::vector<double> axis_positions() const;
  std::vector<double> orth_positions() const;
};

struct ScanPlan {
  Plane plane = Plane::NearField;
  Protocol protocol = Protocol::LineScan;
  Axis axis = Axis::X;
  ScanGrid grid;
  std::vector<double> passive_positions_m;
  double dwell_s = 1.0;
  /// Standard deviation of the beam-pointing random-walk step between
  /// consecutive passive positions (measurement plane). Zero disables drift.
  double drift_sigma_m = 0.0;

  void validate() const;
  std::size_t point_count() const;
};

/// Evenly spaced passive positions spanning [-half_span, +half_span].
std::vector<double> centered_positions(int count, double half_span_m);

struct DetectorSpec {
  double fiber_mode_field_diameter_m = 0.0;
  double peak_coincidence_rate_hz = 0.0;
  double peak_singles_rate_hz = 0.0;
  double dark_rate_hz = 0.0;
  /// Flat accidental-coincidence floor; real data shows none, default off.
  double accidental_rate_hz = 0.0;

  void validate() const;
};

struct ScanPoint {
  double active_x = 0.0;
  double active_y = 0.0;
  double passive = 0.0;
  std::int64_t singles_active = 0;
  std::int64_t singles_passive = 0;
  std::int64_t coincidences = 0;

  double active_axis(Axis axis) const { return axis == Axis::X ? active_x : active_y; }
  double active_orth(Axis axis) const { return axis == Axis::X ? active_y : active_x; }
};

struct ScanRecord {
  ScanPlan plan;
  std::vector<ScanPoint> points;
  std::uint64_t seed = 0;
  std::optional<std::string> model_tag;

  /// Throws DomainError on negative counts or coincidences above singles.
  void validate() const;
  std::int64_t total_coincidences() const;
  std::int64_t max_coincidences() const;
};

/// Model convolved with the Gaussian probe response of both fibers: each
/// variance grows by sigma_blur^2, the covariance is untouched.
CorrelationModel blurred_model(const CorrelationModel& model, const DetectorSpec& det,
                               const OpticalTrain& train);

/// Rates for a model in its own units (crystal metres or p/hbar); the active
/// probe samples mode 1 and the passive probe mode 2.
kernels::Rates expected_rates(const CorrelationModel& model, const DetectorSpec& det,
                              double active_pos, double passive_pos);

/// Builds the measurement-plane rate kernel for a model given in crystal or
/// momentum units.
kernels::RateKernel make_rate_kernel(const CorrelationModel& model,
                                     const std::optional<CorrelationModel>& orthogonal,
                                     const DetectorSpec& det, const OpticalTrain& train);

struct SimulationOptions {
  /// Convolve the source with the probe response before sampling. Off when
  /// the source already describes the distribution seen through the probes.
  bool apply_probe_blur = false;
  /// Model of the other transverse axis for FullGrid; defaults to the scan model.
  std::optional<CorrelationModel> orthogonal;
};

/// Probe positions of a plan in acquisition order (passive outer, active inner).
std::vector<kernels::ProbePosition> plan_positions(const ScanPlan& plan);

/// Pointing-drift offsets per passive position, all zero when drift is off.
std::vector<double> drift_offsets(const ScanPlan& plan, std::uint64_t seed);

/// Expected rates for each point of the plan (no noise, no drift).
std::vector<kernels::Rates> expected_plan_rates(const ScanPlan& plan, const CorrelationModel& model,
                                                const DetectorSpec& det, const OpticalTrain& train,
                                                const SimulationOptions& options = {});

ScanRecord run_scan(const ScanPlan& plan, const CorrelationModel& model, const DetectorSpec& det,
                    const OpticalTrain& train, std::uint64_t seed,
                    const SimulationOptions& options = {});

/// One 2D active-probe map per passive position.
std::vector<ScanRecord> run_full_grid(const ScanPlan& plan, const CorrelationModel& model,
                                      const DetectorSpec& det, const OpticalTrain& train,
                                      std::uint64_t seed, const SimulationOptions& options = {});

/// Count-weighted centroid of a record's coincidences or active singles
/// along the scan axis (measurement plane).
struct Centroid {
  double mean = 0.0;
  double standard_error = 0.0;
  double total = 0.0;
};
Centroid coincidence_centroid(const ScanRecord& record);
Centroid singles_centroid(const ScanRecord& record);

}  // namespace biphoton
