#include "biphoton/optics_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace biphoton {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void OpticalTrain::validate() const {
  require(positive(pump_waist_m), "pump waist must be positive");
  require(positive(pump_wavevector_per_m), "pump wavevector must be positive");
  require(positive(pump_divergence_rad), "pump divergence must be positive");
  require(positive(signal_wavevector_per_m), "signal wavevector must be positive");
  require(positive(signal_divergence_rad), "signal divergence must be positive");
  require(positive(crystal_length_m), "crystal length must be positive");
  require(std::isfinite(crystal_index) && crystal_index >= 1.0, "crystal index must be >= 1");
  require(positive(nearfield_magnification), "near-field magnification must be positive");
  require(positive(momentum_calibration_m), "momentum calibration must be positive");
  require(std::isfinite(fiber_mode_field_diameter_m) && fiber_mode_field_diameter_m >= 0.0,
          "fiber mode field diameter must be nonnegative");
}

std::vector<std::string> OpticalTrain::warnings(double rel_tol) const {
  std::vector<std::string> out;
  const double expected = 0.5 * pump_wavevector_per_m;
  const double dev = std::abs(signal_wavevector_per_m - expected) / expected;
  if (dev > rel_tol) {
    std::ostringstream msg;
    msg << "signal wavevector deviates from k_pump/2 by " << dev * 100.0
        << "% (non-degenerate down-conversion)";
    out.push_back(msg.str());
  }
  return out;
}

double momentum_from_position(double x_meas_m, double k_signal_per_m, double calibration_m) {
  require(calibration_m > 0.0, "momentum calibration must be positive");
  return k_signal_per_m * x_meas_m / calibration_m;
}

double position_from_momentum(double p_per_m, double k_signal_per_m, double calibration_m) {
  require(calibration_m > 0.0, "momentum calibration must be positive");
  require(k_signal_per_m > 0.0, "signal wavevector must be positive");
  return p_per_m * calibration_m / k_signal_per_m;
}

double nearfield_to_crystal(double x_meas_m, double magnification) {
  require(magnification > 0.0, "magnification must be positive");
  return x_meas_m / magnification;
}

double crystal_to_nearfield(double x_crystal_m, double magnification) {
  require(magnification > 0.0, "magnification must be positive");
  return x_crystal_m * magnification;
}

double measurement_to_model_scale(Plane plane, const OpticalTrain& train) {
  if (plane == Plane::NearField) return nearfield_to_crystal(1.0, train.nearfield_magnification);
  return momentum_from_position(1.0, train.signal_wavevector_per_m,
                                train.momentum_calibration_m);
}

double probe_sigma_measurement(const OpticalTrain& train) {
  return train.fiber_mode_field_diameter_m / 4.0;
}

double probe_sigma_model(Plane plane, const OpticalTrain& train) {
  return probe_sigma_measurement(train) * measurement_to_model_scale(plane, train);
}

double PhysicalLimits::binding_dx_diff() const {
  return std::max(dx_diff_min_divergence, dx_diff_min_crystal);
}

PhysicalLimits physical_limits(const OpticalTrain& train) {
  train.validate();
  PhysicalLimits lim;
  lim.dp_sum_min_emission = 1.0 / train.emission_radius_m();
  lim.dp_sum_min_divergence = 0.5 * train.pump_wavevector_per_m * train.pump_divergence_rad;
  lim.dp_sum_min_pump = std::max(lim.dp_sum_min_emission, lim.dp_sum_min_divergence);
  lim.dx_diff_min_divergence = 1.0 / (train.signal_wavevector_per_m * train.signal_divergence_rad);
  lim.dx_diff_min_crystal =
      train.signal_divergence_rad / (2.0 * train.crystal_index) * train.crystal_length_m / 2.0;
  const double dx = lim.binding_dx_diff();
  lim.product_floor = dx * dx * lim.dp_sum_min_pump * lim.dp_sum_min_pump;
  lim.mode_m_squared =
      0.5 * train.emission_radius_m() * train.signal_wavevector_per_m * train.signal_divergence_rad;
  lim.bracket_floor = criterion_bounds(std::max(1.0, lim.mode_m_squared)).lower;
  return lim;
}

FloorComparison product_floor_check(const PhysicalLimits& limits, double measured_product) {
  require(measured_product > 0.0, "measured product must be positive");
  FloorComparison c;
  c.floor = limits.product_floor;
  c.measured = measured_product;
  c.ratio = measured_product / limits.product_floor;
  c.suspicious = measured_product < limits.product_floor;
  return c;
}

CriterionBracket criterion_bounds(double m_squared) {
  require(std::isfinite(m_squared) && m_squared >= 1.0, "M^2 must be >= 1");
  const double two_m2 = 2.0 * m_squared;
  return {1.0 / (two_m2 * two_m2), 1.0};
}

}  // namespace biphoton
