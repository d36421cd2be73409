#pragma once

#include <string>
#include <vector>

#include "biphoton/correlation_model.hpp"

namespace biphoton {

/// Pump, crystal and imaging parameters. Wavevectors in 1/m, lengths in m,
/// angles in rad. The signal/idler emission radius equals the pump waist.
struct OpticalTrain {
  double pump_waist_m = 80e-6;
  double pump_wavevector_per_m = 0.0;
  double pump_divergence_rad = 0.0;
  double signal_wavevector_per_m = 0.0;
  double signal_divergence_rad = 0.0;
  double crystal_length_m = 0.0;
  double crystal_index = 1.0;
  double nearfield_magnification = 1.0;
  /// Length K in p/hbar = k_j x_ff / K.
  double momentum_calibration_m = 1.0;
  double fiber_mode_field_diameter_m = 0.0;

  double emission_radius_m() const { return pump_waist_m; }

  /// Throws DomainError on nonpositive lengths, wavevectors or divergences,
  /// or on crystal_index < 1. An MFD of zero (ideal point probe) is allowed.
  void validate() const;

  /// Empty when k_j is within `rel_tol` of k_pump/2; otherwise a warning.
  std::vector<std::string> warnings(double rel_tol = 1e-3) const;
};

double momentum_from_position(double x_meas_m, double k_signal_per_m, double calibration_m);
double position_from_momentum(double p_per_m, double k_signal_per_m, double calibration_m);

double nearfield_to_crystal(double x_meas_m, double magnification);
double crystal_to_nearfield(double x_crystal_m, double magnification);

/// Multiplier taking measurement-plane metres to model units (crystal-plane
/// metres in the near field, p/hbar in the far field).
double measurement_to_model_scale(Plane plane, const OpticalTrain& train);

/// The probe intensity response is a Gaussian with sigma = MFD/4 in the
/// measurement plane.
double probe_sigma_measurement(const OpticalTrain& train);
double probe_sigma_model(Plane plane, const OpticalTrain& train);

/// Lower bounds on the two-photon widths with the binding product they imply.
struct PhysicalLimits {
  double dp_sum_min_pump = 0.0;         ///< 1/m, from pump emission area or divergence
  double dp_sum_min_emission = 0.0;     ///< 1/m, 1/w_p alone
  double dp_sum_min_divergence = 0.0;   ///< 1/m, k_pump Theta_pump / 2 alone
  double dx_diff_min_divergence = 0.0;  ///< m, 1/(k_j Theta_j)
  double dx_diff_min_crystal = 0.0;     ///< m, Theta_j/(2 n) * L/2
  double product_floor = 0.0;           ///< hbar^2
  double mode_m_squared = 0.0;          ///< w_j k_j Theta_j / 2
  double bracket_floor = 0.0;           ///< 1/(2 M_j^2)^2

  double binding_dx_diff() const;
};

PhysicalLimits physical_limits(const OpticalTrain& train);

struct FloorComparison {
  double floor = 0.0;
  double measured = 0.0;
  double ratio = 0.0;  ///< measured / floor
  bool suspicious = false;
};

/// Flags measured products below the physical floor.
FloorComparison product_floor_check(const PhysicalLimits& limits, double measured_product);

/// Two-sided bracket [1/(2 M^2)^2, 1) for the covariance criterion value. The
/// lower end is a first-order estimate, not a strict bound.
struct CriterionBracket {
  double lower = 0.0;
  double upper = 1.0;
};

CriterionBracket criterion_bounds(double m_squared);

}  // namespace biphoton
