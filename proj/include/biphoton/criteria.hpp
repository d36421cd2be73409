#pragma once

// Non-separability tests for the position/momentum pair: the variance
// product Delta^2(x1 - x2) Delta^2(p1 + p2) < hbar^2, its covariance form,
// and the M^2 phase-cell version with its lower bracket.

#include <optional>
#include <string>
#include <vector>

#include "biphoton/correlation_model.hpp"
#include "biphoton/fitter.hpp"
#include "biphoton/optics_geometry.hpp"

namespace biphoton {

enum class Verdict { Entangled, NotProven };

std::string_view to_string(Verdict verdict);

/// Strict inequality: a value of exactly 1 is NotProven.
Verdict verdict_for(double value);

struct CriterionValue {
  double value = 0.0;
  Verdict verdict = Verdict::NotProven;
};

CriterionValue mancini_product(double var_x_diff, double var_p_sum);

/// 2 sigma_x^2 (1 - rho_x) * 2 sigma_p^2 (1 + rho_p).
CriterionValue mancini_from_covariance(double sigma_x_in, double rho_x, double sigma_p_in,
                                       double rho_p);

struct MSquared {
  double value = 0.0;
  /// Set when sigma_x sigma_p < hbar/2, which no proper beam reaches.
  bool below_phase_cell = false;
};

MSquared m_squared(double sigma_x, double sigma_p);

struct CovarianceCriterion {
  double value = 0.0;
  Verdict verdict = Verdict::NotProven;
  CriterionBracket bracket;
};

/// (1 - rho_x)(1 + rho_p)(M^2)^2. Throws DomainError for M^2 < 1.
CovarianceCriterion covariance_criterion(double rho_x, double rho_p, double m_squared);

struct CriterionReport {
  Axis axis = Axis::X;
  double var_x_diff = 0.0;   ///< m^2
  double var_p_sum = 0.0;    ///< (1/m)^2
  double var_product = 0.0;  ///< hbar^2
  double rho_x = 0.0;
  double rho_p = 0.0;
  double sigma_x_in = 0.0;  ///< m
  double sigma_p_in = 0.0;  ///< 1/m
  double m_squared = 0.0;
  double covariance_form_value = 0.0;
  double m_squared_form_value = 0.0;
  double bracket_lower = 0.0;
  double bracket_upper = 1.0;
  Verdict verdict = Verdict::NotProven;
  std::optional<PhysicalLimits> limits;
  std::optional<FloorComparison> floor;
  /// Product after removing the probe response, when a detector was given.
  std::optional<double> deconvolved_product;
  std::vector<std::string> warnings;
};

/// Report from a near-field model in crystal metres and a far-field model
/// in p/hbar.
///
/// For unequal mode widths the single-mode width is taken as
/// sigma_in^2 = (var_1 + var_2)/2 and rho = cov_12 / sigma_in^2, which makes
/// the covariance forms reproduce the directly computed variance product.
CriterionReport build_report(Axis axis, const CorrelationModel& near_source,
                             const CorrelationModel& far_source,
                             const std::optional<OpticalTrain>& train = std::nullopt);

/// Report from measurement-plane fits; needs the optics to convert units.
/// With `det`, the deconvolved product is included as well.
CriterionReport build_report(Axis axis, const FitResult& near_fit, const FitResult& far_fit,
                             const OpticalTrain& train,
                             const std::optional<DetectorSpec>& det = std::nullopt);

/// Plain-text block for terminals and reports.
std::string format_report(const CriterionReport& report);

}  // namespace biphoton
