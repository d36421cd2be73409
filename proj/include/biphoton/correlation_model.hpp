#pragma once

// Bivariate Gaussian description of the two-photon distribution in one
// conjugate plane. Positions are in metres; momenta are stored as p/hbar in
// 1/m, so every criterion product below comes out in units of hbar^2.

#include <stdexcept>
#include <string>
#include <string_view>

namespace biphoton {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when a density is requested for a |rho| = 1 model.
class DegenerateCovarianceError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Inconsistent inputs across artifacts, such as mismatched planes or axes.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Plane { NearField, FarField };
enum class Axis { X, Y };

std::string_view to_string(Plane plane);
std::string_view to_string(Axis axis);
Plane parse_plane(std::string_view text);
Axis parse_axis(std::string_view text);

struct CovarianceMatrix2 {
  double var_1 = 1.0;
  double var_2 = 1.0;
  double cov_12 = 0.0;

  double sigma_1() const;
  double sigma_2() const;
  double rho() const;
  double determinant() const { return var_1 * var_2 - cov_12 * cov_12; }

  /// Throws DomainError unless var_1, var_2 > 0 and cov_12^2 <= var_1 var_2.
  void validate() const;
};

CovarianceMatrix2 covariance_from_sigmas(double sigma_1, double sigma_2, double rho);

class CorrelationModel {
 public:
  CorrelationModel(Plane plane, Axis axis, double center_1, double center_2,
                   CovarianceMatrix2 cov);

  Plane plane() const { return plane_; }
  Axis axis() const { return axis_; }
  double center_1() const { return center_1_; }
  double center_2() const { return center_2_; }
  const CovarianceMatrix2& cov() const { return cov_; }

  double sigma_1() const { return cov_.sigma_1(); }
  double sigma_2() const { return cov_.sigma_2(); }
  double rho() const { return cov_.rho(); }
  bool degenerate() const;

  CorrelationModel with_covariance(const CovarianceMatrix2& cov) const;
  CorrelationModel with_centers(double center_1, double center_2) const;

 private:
  Plane plane_;
  Axis axis_;
  double center_1_;
  double center_2_;
  CovarianceMatrix2 cov_;
};

/// Normalized bivariate normal density at (point_1, point_2).
double pdf(const CorrelationModel& model, double point_1, double point_2);

/// Density relative to its peak, exp(-q/2). Shares the degeneracy check of pdf.
double relative_density(const CorrelationModel& model, double point_1, double point_2);

// Equal-width (sigma_1 = sigma_2 = sigma_in) closed forms of the density,
// all carrying the same normalization 1/(2 pi sigma_in^2 sqrt(1 - rho^2)) so
// that they can be compared against pdf() at the same physical point.
// Coordinates are relative to the model centers.
double equal_width_pdf_x(double sigma_in, double rho, double x1, double x2);
/// s = (x1 + x2)/2, t = (x2 - x1)/2.
double equal_width_pdf_st(double sigma_in, double rho, double s, double t);
/// u = x1 + x2, v = x1 - x2.
double equal_width_pdf_uv(double sigma_in, double rho, double u, double v);

struct SumDiffWidths {
  double sigma_s = 0.0;  ///< Delta((x1 + x2)/2)
  double sigma_t = 0.0;  ///< Delta((x2 - x1)/2)
  double sigma_u = 0.0;  ///< Delta(x1 + x2) = 2 sigma_s
  double sigma_v = 0.0;  ///< Delta(x1 - x2) = 2 sigma_t

  double diff_width() const { return sigma_v; }
  double sum_width() const { return sigma_u; }
};

SumDiffWidths sum_diff_widths(double sigma_in, double rho);
/// General (unequal-width) version: exact moments of (x1 +- x2).
SumDiffWidths sum_diff_widths(const CovarianceMatrix2& cov);

/// (sigma_s^2 - sigma_t^2)/(sigma_s^2 + sigma_t^2).
double rho_from_widths(double sigma_s, double sigma_t);

/// Width of the slice along x1 at x2 = center: sigma_in sqrt(1 - rho^2).
double conditional_sigma(double sigma_in, double rho);

/// Principal-axis parameters of the rotated Gaussian
///   x_m = dx1 cos(alpha) - dx2 sin(alpha)
///   y_n = dx1 sin(alpha) + dx2 cos(alpha)
///   q   = x_m^2/sigma_m^2 + y_n^2/sigma_n^2
/// The y_n axis points along (sin alpha, cos alpha) in the (x1, x2) plane.
struct RotatedGaussian {
  double alpha_rad = 0.0;
  double sigma_m = 1.0;
  double sigma_n = 1.0;

  double alpha_deg() const;
};

/// Canonical branch: sigma_n >= sigma_m (y_n is the major axis) and
/// alpha in (-90 deg, +90 deg]. Isotropic shapes get alpha = 0.
RotatedGaussian canonical(RotatedGaussian shape);

/// Wraps an angle into (-pi/2, pi/2].
double wrap_alpha(double alpha_rad);

CovarianceMatrix2 rotated_to_covariance(const RotatedGaussian& shape);
CorrelationModel rotated_to_covariance(Plane plane, Axis axis, const RotatedGaussian& shape,
                                       double center_1, double center_2);

RotatedGaussian covariance_to_rotated(const CovarianceMatrix2& cov);
RotatedGaussian covariance_to_rotated(const CorrelationModel& model);

}  // namespace biphoton
