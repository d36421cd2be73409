#include "biphoton/correlation_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace biphoton {

namespace {

constexpr double kPi = std::numbers::pi;
// 1 - rho^2 below this is treated as a line measure.
constexpr double kDegenerateTolerance = 1e-15;

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

}  // namespace

std::string_view to_string(Plane plane) {
  return plane == Plane::NearField ? "near" : "far";
}

std::string_view to_string(Axis axis) { return axis == Axis::X ? "x" : "y"; }

Plane parse_plane(std::string_view text) {
  if (text == "near" || text == "NearField") return Plane::NearField;
  if (text == "far" || text == "FarField") return Plane::FarField;
  throw DomainError("unknown plane '" + std::string(text) + "'");
}

Axis parse_axis(std::string_view text) {
  if (text == "x" || text == "X") return Axis::X;
  if (text == "y" || text == "Y") return Axis::Y;
  throw DomainError("unknown axis '" + std::string(text) + "'");
}

double CovarianceMatrix2::sigma_1() const { return std::sqrt(var_1); }
double CovarianceMatrix2::sigma_2() const { return std::sqrt(var_2); }

double CovarianceMatrix2::rho() const {
  const double r = cov_12 / std::sqrt(var_1 * var_2);
  return std::clamp(r, -1.0, 1.0);
}

void CovarianceMatrix2::validate() const {
  require(std::isfinite(var_1) && std::isfinite(var_2) && std::isfinite(cov_12),
          "covariance entries must be finite");
  require(var_1 > 0.0 && var_2 > 0.0, "variances must be positive");
  // Allow rounding slack so that |rho| = 1 models built from sigmas survive.
  require(cov_12 * cov_12 <= var_1 * var_2 * (1.0 + 1e-12),
          "covariance is not positive semidefinite");
}

CovarianceMatrix2 covariance_from_sigmas(double sigma_1, double sigma_2, double rho) {
  require(sigma_1 > 0.0 && sigma_2 > 0.0, "sigma must be positive");
  require(rho >= -1.0 && rho <= 1.0, "rho must lie in [-1, 1]");
  return {sigma_1 * sigma_1, sigma_2 * sigma_2, rho * sigma_1 * sigma_2};
}

CorrelationModel::CorrelationModel(Plane plane, Axis axis, double center_1, double center_2,
                                   CovarianceMatrix2 cov)
    : plane_(plane), axis_(axis), center_1_(center_1), center_2_(center_2), cov_(cov) {
  require(std::isfinite(center_1) && std::isfinite(center_2), "centers must be finite");
  cov_.validate();
}

bool CorrelationModel::degenerate() const {
  const double r = rho();
  return 1.0 - r * r < kDegenerateTolerance;
}

CorrelationModel CorrelationModel::with_covariance(const CovarianceMatrix2& cov) const {
  return {plane_, axis_, center_1_, center_2_, cov};
}

CorrelationModel CorrelationModel::with_centers(double center_1, double center_2) const {
  return {plane_, axis_, center_1, center_2, cov_};
}

namespace {

double quadratic_form(const CorrelationModel& model, double point_1, double point_2) {
  if (model.degenerate())
    throw DegenerateCovarianceError("density of a |rho| = 1 model is a line measure");
  const auto& c = model.cov();
  const double d1 = point_1 - model.center_1();
  const double d2 = point_2 - model.center_2();
  const double det = c.determinant();
  return (c.var_2 * d1 * d1 - 2.0 * c.cov_12 * d1 * d2 + c.var_1 * d2 * d2) / det;
}

}  // namespace

double pdf(const CorrelationModel& model, double point_1, double point_2) {
  const double q = quadratic_form(model, point_1, point_2);
  return std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(model.cov().determinant()));
}

double relative_density(const CorrelationModel& model, double point_1, double point_2) {
  return std::exp(-0.5 * quadratic_form(model, point_1, point_2));
}

namespace {

double equal_width_norm(double sigma_in, double rho) {
  require(sigma_in > 0.0, "sigma_in must be positive");
  require(std::abs(rho) < 1.0, "equal-width density needs |rho| < 1");
  return 1.0 / (2.0 * kPi * sigma_in * sigma_in * std::sqrt(1.0 - rho * rho));
}

}  // namespace

double equal_width_pdf_x(double sigma_in, double rho, double x1, double x2) {
  const double norm = equal_width_norm(sigma_in, rho);
  const double e = (x1 * x1 + x2 * x2 - 2.0 * rho * x1 * x2) /
                   (2.0 * sigma_in * sigma_in * (1.0 - rho * rho));
  return norm * std::exp(-e);
}

double equal_width_pdf_st(double sigma_in, double rho, double s, double t) {
  const double norm = equal_width_norm(sigma_in, rho);
  const double e =
      (2.0 * s * s / (1.0 + rho) + 2.0 * t * t / (1.0 - rho)) / (2.0 * sigma_in * sigma_in);
  return norm * std::exp(-e);
}

double equal_width_pdf_uv(double sigma_in, double rho, double u, double v) {
  const double norm = equal_width_norm(sigma_in, rho);
  const double e = (u * u / (2.0 * (1.0 + rho)) + v * v / (2.0 * (1.0 - rho))) /
                   (2.0 * sigma_in * sigma_in);
  return norm * std::exp(-e);
}

SumDiffWidths sum_diff_widths(double sigma_in, double rho) {
  require(sigma_in > 0.0, "sigma_in must be positive");
  require(rho >= -1.0 && rho <= 1.0, "rho must lie in [-1, 1]");
  SumDiffWidths w;
  w.sigma_s = sigma_in * std::sqrt((1.0 + rho) / 2.0);
  w.sigma_t = sigma_in * std::sqrt((1.0 - rho) / 2.0);
  w.sigma_u = 2.0 * w.sigma_s;
  w.sigma_v = 2.0 * w.sigma_t;
  return w;
}

SumDiffWidths sum_diff_widths(const CovarianceMatrix2& cov) {
  cov.validate();
  SumDiffWidths w;
  w.sigma_u = std::sqrt(std::max(0.0, cov.var_1 + cov.var_2 + 2.0 * cov.cov_12));
  w.sigma_v = std::sqrt(std::max(0.0, cov.var_1 + cov.var_2 - 2.0 * cov.cov_12));
  w.sigma_s = 0.5 * w.sigma_u;
  w.sigma_t = 0.5 * w.sigma_v;
  return w;
}

double rho_from_widths(double sigma_s, double sigma_t) {
  require(sigma_s >= 0.0 && sigma_t >= 0.0, "widths must be nonnegative");
  require(sigma_s > 0.0 || sigma_t > 0.0, "widths must not both be zero");
  const double s2 = sigma_s * sigma_s;
  const double t2 = sigma_t * sigma_t;
  return (s2 - t2) / (s2 + t2);
}

double conditional_sigma(double sigma_in, double rho) {
  require(sigma_in > 0.0, "sigma_in must be positive");
  require(rho >= -1.0 && rho <= 1.0, "rho must lie in [-1, 1]");
  return sigma_in * std::sqrt(1.0 - rho * rho);
}

double RotatedGaussian::alpha_deg() const { return alpha_rad * 180.0 / kPi; }

double wrap_alpha(double alpha_rad) {
  double a = std::remainder(alpha_rad, kPi);
  if (a <= -kPi / 2.0) a += kPi;
  if (a > kPi / 2.0) a -= kPi;
  return a;
}

RotatedGaussian canonical(RotatedGaussian shape) {
  require(shape.sigma_m > 0.0 && shape.sigma_n > 0.0, "principal widths must be positive");
  if (shape.sigma_m > shape.sigma_n) {
    std::swap(shape.sigma_m, shape.sigma_n);
    shape.alpha_rad += kPi / 2.0;
  }
  shape.alpha_rad = wrap_alpha(shape.alpha_rad);
  if (shape.sigma_m == shape.sigma_n) shape.alpha_rad = 0.0;
  return shape;
}

CovarianceMatrix2 rotated_to_covariance(const RotatedGaussian& shape) {
  require(shape.sigma_m > 0.0 && shape.sigma_n > 0.0, "principal widths must be positive");
  const double c = std::cos(shape.alpha_rad);
  const double s = std::sin(shape.alpha_rad);
  const double m2 = shape.sigma_m * shape.sigma_m;
  const double n2 = shape.sigma_n * shape.sigma_n;
  // C = R^T diag(m2, n2) R with R = [[c, -s], [s, c]].
  return {c * c * m2 + s * s * n2, s * s * m2 + c * c * n2, c * s * (n2 - m2)};
}

CorrelationModel rotated_to_covariance(Plane plane, Axis axis, const RotatedGaussian& shape,
                                       double center_1, double center_2) {
  return {plane, axis, center_1, center_2, rotated_to_covariance(shape)};
}

RotatedGaussian covariance_to_rotated(const CovarianceMatrix2& cov) {
  cov.validate();
  const double mean = 0.5 * (cov.var_1 + cov.var_2);
  const double half_diff = 0.5 * (cov.var_1 - cov.var_2);
  const double radius = std::hypot(half_diff, cov.cov_12);
  RotatedGaussian shape;
  shape.sigma_n = std::sqrt(mean + radius);
  shape.sigma_m = std::sqrt(std::max(0.0, mean - radius));
  if (radius <= 1e-14 * mean) {
    shape.sigma_m = shape.sigma_n = std::sqrt(mean);
    shape.alpha_rad = 0.0;
    return shape;
  }
  // Major axis at angle theta from the x1 axis, direction (cos theta, sin theta)
  // = (sin alpha, cos alpha).
  const double theta = 0.5 * std::atan2(2.0 * cov.cov_12, cov.var_1 - cov.var_2);
  shape.alpha_rad = wrap_alpha(kPi / 2.0 - theta);
  return shape;
}

RotatedGaussian covariance_to_rotated(const CorrelationModel& model) {
  return covariance_to_rotated(model.cov());
}

}  // namespace biphoton
