#pragma once

// Damped least-squares fits of 2D Gaussian coincidence surfaces, in either
// the rotated principal-axis form or the covariance form.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "biphoton/correlation_model.hpp"
#include "biphoton/optics_geometry.hpp"
#include "biphoton/simulator.hpp"
#include "biphoton/surface.hpp"

namespace biphoton {

class InsufficientDataError : public DomainError {
 public:
  using DomainError::DomainError;
};

class OverDeconvolutionError : public DomainError {
 public:
  using DomainError::DomainError;
};

enum class Weighting { Uniform, PoissonVariance };
enum class FitStatus { Converged, MaxIterations, Stalled, RankDeficient };

std::string_view to_string(FitForm form);
std::string_view to_string(Weighting weighting);
std::string_view to_string(FitStatus status);
FitForm parse_fit_form(std::string_view text);
Weighting parse_weighting(std::string_view text);
FitStatus parse_fit_status(std::string_view text);

/// Coincidence rates over (x1 = active, x2 = passive) in measurement-plane metres.
struct RateSurface {
  struct Observation {
    double x1 = 0.0;
    double x2 = 0.0;
    double rate = 0.0;   ///< counts per second
    double count = 0.0;  ///< counts behind `rate`, used for Poisson weights
  };

  Plane plane = Plane::NearField;
  Axis axis = Axis::X;
  double dwell_s = 1.0;
  std::vector<Observation> observations;
};

/// Line scans use every point; full-grid records use the active row closest
/// to the orthogonal centre.
RateSurface surface_from_record(const ScanRecord& record);
/// Noiseless surface from expected rates of the same plan.
RateSurface surface_from_rates(const ScanPlan& plan, const std::vector<kernels::Rates>& rates);

struct InitialEstimate {
  double center_1 = 0.0;
  double center_2 = 0.0;
  CovarianceMatrix2 cov;
  double amplitude = 0.0;
};

/// Rate-weighted first and second moments; |rho| clamped to 0.95.
InitialEstimate moment_init(const RateSurface& surface);
InitialEstimate moment_init(const ScanRecord& record);

struct FitOptions {
  int max_iterations = 200;
  double parameter_tolerance = 1e-8;
  double residual_tolerance = 1e-10;
};

struct FitResult {
  FitForm form = FitForm::Covariance;
  Plane plane = Plane::NearField;
  Axis axis = Axis::X;
  double center_1 = 0.0;
  double center_2 = 0.0;
  double amplitude = 0.0;
  RotatedGaussian rotated;
  CovarianceMatrix2 covariance;
  double residual_norm = 0.0;
  bool converged = false;
  FitStatus status = FitStatus::MaxIterations;
  int iterations = 0;
  std::size_t sample_count = 0;
  /// Curvature-based covariance of (x10, x20, r, rho|alpha, sigma_1|m, sigma_2|n).
  std::optional<Eigen::Matrix<double, 6, 6>> estimate_covariance;
  /// Weighted residual after each accepted step, starting at the initial point.
  std::vector<double> residual_history;

  double rho() const { return covariance.rho(); }
  double sigma_1() const { return covariance.sigma_1(); }
  double sigma_2() const { return covariance.sigma_2(); }
  std::optional<double> rho_standard_error() const;

  /// Fitted density in measurement-plane metres.
  CorrelationModel measurement_model() const;
  /// Fitted density referred to the crystal (near) or to p/hbar (far).
  CorrelationModel source_model(const OpticalTrain& train) const;
  double rate_at(double x1, double x2) const;
};

/// Scales a crystal/momentum-unit model into the measurement plane.
CorrelationModel to_measurement_plane(const CorrelationModel& source, const OpticalTrain& train);
CorrelationModel to_source_units(const CorrelationModel& measured, const OpticalTrain& train);

/// Exact FitResult describing a measurement-plane model (both forms filled).
FitResult fit_from_model(const CorrelationModel& measured, double amplitude,
                         FitForm form = FitForm::Covariance);

FitResult fit(const RateSurface& surface, FitForm form, Weighting weighting,
              const FitOptions& options = {});
FitResult fit(const ScanRecord& record, FitForm form, Weighting weighting,
              const FitOptions& options = {});

/// Quadrature removal of the probe response (sigma = MFD/4 in the
/// measurement plane) from both variances; the covariance is kept.
FitResult deconvolve_fiber(const FitResult& fit, const DetectorSpec& det);

/// Widths along the sum and difference directions of the fitted density.
SumDiffWidths widths_for_criterion(const FitResult& fit);

struct ContourLine {
  double level = 0.0;  ///< fraction of the peak rate
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Ellipses at the 1/2, 1/e and 1/e^2 levels of the fitted surface.
std::vector<ContourLine> contour_lines(const FitResult& fit, int points_per_line = 181);

}  // namespace biphoton
