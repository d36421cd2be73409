#include "biphoton/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "biphoton/kernels.hpp"

namespace biphoton {

namespace {

using Vec6 = Eigen::Matrix<double, kSurfaceParams, 1>;
using Mat6 = Eigen::Matrix<double, kSurfaceParams, kSurfaceParams>;

constexpr double kRhoClamp = 0.95;
constexpr std::size_t kMinInformative = 6;

}  // namespace

std::string_view to_string(FitForm form) {
  return form == FitForm::Rotated ? "rotated" : "covariance";
}

std::string_view to_string(Weighting weighting) {
  return weighting == Weighting::Uniform ? "uniform" : "poisson";
}

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIterations: return "max_iterations";
    case FitStatus::Stalled: return "stalled";
    case FitStatus::RankDeficient: return "rank_deficient";
  }
  return "unknown";
}

FitForm parse_fit_form(std::string_view text) {
  if (text == "rotated") return FitForm::Rotated;
  if (text == "covariance") return FitForm::Covariance;
  throw DomainError("unknown fit form '" + std::string(text) + "'");
}

Weighting parse_weighting(std::string_view text) {
  if (text == "uniform") return Weighting::Uniform;
  if (text == "poisson") return Weighting::PoissonVariance;
  throw DomainError("unknown weighting '" + std::string(text) + "'");
}

FitStatus parse_fit_status(std::string_view text) {
  for (auto s : {FitStatus::Converged, FitStatus::MaxIterations, FitStatus::Stalled,
                 FitStatus::RankDeficient})
    if (to_string(s) == text) return s;
  throw DomainError("unknown fit status '" + std::string(text) + "'");
}

RateSurface surface_from_record(const ScanRecord& record) {
  RateSurface s;
  s.plane = record.plan.plane;
  s.axis = record.plan.axis;
  s.dwell_s = record.plan.dwell_s;
  const Axis axis = record.plan.axis;
  double best_orth = std::numeric_limits<double>::infinity();
  for (const auto& p : record.points) best_orth = std::min(best_orth, std::abs(p.active_orth(axis)));
  for (const auto& p : record.points) {
    if (std::abs(p.active_orth(axis)) > best_orth) continue;
    const double c = static_cast<double>(p.coincidences);
    s.observations.push_back({p.active_axis(axis), p.passive, c / s.dwell_s, c});
  }
  return s;
}

RateSurface surface_from_rates(const ScanPlan& plan, const std::vector<kernels::Rates>& rates) {
  const auto positions = plan_positions(plan);
  if (positions.size() != rates.size()) throw DomainError("rates do not match the scan plan");
  RateSurface s;
  s.plane = plan.plane;
  s.axis = plan.axis;
  s.dwell_s = plan.dwell_s;
  double best_orth = std::numeric_limits<double>::infinity();
  for (const auto& p : positions) best_orth = std::min(best_orth, std::abs(p.active_orth));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (std::abs(positions[i].active_orth) > best_orth) continue;
    const double r = rates[i].coincidences;
    s.observations.push_back({positions[i].active_axis, positions[i].passive, r, r * plan.dwell_s});
  }
  return s;
}

InitialEstimate moment_init(const RateSurface& surface) {
  std::size_t informative = 0;
  double w = 0.0, m1 = 0.0, m2 = 0.0, peak = 0.0;
  for (const auto& o : surface.observations) {
    if (o.rate <= 0.0) continue;
    ++informative;
    w += o.rate;
    m1 += o.rate * o.x1;
    m2 += o.rate * o.x2;
    peak = std::max(peak, o.rate);
  }
  if (informative < kMinInformative)
    throw InsufficientDataError("need at least 6 points with nonzero coincidences");
  m1 /= w;
  m2 /= w;
  double v1 = 0.0, v2 = 0.0, c12 = 0.0;
  for (const auto& o : surface.observations) {
    if (o.rate <= 0.0) continue;
    const double d1 = o.x1 - m1;
    const double d2 = o.x2 - m2;
    v1 += o.rate * d1 * d1;
    v2 += o.rate * d2 * d2;
    c12 += o.rate * d1 * d2;
  }
  v1 /= w;
  v2 /= w;
  c12 /= w;
  if (!(v1 > 0.0) || !(v2 > 0.0))
    throw InsufficientDataError("coincidences do not spread along both probe coordinates");
  const double limit = kRhoClamp * std::sqrt(v1 * v2);
  c12 = std::clamp(c12, -limit, limit);
  return {m1, m2, {v1, v2, c12}, peak};
}

InitialEstimate moment_init(const ScanRecord& record) {
  return moment_init(surface_from_record(record));
}

std::optional<double> FitResult::rho_standard_error() const {
  if (!estimate_covariance || form != FitForm::Covariance) return std::nullopt;
  return std::sqrt((*estimate_covariance)(3, 3));
}

CorrelationModel FitResult::measurement_model() const {
  return {plane, axis, center_1, center_2, covariance};
}

CorrelationModel to_measurement_plane(const CorrelationModel& source, const OpticalTrain& train) {
  const double s = 1.0 / measurement_to_model_scale(source.plane(), train);
  const auto& c = source.cov();
  return {source.plane(), source.axis(), source.center_1() * s, source.center_2() * s,
          {c.var_1 * s * s, c.var_2 * s * s, c.cov_12 * s * s}};
}

CorrelationModel to_source_units(const CorrelationModel& measured, const OpticalTrain& train) {
  const double s = measurement_to_model_scale(measured.plane(), train);
  const auto& c = measured.cov();
  return {measured.plane(), measured.axis(), measured.center_1() * s, measured.center_2() * s,
          {c.var_1 * s * s, c.var_2 * s * s, c.cov_12 * s * s}};
}

CorrelationModel FitResult::source_model(const OpticalTrain& train) const {
  return to_source_units(measurement_model(), train);
}

double FitResult::rate_at(double x1, double x2) const {
  return amplitude * relative_density(measurement_model(), x1, x2);
}

FitResult fit_from_model(const CorrelationModel& measured, double amplitude, FitForm form) {
  FitResult f;
  f.form = form;
  f.plane = measured.plane();
  f.axis = measured.axis();
  f.center_1 = measured.center_1();
  f.center_2 = measured.center_2();
  f.amplitude = amplitude;
  f.covariance = measured.cov();
  f.rotated = covariance_to_rotated(measured.cov());
  f.converged = true;
  f.status = FitStatus::Converged;
  return f;
}

namespace {

struct Normalization {
  double length = 1.0;
  double rate = 1.0;
};

SurfaceParams initial_params(FitForm form, const InitialEstimate& init, const Normalization& n) {
  SurfaceParams p{};
  p[0] = init.center_1 / n.length;
  p[1] = init.center_2 / n.length;
  p[2] = std::log(init.amplitude / n.rate);
  if (form == FitForm::Covariance) {
    p[3] = std::atanh(init.cov.rho());
    p[4] = std::log(init.cov.sigma_1() / n.length);
    p[5] = std::log(init.cov.sigma_2() / n.length);
  } else {
    const auto shape = covariance_to_rotated(init.cov);
    p[3] = shape.alpha_rad;
    p[4] = std::log(shape.sigma_m / n.length);
    p[5] = std::log(shape.sigma_n / n.length);
  }
  return p;
}

SurfaceParams add(const SurfaceParams& p, const Vec6& step) {
  SurfaceParams out = p;
  for (int k = 0; k < kSurfaceParams; ++k) out[k] += step(k);
  return out;
}

double relative_step(const SurfaceParams& p, const Vec6& step) {
  double scale = 1.0;
  for (double v : p) scale = std::max(scale, std::abs(v));
  return step.cwiseAbs().maxCoeff() / scale;
}

bool finite(const SurfaceParams& p) {
  return std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
}

bool rank_deficient(const Mat6& jtj) {
  const Eigen::SelfAdjointEigenSolver<Mat6> eig(jtj, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  return !(ev.minCoeff() > 1e-13 * ev.maxCoeff());
}

}  // namespace

FitResult fit(const RateSurface& surface, FitForm form, Weighting weighting,
              const FitOptions& options) {
  const InitialEstimate init = moment_init(surface);

  Normalization norm;
  norm.length = std::sqrt(init.cov.sigma_1() * init.cov.sigma_2());
  norm.rate = init.amplitude;

  std::vector<FitSample> samples;
  samples.reserve(surface.observations.size());
  double data_scale = 0.0;
  for (const auto& o : surface.observations) {
    double w = 1.0;
    if (weighting == Weighting::PoissonVariance)
      w = surface.dwell_s * surface.dwell_s / std::max(o.count, 1.0);
    // chi2 stays in original rate units after normalizing the rates.
    w *= norm.rate * norm.rate;
    samples.push_back({o.x1 / norm.length, o.x2 / norm.length, o.rate / norm.rate, w});
    data_scale += w * (o.rate / norm.rate) * (o.rate / norm.rate);
  }
  const double residual_floor = 1e-26 * data_scale;

  SurfaceParams p = initial_params(form, init, norm);
  auto ne = kernels::omp::normal_equations(form, p, samples);
  double chi2 = ne.chi2;

  FitResult result;
  result.form = form;
  result.plane = surface.plane;
  result.axis = surface.axis;
  result.sample_count = samples.size();
  result.residual_history.push_back(chi2);

  double lambda = 1e-3;
  FitStatus status = FitStatus::MaxIterations;
  int it = 0;
  while (it < options.max_iterations) {
    ++it;
    Mat6 a = ne.jtj;
    const double diag_floor = 1e-12 * ne.jtj.diagonal().maxCoeff();
    for (int k = 0; k < kSurfaceParams; ++k)
      a(k, k) += lambda * std::max(ne.jtj(k, k), diag_floor);
    const Eigen::LDLT<Mat6> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
      status = FitStatus::RankDeficient;
      break;
    }
    const Vec6 step = ldlt.solve(-ne.jtr);
    const SurfaceParams trial = add(p, step);
    const double rel_step = relative_step(p, step);
    const double trial_chi2 =
        finite(trial) ? kernels::omp::objective(form, trial, samples)
                      : std::numeric_limits<double>::infinity();

    if (std::isfinite(trial_chi2) && trial_chi2 < chi2) {
      const double rel_res = (chi2 - trial_chi2) / chi2;
      p = trial;
      ne = kernels::omp::normal_equations(form, p, samples);
      chi2 = ne.chi2;
      result.residual_history.push_back(chi2);
      lambda = std::max(lambda / 10.0, 1e-12);
      if (rel_step < options.parameter_tolerance &&
          (rel_res < options.residual_tolerance || chi2 <= residual_floor)) {
        status = FitStatus::Converged;
        break;
      }
      if (chi2 <= residual_floor && rel_step < 1e-6) {
        // Exact data: the residual is at rounding level, further steps are noise.
        status = FitStatus::Converged;
        break;
      }
    } else {
      // A step this small that cannot lower chi2 means chi2 is flat to rounding.
      if (rel_step < options.parameter_tolerance) {
        status = FitStatus::Converged;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e16) {
        status = FitStatus::Stalled;
        break;
      }
    }
  }

  if (status == FitStatus::Converged && rank_deficient(ne.jtj)) status = FitStatus::RankDeficient;

  result.status = status;
  result.converged = status == FitStatus::Converged;
  result.iterations = it;
  result.residual_norm = chi2;

  result.center_1 = p[0] * norm.length;
  result.center_2 = p[1] * norm.length;
  result.amplitude = std::exp(p[2]) * norm.rate;
  bool swapped = false;
  if (form == FitForm::Covariance) {
    const double rho = std::tanh(p[3]);
    result.covariance = covariance_from_sigmas(std::exp(p[4]) * norm.length,
                                               std::exp(p[5]) * norm.length, rho);
    result.rotated = covariance_to_rotated(result.covariance);
  } else {
    RotatedGaussian raw{p[3], std::exp(p[4]) * norm.length, std::exp(p[5]) * norm.length};
    swapped = raw.sigma_m > raw.sigma_n;
    result.rotated = canonical(raw);
    result.covariance = rotated_to_covariance(result.rotated);
  }

  if (status != FitStatus::RankDeficient) {
    Mat6 cov_int = ne.jtj.inverse();
    // Poisson weights are inverse variances already; uniform ones need the
    // residual variance estimate.
    if (weighting == Weighting::Uniform) {
      const double dof = static_cast<double>(samples.size()) - kSurfaceParams;
      cov_int *= dof > 0.0 ? chi2 / dof : 0.0;
    }
    Vec6 d;
    d(0) = norm.length;
    d(1) = norm.length;
    d(2) = result.amplitude;
    if (form == FitForm::Covariance) {
      const double rho = result.covariance.rho();
      d(3) = 1.0 - rho * rho;
      d(4) = result.covariance.sigma_1();
      d(5) = result.covariance.sigma_2();
    } else {
      d(3) = 1.0;
      d(4) = std::exp(p[4]) * norm.length;
      d(5) = std::exp(p[5]) * norm.length;
    }
    Mat6 ext = d.asDiagonal() * cov_int * d.asDiagonal();
    if (swapped) {
      ext.row(4).swap(ext.row(5));
      ext.col(4).swap(ext.col(5));
    }
    result.estimate_covariance = ext;
  }
  return result;
}

FitResult fit(const ScanRecord& record, FitForm form, Weighting weighting,
              const FitOptions& options) {
  return fit(surface_from_record(record), form, weighting, options);
}

FitResult deconvolve_fiber(const FitResult& fit, const DetectorSpec& det) {
  const double b = det.fiber_mode_field_diameter_m / 4.0;
  const double b2 = b * b;
  CovarianceMatrix2 cov = fit.covariance;
  cov.var_1 -= b2;
  cov.var_2 -= b2;
  if (!(cov.var_1 > 0.0) || !(cov.var_2 > 0.0))
    throw OverDeconvolutionError("probe response is wider than the fitted distribution");
  if (cov.cov_12 * cov.cov_12 >= cov.var_1 * cov.var_2)
    throw OverDeconvolutionError("deconvolution leaves a non-positive-definite covariance");
  FitResult out = fit;
  out.covariance = cov;
  out.rotated = covariance_to_rotated(cov);
  out.estimate_covariance.reset();
  return out;
}

SumDiffWidths widths_for_criterion(const FitResult& fit) { return sum_diff_widths(fit.covariance); }

std::vector<ContourLine> contour_lines(const FitResult& fit, int points_per_line) {
  struct Level {
    double value;
    const char* label;
  };
  const Level levels[] = {{0.5, "1/2"}, {std::exp(-1.0), "1/e"}, {std::exp(-2.0), "1/e^2"}};
  const double c = std::cos(fit.rotated.alpha_rad);
  const double s = std::sin(fit.rotated.alpha_rad);
  std::vector<ContourLine> out;
  for (const auto& lv : levels) {
    ContourLine line;
    line.level = lv.value;
    line.label = lv.label;
    const double radius = std::sqrt(-2.0 * std::log(lv.value));
    for (int i = 0; i < points_per_line; ++i) {
      const double t = 2.0 * std::numbers::pi * i / (points_per_line - 1);
      const double xm = radius * fit.rotated.sigma_m * std::cos(t);
      const double yn = radius * fit.rotated.sigma_n * std::sin(t);
      // Inverse of the rotation that defines (x_m, y_n).
      line.points.emplace_back(fit.center_1 + xm * c + yn * s, fit.center_2 - xm * s + yn * c);
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace biphoton
