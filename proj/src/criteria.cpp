#include "biphoton/criteria.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace biphoton {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

void require_rho(double rho) { require(rho >= -1.0 && rho <= 1.0, "rho must lie in [-1, 1]"); }

struct SingleModeView {
  double sigma_in;
  double rho;
};

SingleModeView equal_width_view(const CovarianceMatrix2& c) {
  const double var_in = 0.5 * (c.var_1 + c.var_2);
  return {std::sqrt(var_in), c.cov_12 / var_in};
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::Entangled ? "Entangled" : "NotProven";
}

Verdict verdict_for(double value) { return value < 1.0 ? Verdict::Entangled : Verdict::NotProven; }

CriterionValue mancini_product(double var_x_diff, double var_p_sum) {
  require(var_x_diff > 0.0 && var_p_sum > 0.0, "variances must be positive");
  const double v = var_x_diff * var_p_sum;
  return {v, verdict_for(v)};
}

CriterionValue mancini_from_covariance(double sigma_x_in, double rho_x, double sigma_p_in,
                                       double rho_p) {
  require(sigma_x_in > 0.0 && sigma_p_in > 0.0, "sigma must be positive");
  require_rho(rho_x);
  require_rho(rho_p);
  const double v = 2.0 * sigma_x_in * sigma_x_in * (1.0 - rho_x) * 2.0 * sigma_p_in *
                   sigma_p_in * (1.0 + rho_p);
  return {v, verdict_for(v)};
}

MSquared m_squared(double sigma_x, double sigma_p) {
  require(sigma_x > 0.0 && sigma_p > 0.0, "sigma must be positive");
  const double m2 = 2.0 * sigma_x * sigma_p;
  return {m2, m2 < 1.0};
}

CovarianceCriterion covariance_criterion(double rho_x, double rho_p, double m2) {
  require_rho(rho_x);
  require_rho(rho_p);
  require(std::isfinite(m2) && m2 >= 1.0, "M^2 must be >= 1");
  CovarianceCriterion c;
  c.value = (1.0 - rho_x) * (1.0 + rho_p) * m2 * m2;
  c.verdict = verdict_for(c.value);
  c.bracket = criterion_bounds(m2);
  return c;
}

CriterionReport build_report(Axis axis, const CorrelationModel& near_source,
                             const CorrelationModel& far_source,
                             const std::optional<OpticalTrain>& train) {
  if (near_source.plane() != Plane::NearField)
    throw ConfigError("near-field input carries a far-field plane tag");
  if (far_source.plane() != Plane::FarField)
    throw ConfigError("far-field input carries a near-field plane tag");
  if (near_source.axis() != axis || far_source.axis() != axis)
    throw ConfigError("input axes do not match the requested axis");

  CriterionReport r;
  r.axis = axis;
  const auto& cx = near_source.cov();
  const auto& cp = far_source.cov();
  r.var_x_diff = cx.var_1 + cx.var_2 - 2.0 * cx.cov_12;
  r.var_p_sum = cp.var_1 + cp.var_2 + 2.0 * cp.cov_12;
  r.var_product = mancini_product(r.var_x_diff, r.var_p_sum).value;

  const auto x = equal_width_view(cx);
  const auto p = equal_width_view(cp);
  r.sigma_x_in = x.sigma_in;
  r.rho_x = x.rho;
  r.sigma_p_in = p.sigma_in;
  r.rho_p = p.rho;
  r.covariance_form_value = mancini_from_covariance(x.sigma_in, x.rho, p.sigma_in, p.rho).value;

  const auto m2 = m_squared(x.sigma_in, p.sigma_in);
  r.m_squared = m2.value;
  if (m2.below_phase_cell)
    r.warnings.push_back("M^2 below 1: widths imply less than one phase cell");
  // Written out instead of covariance_criterion() so that M^2 < 1 only warns.
  r.m_squared_form_value = (1.0 - r.rho_x) * (1.0 + r.rho_p) * m2.value * m2.value;
  r.bracket_lower = 1.0 / ((2.0 * m2.value) * (2.0 * m2.value));
  r.bracket_upper = 1.0;
  r.verdict = verdict_for(r.var_product);
  if (r.rho_p > 0.0)
    r.warnings.push_back("far-field correlation is positive; momentum anti-correlation expected");

  if (train) {
    r.limits = physical_limits(*train);
    r.floor = product_floor_check(*r.limits, r.var_product);
    for (auto& w : train->warnings()) r.warnings.push_back(std::move(w));
    if (r.floor->suspicious)
      r.warnings.push_back("variance product below the physical floor");
  }
  return r;
}

CriterionReport build_report(Axis axis, const FitResult& near_fit, const FitResult& far_fit,
                             const OpticalTrain& train, const std::optional<DetectorSpec>& det) {
  if (near_fit.plane != Plane::NearField) throw ConfigError("near fit is not a near-field fit");
  if (far_fit.plane != Plane::FarField) throw ConfigError("far fit is not a far-field fit");
  auto r = build_report(axis, near_fit.source_model(train), far_fit.source_model(train), train);
  if (!near_fit.converged || !far_fit.converged)
    r.warnings.push_back("at least one input fit did not converge");
  if (det && det->fiber_mode_field_diameter_m > 0.0) {
    const auto near_d = deconvolve_fiber(near_fit, *det);
    const auto far_d = deconvolve_fiber(far_fit, *det);
    r.deconvolved_product =
        build_report(axis, near_d.source_model(train), far_d.source_model(train)).var_product;
  }
  return r;
}

std::string format_report(const CriterionReport& r) {
  std::ostringstream os;
  os << std::setprecision(4);
  const char* ax = r.axis == Axis::X ? "x" : "y";
  os << "Criterion report (" << ax << " axis)\n";
  os << "  single-mode width, position   sigma_in = " << r.sigma_x_in * 1e6 << " um\n";
  os << "  single-mode width, momentum   sigma_in = " << r.sigma_p_in << " hbar/m\n";
  os << "  correlation coefficients      rho_x = " << r.rho_x << ", rho_p = " << r.rho_p
     << "\n";
  os << "  Delta^2(" << ax << "1 - " << ax << "2)              = " << r.var_x_diff * 1e12
     << " um^2\n";
  os << "  Delta^2(p_sum)                = " << r.var_p_sum << " (hbar/m)^2\n";
  os << "  variance product              = " << r.var_product << " hbar^2\n";
  os << "  covariance form               = " << r.covariance_form_value << " hbar^2\n";
  os << "  M^2                           = " << r.m_squared << "\n";
  os << "  (1-rho_x)(1+rho_p)(M^2)^2     = " << r.m_squared_form_value << "\n";
  os << "  bracket                       [" << r.bracket_lower << ", " << r.bracket_upper
     << ")  (lower end is approximate)\n";
  if (r.limits) {
    os << "  floor Delta(p_sum) (pump)     = " << r.limits->dp_sum_min_pump << " hbar/m\n";
    os << "  floor Delta(x diff) (diverg.) = " << r.limits->dx_diff_min_divergence * 1e6
       << " um\n";
    os << "  floor Delta(x diff) (crystal) = " << r.limits->dx_diff_min_crystal * 1e6 << " um\n";
    os << "  product floor                 = " << r.limits->product_floor << " hbar^2\n";
  }
  if (r.floor) os << "  measured / floor              = " << r.floor->ratio << "\n";
  if (r.deconvolved_product)
    os << "  product, probe deconvolved    = " << *r.deconvolved_product << " hbar^2\n";
  os << "  verdict                       " << to_string(r.verdict) << "\n";
  for (const auto& w : r.warnings) os << "  warning: " << w << "\n";
  return os.str();
}

}  // namespace biphoton
