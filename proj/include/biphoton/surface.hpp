#pragma once

// Gaussian coincidence-rate surfaces in the two fit parameterizations,
// evaluated in whatever (normalized) units the caller supplies.
//
// Internal parameter vectors hold unconstrained values:
//   Covariance: [c1, c2, ln r, atanh(rho), ln sigma_1, ln sigma_2]
//   Rotated:    [c1, c2, ln r, alpha,      ln sigma_m, ln sigma_n]

#include <array>
#include <cmath>

namespace biphoton {

enum class FitForm { Rotated, Covariance };

inline constexpr int kSurfaceParams = 6;
using SurfaceParams = std::array<double, kSurfaceParams>;
using SurfaceGradient = std::array<double, kSurfaceParams>;

/// One observation: rate at (x1, x2) with least-squares weight.
struct FitSample {
  double x1 = 0.0;
  double x2 = 0.0;
  double rate = 0.0;
  double weight = 1.0;
};

inline double surface_value(FitForm form, const SurfaceParams& p, double x1, double x2) {
  const double d1 = x1 - p[0];
  const double d2 = x2 - p[1];
  const double r = std::exp(p[2]);
  double q;
  if (form == FitForm::Covariance) {
    const double rho = std::tanh(p[3]);
    const double u1 = d1 * std::exp(-p[4]);
    const double u2 = d2 * std::exp(-p[5]);
    q = (u1 * u1 - 2.0 * rho * u1 * u2 + u2 * u2) / (1.0 - rho * rho);
  } else {
    const double c = std::cos(p[3]);
    const double s = std::sin(p[3]);
    const double xm = (d1 * c - d2 * s) * std::exp(-p[4]);
    const double yn = (d1 * s + d2 * c) * std::exp(-p[5]);
    q = xm * xm + yn * yn;
  }
  return r * std::exp(-0.5 * q);
}

/// Value plus analytic gradient with respect to the internal parameters.
inline double surface_value_gradient(FitForm form, const SurfaceParams& p, double x1, double x2,
                                     SurfaceGradient& grad) {
  const double d1 = x1 - p[0];
  const double d2 = x2 - p[1];
  const double r = std::exp(p[2]);
  double q;
  SurfaceGradient dq{};
  if (form == FitForm::Covariance) {
    const double rho = std::tanh(p[3]);
    const double inv_s1 = std::exp(-p[4]);
    const double inv_s2 = std::exp(-p[5]);
    const double u1 = d1 * inv_s1;
    const double u2 = d2 * inv_s2;
    const double a = 1.0 / (1.0 - rho * rho);
    q = a * (u1 * u1 - 2.0 * rho * u1 * u2 + u2 * u2);
    const double g1 = 2.0 * a * (u1 - rho * u2);
    const double g2 = 2.0 * a * (u2 - rho * u1);
    dq[0] = -g1 * inv_s1;
    dq[1] = -g2 * inv_s2;
    dq[3] = 2.0 * rho * q - 2.0 * u1 * u2;
    dq[4] = -g1 * u1;
    dq[5] = -g2 * u2;
  } else {
    const double c = std::cos(p[3]);
    const double s = std::sin(p[3]);
    const double inv_m2 = std::exp(-2.0 * p[4]);
    const double inv_n2 = std::exp(-2.0 * p[5]);
    const double xm = d1 * c - d2 * s;
    const double yn = d1 * s + d2 * c;
    q = xm * xm * inv_m2 + yn * yn * inv_n2;
    dq[0] = -2.0 * (xm * c * inv_m2 + yn * s * inv_n2);
    dq[1] = 2.0 * (xm * s * inv_m2 - yn * c * inv_n2);
    dq[3] = 2.0 * xm * yn * (inv_n2 - inv_m2);
    dq[4] = -2.0 * xm * xm * inv_m2;
    dq[5] = -2.0 * yn * yn * inv_n2;
  }
  const double f = r * std::exp(-0.5 * q);
  for (int k = 0; k < kSurfaceParams; ++k) grad[k] = -0.5 * f * dq[k];
  grad[2] = f;
  return f;
}

}  // namespace biphoton
