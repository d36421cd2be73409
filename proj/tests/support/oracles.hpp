#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library under test.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

/// Composite 8-point Gauss-Legendre rule over [a, b]^2 with `panels` panels per side.
inline double quadrature_2d(const std::function<double(double, double)>& f, double a, double b,
                            int panels) {
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double ci = a + (i + 0.5) * h;
    for (int j = 0; j < panels; ++j) {
      const double cj = a + (j + 0.5) * h;
      double cell = 0.0;
      for (std::size_t p = 0; p < 8; ++p)
        for (std::size_t q = 0; q < 8; ++q)
          cell += kGlWeights[p] * kGlWeights[q] *
                  f(ci + 0.5 * h * kGlNodes[p], cj + 0.5 * h * kGlNodes[q]);
      total += cell * 0.25 * h * h;
    }
  }
  return total;
}

/// Textbook bivariate normal density written out from the quadratic form.
inline double bivariate_normal(double s1, double s2, double rho, double x1, double x2) {
  const double z1 = x1 / s1, z2 = x2 / s2;
  const double q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (1.0 - rho * rho);
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * s1 * s2 * std::sqrt(1.0 - rho * rho));
}

struct Pair {
  double x1;
  double x2;
};

/// Correlated pairs from two independent standard normals (Cholesky factor).
inline std::vector<Pair> sample_pairs(double s1, double s2, double rho, std::size_t n,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<Pair> out(n);
  const double c = std::sqrt(1.0 - rho * rho);
  for (auto& p : out) {
    const double a = z(rng), b = z(rng);
    p = {s1 * a, s2 * (rho * a + c * b)};
  }
  return out;
}

struct MomentEstimate {
  double value;
  double standard_error;
};

/// Sample standard deviation with its large-sample standard error. The
/// error uses the sample fourth moment, so it is valid for any shape.
inline MomentEstimate sample_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = (x - m) * (x - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  const double var_se = std::sqrt((m4 - m2 * m2) / n);
  const double s = std::sqrt(m2);
  return {s, var_se / (2.0 * s)};
}

/// Fits ln y = c0 + c1 x + c2 x^2 by least squares and returns the Gaussian
/// width sqrt(-1 / (2 c2)). Requires y > 0 at every sample.
inline double gaussian_width_1d(const std::vector<double>& x, const std::vector<double>& y) {
  double s[5] = {0, 0, 0, 0, 0}, t[3] = {0, 0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double l = std::log(y[i]);
    double p = 1.0;
    for (int k = 0; k < 5; ++k) {
      s[k] += p;
      if (k < 3) t[k] += p * l;
      p *= x[i];
    }
  }
  // 3x3 normal equations solved by Cramer's rule.
  const double a[3][3] = {{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  double m2[3][3];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m2[r][c] = c == 2 ? t[r] : a[r][c];
  const double c2 = det3(m2) / det3(a);
  return std::sqrt(-1.0 / (2.0 * c2));
}

/// Weighted version for noisy counts: y are counts, the fit uses points with
/// y > 0 and weights y (the variance of ln y is about 1/y).
inline double gaussian_width_1d_counts(const std::vector<double>& x, const std::vector<double>& y) {
  double s[5] = {0, 0, 0, 0, 0}, t[3] = {0, 0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] <= 0.0) continue;
    const double l = std::log(y[i]);
    double p = y[i];
    for (int k = 0; k < 5; ++k) {
      s[k] += p;
      if (k < 3) t[k] += p * l;
      p *= x[i];
    }
  }
  const double a[3][3] = {{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  double m2[3][3];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m2[r][c] = c == 2 ? t[r] : a[r][c];
  return std::sqrt(-1.0 / (2.0 * det3(m2) / det3(a)));
}

/// Ordinary least-squares slope with its standard error.
struct Regression {
  double slope;
  double intercept;
  double slope_se;
};

inline Regression linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                             const std::vector<double>& sigma) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (sigma[i] * sigma[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double d = sw * sxx - sx * sx;
  return {(sw * sxy - sx * sy) / d, (sxx * sy - sx * sxy) / d, std::sqrt(sw / d)};
}

/// Central difference of f at x along coordinate k.
template <class F, class V>
double central_difference(F&& f, V x, std::size_t k, double h) {
  V a = x, b = x;
  a[k] += h;
  b[k] -= h;
  return (f(a) - f(b)) / (2.0 * h);
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace oracle
