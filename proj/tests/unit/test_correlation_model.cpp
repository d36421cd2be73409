#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "biphoton/correlation_model.hpp"
#include "biphoton/serialization.hpp"

using namespace biphoton;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

CorrelationModel make(double s1, double s2, double rho, double c1 = 0.0, double c2 = 0.0) {
  return {Plane::NearField, Axis::X, c1, c2, covariance_from_sigmas(s1, s2, rho)};
}

double rotated_q(double alpha, double sm, double sn, double d1, double d2) {
  const double xm = d1 * std::cos(alpha) - d2 * std::sin(alpha);
  const double yn = d1 * std::sin(alpha) + d2 * std::cos(alpha);
  return xm * xm / (sm * sm) + yn * yn / (sn * sn);
}

}  // namespace

TEST_SUITE("correlation_model") {

TEST_CASE("covariance from widths") {
  const auto a = covariance_from_sigmas(1, 1, 0);
  CHECK(a.var_1 == 1.0);
  CHECK(a.var_2 == 1.0);
  CHECK(a.cov_12 == 0.0);

  const double s = 39.7e-6;
  const auto b = covariance_from_sigmas(s, s, 0.53);
  CHECK(b.cov_12 == Approx(0.53 * s * s).epsilon(1e-14));
  CHECK(b.rho() == Approx(0.53).epsilon(1e-14));

  const auto c = covariance_from_sigmas(2, 3, -0.5);
  CHECK(c.cov_12 == Approx(-3.0));
  CHECK(c.determinant() == Approx(27.0));
  CHECK(c.determinant() == Approx(c.var_1 * c.var_2 * (1 - 0.25)));

  CHECK_THROWS_AS(covariance_from_sigmas(0, 1, 0), DomainError);
  CHECK_THROWS_AS(covariance_from_sigmas(1, -1, 0), DomainError);
  CHECK_THROWS_AS(covariance_from_sigmas(1, 1, 1.01), DomainError);
  CHECK_THROWS_AS(covariance_from_sigmas(1, 1, std::nan("")), DomainError);
}

TEST_CASE("covariance validation rejects indefinite matrices") {
  CHECK_THROWS_AS((CovarianceMatrix2{1.0, 1.0, 1.5}.validate()), DomainError);
  CHECK_THROWS_AS((CovarianceMatrix2{-1.0, 1.0, 0.0}.validate()), DomainError);
  CHECK_NOTHROW((CovarianceMatrix2{1.0, 4.0, 2.0}.validate()));
}

TEST_CASE("standard normal peak") {
  CHECK(pdf(make(1, 1, 0), 0, 0) == Approx(1.0 / (2.0 * kPi)).epsilon(1e-15));
}

TEST_CASE("density matches the textbook bivariate normal") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3), w(0.2, 4), r(-0.95, 0.95);
  for (int i = 0; i < 50; ++i) {
    const double s1 = w(rng), s2 = w(rng), rho = r(rng), c1 = u(rng), c2 = u(rng);
    const auto m = make(s1, s2, rho, c1, c2);
    const double x1 = u(rng), x2 = u(rng);
    CHECK(oracle::rel_diff(pdf(m, x1, x2), oracle::bivariate_normal(s1, s2, rho, x1 - c1, x2 - c2)) <
          1e-13);
  }
}

TEST_CASE("normalization by quadrature") {
  const auto m = make(1, 1, 0.5);
  const double total = oracle::quadrature_2d([&](double a, double b) { return pdf(m, a, b); }, -8, 8, 64);
  CHECK(std::abs(total - 1.0) < 1e-6);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.5, 2.0), r(-0.95, 0.95);
  for (int i = 0; i < 8; ++i) {
    const double s1 = w(rng), s2 = w(rng), rho = r(rng);
    const auto g = make(s1, s2, rho);
    // Integrate in standardized coordinates over +-8 sigma.
    const double t = oracle::quadrature_2d(
        [&](double a, double b) { return s1 * s2 * pdf(g, a * s1, b * s2); }, -8, 8, 64);
    CHECK(std::abs(t - 1.0) < 1e-6);
  }
}

TEST_CASE("swap symmetry") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  const auto m = make(1.3, 0.7, -0.4, 0.2, -0.1);
  const auto swapped = make(0.7, 1.3, -0.4, -0.1, 0.2);
  for (int i = 0; i < 20; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(oracle::rel_diff(pdf(m, a, b), pdf(swapped, b, a)) < 1e-14);
  }
}

TEST_CASE("degenerate models are data but have no density") {
  const auto m = make(1, 1, 1.0);
  CHECK(m.degenerate());
  CHECK_THROWS_AS(pdf(m, 0, 0), DegenerateCovarianceError);
  CHECK_THROWS_AS(relative_density(m, 0, 0), DegenerateCovarianceError);
  CHECK_FALSE(make(1, 1, 0.999).degenerate());
}

TEST_CASE("equal-width closed forms agree with the general density") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.5, 2.5), r(-0.9, 0.9);
  for (int i = 0; i < 20; ++i) {
    const double sigma = 1.7, rho = r(rng);
    const auto m = make(sigma, sigma, rho);
    const double x1 = u(rng), x2 = u(rng);
    const double ref = pdf(m, x1, x2);
    CHECK(oracle::rel_diff(equal_width_pdf_x(sigma, rho, x1, x2), ref) < 1e-12);
    CHECK(oracle::rel_diff(equal_width_pdf_st(sigma, rho, (x1 + x2) / 2, (x2 - x1) / 2), ref) < 1e-12);
    CHECK(oracle::rel_diff(equal_width_pdf_uv(sigma, rho, x1 + x2, x1 - x2), ref) < 1e-12);
  }
}

TEST_CASE("sum and difference widths") {
  const double s = 2.0;
  const auto zero = sum_diff_widths(s, 0.0);
  CHECK(zero.sigma_s == Approx(s / std::sqrt(2.0)));
  CHECK(zero.sigma_t == Approx(s / std::sqrt(2.0)));

  const auto one = sum_diff_widths(s, 1.0);
  CHECK(one.sigma_t == 0.0);
  CHECK(one.sigma_s == Approx(s));

  const auto w = sum_diff_widths(39.7e-6, 0.53);
  CHECK(w.sigma_v == Approx(std::sqrt(2 * 39.7e-6 * 39.7e-6 * 0.47)).epsilon(1e-14));
  CHECK(w.sigma_v == Approx(38.49e-6).epsilon(2e-4));
  CHECK(w.sigma_u == Approx(2 * w.sigma_s));
  CHECK(w.sigma_v == Approx(2 * w.sigma_t));
  CHECK(w.diff_width() == w.sigma_v);

  CHECK_THROWS_AS(sum_diff_widths(-1.0, 0.0), DomainError);
  CHECK_THROWS_AS(sum_diff_widths(1.0, 1.2), DomainError);
}

TEST_CASE("sum and difference widths against sampled pairs") {
  const double s = 39.7e-6, rho = 0.53;
  const auto pairs = oracle::sample_pairs(s, s, rho, 1000000, 2024);
  std::vector<double> diff, half_sum, half_diff;
  for (const auto& p : pairs) {
    diff.push_back(p.x1 - p.x2);
    half_sum.push_back((p.x1 + p.x2) / 2);
    half_diff.push_back((p.x2 - p.x1) / 2);
  }
  const auto w = sum_diff_widths(s, rho);
  const auto sd = oracle::sample_std(diff);
  const auto ss = oracle::sample_std(half_sum);
  const auto st = oracle::sample_std(half_diff);
  CHECK(std::abs(sd.value - w.sigma_v) < 5 * sd.standard_error);
  CHECK(std::abs(ss.value - w.sigma_s) < 5 * ss.standard_error);
  CHECK(std::abs(st.value - w.sigma_t) < 5 * st.standard_error);
}

TEST_CASE("general covariance widths reduce to the equal-width form") {
  const auto c = covariance_from_sigmas(3.0, 3.0, -0.3);
  const auto a = sum_diff_widths(c);
  const auto b = sum_diff_widths(3.0, -0.3);
  CHECK(a.sigma_s == Approx(b.sigma_s));
  CHECK(a.sigma_t == Approx(b.sigma_t));
  const auto u = sum_diff_widths(covariance_from_sigmas(1.0, 2.0, 0.4));
  CHECK(u.sigma_u * u.sigma_u == Approx(1.0 + 4.0 + 2 * 0.4 * 2.0));
  CHECK(u.sigma_v * u.sigma_v == Approx(1.0 + 4.0 - 2 * 0.4 * 2.0));
}

TEST_CASE("correlation from widths") {
  CHECK(rho_from_widths(1, 1) == 0.0);
  const auto w = sum_diff_widths(5.0, 0.8);
  CHECK(rho_from_widths(w.sigma_s, w.sigma_t) == Approx(0.8).epsilon(1e-12));
  CHECK(rho_from_widths(0.875, 0.485) == Approx(0.53).epsilon(2e-3));
  CHECK_THROWS_AS(rho_from_widths(0, 0), DomainError);
  CHECK_THROWS_AS(rho_from_widths(-1, 1), DomainError);
}

TEST_CASE("moment consistency over random inputs") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> w(1e-6, 1e-4), r(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const double s = w(rng), rho = r(rng);
    const auto sw = sum_diff_widths(s, rho);
    CHECK(oracle::rel_diff(sw.sigma_s * sw.sigma_s + sw.sigma_t * sw.sigma_t, s * s) < 1e-14);
    CHECK(std::abs(rho_from_widths(sw.sigma_s, sw.sigma_t) - rho) < 1e-12);
  }
}

TEST_CASE("conditional width") {
  CHECK(conditional_sigma(3.0, 0.0) == Approx(3.0));
  CHECK(conditional_sigma(3.0, 1.0) == 0.0);
  CHECK(conditional_sigma(39.7e-6, 0.53) == Approx(33.66e-6).epsilon(2e-4));

  // Slice of the density at x2 = centre, fitted with a 1D Gaussian.
  const auto m = make(39.7e-6, 39.7e-6, 0.53);
  std::vector<double> x, y;
  for (int i = -40; i <= 40; ++i) {
    x.push_back(i * 2e-6);
    y.push_back(pdf(m, i * 2e-6, 0.0));
  }
  CHECK(oracle::gaussian_width_1d(x, y) == Approx(conditional_sigma(39.7e-6, 0.53)).epsilon(1e-9));
}

TEST_CASE("rotated form: axis-aligned and diagonal cases") {
  const auto a = rotated_to_covariance(RotatedGaussian{0.0, 2.0, 3.0});
  CHECK(a.var_1 == Approx(4.0));
  CHECK(a.var_2 == Approx(9.0));
  CHECK(std::abs(a.cov_12) < 1e-15);

  const double sm = 1.5, sn = 4.0;
  const auto d = rotated_to_covariance(RotatedGaussian{kPi / 4, sm, sn});
  CHECK(d.var_1 == Approx((sm * sm + sn * sn) / 2));
  CHECK(d.var_2 == Approx((sm * sm + sn * sn) / 2));
  // Positive alpha with the major axis on y_n tilts the density onto x2 = x1.
  CHECK(d.cov_12 == Approx((sn * sn - sm * sm) / 2));
}

TEST_CASE("rotated form reproduces the rotated-axis density pointwise") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ang(-kPi / 2 + 1e-3, kPi / 2), w(0.3, 3), u(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const RotatedGaussian g{ang(rng), w(rng), w(rng)};
    const double c1 = u(rng), c2 = u(rng);
    const auto m = rotated_to_covariance(Plane::FarField, Axis::Y, g, c1, c2);
    for (int k = 0; k < 5; ++k) {
      const double x1 = u(rng), x2 = u(rng);
      const double expect = std::exp(-0.5 * rotated_q(g.alpha_rad, g.sigma_m, g.sigma_n, x1 - c1, x2 - c2));
      CHECK(std::abs(relative_density(m, x1, x2) - expect) < 1e-12);
    }
  }
}

TEST_CASE("principal-axis round trip") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ang(-kPi / 2 + 1e-6, kPi / 2), w(0.2, 5);
  int checked = 0;
  while (checked < 100) {
    const double a = w(rng), b = w(rng);
    if (std::abs(a - b) < 1e-3 * (a + b)) continue;
    const auto g = canonical(RotatedGaussian{ang(rng), a, b});
    const auto back = covariance_to_rotated(rotated_to_covariance(g));
    CHECK(std::abs(back.alpha_rad - g.alpha_rad) < 1e-10);
    CHECK(oracle::rel_diff(back.sigma_m, g.sigma_m) < 1e-10);
    CHECK(oracle::rel_diff(back.sigma_n, g.sigma_n) < 1e-10);
    ++checked;
  }
  // Covariance -> rotated -> covariance on random nondegenerate models.
  std::uniform_real_distribution<double> r(-0.95, 0.95);
  for (int i = 0; i < 100; ++i) {
    const auto c = covariance_from_sigmas(w(rng), w(rng), r(rng));
    const auto back = rotated_to_covariance(covariance_to_rotated(c));
    const double scale = std::max(c.var_1, c.var_2);
    CHECK(std::abs(back.var_1 - c.var_1) < 1e-10 * scale);
    CHECK(std::abs(back.var_2 - c.var_2) < 1e-10 * scale);
    CHECK(std::abs(back.cov_12 - c.cov_12) < 1e-10 * scale);
  }
}

TEST_CASE("canonical branch") {
  const auto g = canonical(RotatedGaussian{kPi / 2 + 0.1, 3.0, 1.0});
  CHECK(g.sigma_n >= g.sigma_m);
  CHECK(g.alpha_rad > -kPi / 2);
  CHECK(g.alpha_rad <= kPi / 2);
  CHECK(wrap_alpha(-kPi / 2) == Approx(kPi / 2));
  CHECK(wrap_alpha(kPi) == Approx(0.0));
  // The same density before and after canonicalization.
  const auto a = rotated_to_covariance(RotatedGaussian{kPi / 2 + 0.1, 3.0, 1.0});
  const auto b = rotated_to_covariance(g);
  CHECK(a.var_1 == Approx(b.var_1));
  CHECK(a.var_2 == Approx(b.var_2));
  CHECK(a.cov_12 == Approx(b.cov_12));
}

TEST_CASE("principal axes of the position and momentum models") {
  const auto iso = covariance_to_rotated(make(2.0, 2.0, 0.0));
  CHECK(iso.alpha_rad == 0.0);
  CHECK(iso.sigma_m == Approx(2.0));
  CHECK(iso.sigma_n == Approx(2.0));

  const double s = 39.7e-6;
  const auto near = covariance_to_rotated(make(s, s, 0.53));
  CHECK(near.alpha_deg() == Approx(45.0).epsilon(1e-12));
  CHECK(near.sigma_m == Approx(s * std::sqrt(1 - 0.53)).epsilon(1e-12));
  CHECK(near.sigma_n == Approx(s * std::sqrt(1 + 0.53)).epsilon(1e-12));
  CHECK(near.sigma_m == Approx(27.2e-6).epsilon(2e-3));
  CHECK(near.sigma_n == Approx(49.1e-6).epsilon(2e-3));

  const auto far = covariance_to_rotated(make(15300, 15300, -0.77));
  CHECK(far.alpha_deg() == Approx(-45.0).epsilon(1e-12));

  // Widths of x1 + x2 and x1 - x2 in terms of the principal widths.
  const auto w = sum_diff_widths(make(s, s, 0.53).cov());
  CHECK(w.sigma_u == Approx(std::sqrt(2.0) * near.sigma_n).epsilon(1e-12));
  CHECK(w.sigma_v == Approx(std::sqrt(2.0) * near.sigma_m).epsilon(1e-12));
}

TEST_CASE("json round trip keeps tags and parameters") {
  const CorrelationModel m{Plane::FarField, Axis::Y, 10.0, -20.0, covariance_from_sigmas(15300, 14000, -0.77)};
  const auto back = model_from_json(to_json(m));
  CHECK(back.plane() == Plane::FarField);
  CHECK(back.axis() == Axis::Y);
  CHECK(back.center_1() == 10.0);
  CHECK(back.center_2() == -20.0);
  CHECK(back.sigma_1() == Approx(15300).epsilon(1e-15));
  CHECK(back.sigma_2() == Approx(14000).epsilon(1e-15));
  CHECK(back.rho() == Approx(-0.77).epsilon(1e-15));
}

}  // TEST_SUITE
