#include <algorithm>
#include <random>

#include "biphoton/kernels.hpp"

namespace biphoton::kernels {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::int64_t poisson(std::mt19937_64& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

}  // namespace

GaussianTerm GaussianTerm::from_covariance(double center_1, double center_2, double var_1,
                                           double var_2, double cov_12) {
  const double det = var_1 * var_2 - cov_12 * cov_12;
  GaussianTerm g;
  g.center_1 = center_1;
  g.center_2 = center_2;
  g.prec_11 = var_2 / det;
  g.prec_12 = -cov_12 / det;
  g.prec_22 = var_1 / det;
  g.var_1 = var_1;
  g.var_2 = var_2;
  return g;
}

Rates RateKernel::at(const ProbePosition& pos) const {
  Rates r;
  double coinc = axis.relative(pos.active_axis, pos.passive);
  double single_a = axis.marginal_1(pos.active_axis);
  double single_p = axis.marginal_2(pos.passive);
  if (has_orth) {
    coinc *= orth.relative(pos.active_orth, 0.0);
    single_a *= orth.marginal_1(pos.active_orth);
    single_p *= orth.marginal_2(0.0);
  }
  r.coincidences = peak_coincidence_rate * coinc + accidental_rate;
  r.singles_active = peak_singles_rate * single_a + dark_rate;
  r.singles_passive = peak_singles_rate * single_p + dark_rate;
  return r;
}

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

Counts draw_counts(std::uint64_t seed, const Rates& rates, double dwell_s) {
  std::mt19937_64 rng(seed);
  Counts c;
  c.singles_active = poisson(rng, rates.singles_active * dwell_s);
  c.singles_passive = poisson(rng, rates.singles_passive * dwell_s);
  c.coincidences = poisson(rng, rates.coincidences * dwell_s);
  const std::int64_t cap = std::min(c.singles_active, c.singles_passive);
  if (c.coincidences > cap) {
    const double smaller = std::min(rates.singles_active, rates.singles_passive);
    const double q = smaller > 0.0 ? std::min(1.0, rates.coincidences / smaller) : 0.0;
    std::binomial_distribution<std::int64_t> dist(cap, q);
    c.coincidences = dist(rng);
  }
  return c;
}

void NormalEquations::add(const NormalEquations& other) {
  jtj += other.jtj;
  jtr += other.jtr;
  chi2 += other.chi2;
}

namespace serial {

void expected_rates(const RateKernel& kernel, std::span<const ProbePosition> positions,
                    std::span<Rates> out) {
  for (std::size_t i = 0; i < positions.size(); ++i) out[i] = kernel.at(positions[i]);
}

void sample_counts(std::uint64_t seed, std::span<const Rates> rates, double dwell_s,
                   std::span<Counts> out) {
  for (std::size_t i = 0; i < rates.size(); ++i)
    out[i] = draw_counts(point_seed(seed, 0, i), rates[i], dwell_s);
}

double objective(FitForm form, const SurfaceParams& params, std::span<const FitSample> samples) {
  double chi2 = 0.0;
  for (const auto& s : samples) {
    const double r = surface_value(form, params, s.x1, s.x2) - s.rate;
    chi2 += s.weight * r * r;
  }
  return chi2;
}

NormalEquations normal_equations(FitForm form, const SurfaceParams& params,
                                 std::span<const FitSample> samples) {
  NormalEquations ne;
  SurfaceGradient g;
  for (const auto& s : samples) {
    const double f = surface_value_gradient(form, params, s.x1, s.x2, g);
    const double r = f - s.rate;
    const Eigen::Map<const Eigen::Matrix<double, kSurfaceParams, 1>> gv(g.data());
    ne.jtj.selfadjointView<Eigen::Lower>().rankUpdate(gv, s.weight);
    ne.jtr += s.weight * r * gv;
    ne.chi2 += s.weight * r * r;
  }
  ne.jtj = ne.jtj.selfadjointView<Eigen::Lower>();
  return ne;
}

}  // namespace serial

}  // namespace biphoton::kernels
