#pragma once

// Data-parallel inner loops. Every kernel exists twice with identical
// signatures: `serial::` is the plain reference loop, `omp::` the OpenMP
// version used by the library. Random draws are keyed on (seed, point index),
// so both produce bit-identical counts for any thread count.

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "biphoton/surface.hpp"

namespace biphoton::kernels {

struct ProbePosition {
  double active_axis = 0.0;
  double active_orth = 0.0;
  double passive = 0.0;
};

struct Rates {
  double singles_active = 0.0;
  double singles_passive = 0.0;
  double coincidences = 0.0;
};

struct Counts {
  std::int64_t singles_active = 0;
  std::int64_t singles_passive = 0;
  std::int64_t coincidences = 0;
};

/// Bivariate Gaussian in measurement-plane coordinates, stored as the
/// precision matrix entries and the marginal variances.
struct GaussianTerm {
  double center_1 = 0.0;
  double center_2 = 0.0;
  double prec_11 = 1.0;
  double prec_12 = 0.0;
  double prec_22 = 1.0;
  double var_1 = 1.0;
  double var_2 = 1.0;

  static GaussianTerm from_covariance(double center_1, double center_2, double var_1,
                                      double var_2, double cov_12);

  double relative(double x1, double x2) const {
    const double d1 = x1 - center_1;
    const double d2 = x2 - center_2;
    return std::exp(-0.5 * (prec_11 * d1 * d1 + 2.0 * prec_12 * d1 * d2 + prec_22 * d2 * d2));
  }
  double marginal_1(double x1) const {
    const double d = x1 - center_1;
    return std::exp(-0.5 * d * d / var_1);
  }
  double marginal_2(double x2) const {
    const double d = x2 - center_2;
    return std::exp(-0.5 * d * d / var_2);
  }
};

/// Rate model of one probe pair. The orthogonal term, when present, is the
/// distribution along the other transverse axis with the passive probe
/// centred there.
struct RateKernel {
  GaussianTerm axis;
  GaussianTerm orth;
  bool has_orth = false;
  double peak_coincidence_rate = 0.0;
  double peak_singles_rate = 0.0;
  double dark_rate = 0.0;
  double accidental_rate = 0.0;

  Rates at(const ProbePosition& pos) const;
};

/// 64-bit seed for point `index` of stream `stream`.
std::uint64_t point_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Poisson draw of all three channels with coincidences capped by the
/// smaller singles count (binomial redraw when violated).
Counts draw_counts(std::uint64_t point_seed, const Rates& rates, double dwell_s);

struct NormalEquations {
  Eigen::Matrix<double, kSurfaceParams, kSurfaceParams> jtj =
      Eigen::Matrix<double, kSurfaceParams, kSurfaceParams>::Zero();
  Eigen::Matrix<double, kSurfaceParams, 1> jtr = Eigen::Matrix<double, kSurfaceParams, 1>::Zero();
  double chi2 = 0.0;

  void add(const NormalEquations& other);
};

namespace serial {
void expected_rates(const RateKernel& kernel, std::span<const ProbePosition> positions,
                    std::span<Rates> out);
void sample_counts(std::uint64_t seed, std::span<const Rates> rates, double dwell_s,
                   std::span<Counts> out);
double objective(FitForm form, const SurfaceParams& params, std::span<const FitSample> samples);
NormalEquations normal_equations(FitForm form, const SurfaceParams& params,
                                 std::span<const FitSample> samples);
}  // namespace serial

namespace omp {
void expected_rates(const RateKernel& kernel, std::span<const ProbePosition> positions,
                    std::span<Rates> out);
void sample_counts(std::uint64_t seed, std::span<const Rates> rates, double dwell_s,
                   std::span<Counts> out);
/// Reductions use fixed-size blocks summed in order, so the result does not
/// depend on the number of threads.
double objective(FitForm form, const SurfaceParams& params, std::span<const FitSample> samples);
NormalEquations normal_equations(FitForm form, const SurfaceParams& params,
                                 std::span<const FitSample> samples);
}  // namespace omp

inline constexpr std::size_t kReductionBlock = 256;

}  // namespace biphoton::kernels
