#include <vector>

#include "biphoton/kernels.hpp"

namespace biphoton::kernels::omp {

namespace {

std::size_t block_count(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

template <class T>
std::span<const T> block(std::span<const T> all, std::size_t b) {
  const std::size_t begin = b * kReductionBlock;
  const std::size_t len = std::min(kReductionBlock, all.size() - begin);
  return all.subspan(begin, len);
}

}  // namespace

void expected_rates(const RateKernel& kernel, std::span<const ProbePosition> positions,
                    std::span<Rates> out) {
  const auto n = static_cast<std::ptrdiff_t>(positions.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = kernel.at(positions[i]);
}

void sample_counts(std::uint64_t seed, std::span<const Rates> rates, double dwell_s,
                   std::span<Counts> out) {
  const auto n = static_cast<std::ptrdiff_t>(rates.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[i] = draw_counts(point_seed(seed, 0, static_cast<std::uint64_t>(i)), rates[i], dwell_s);
}

double objective(FitForm form, const SurfaceParams& params, std::span<const FitSample> samples) {
  const std::size_t nb = block_count(samples.size());
  std::vector<double> partial(nb, 0.0);
  const auto nbi = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nbi; ++b)
    partial[b] = serial::objective(form, params, block(samples, static_cast<std::size_t>(b)));
  double chi2 = 0.0;
  for (double p : partial) chi2 += p;
  return chi2;
}

NormalEquations normal_equations(FitForm form, const SurfaceParams& params,
                                 std::span<const FitSample> samples) {
  const std::size_t nb = block_count(samples.size());
  std::vector<NormalEquations> partial(nb);
  const auto nbi = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nbi; ++b)
    partial[b] =
        serial::normal_equations(form, params, block(samples, static_cast<std::size_t>(b)));
  NormalEquations total;
  for (const auto& p : partial) total.add(p);
  return total;
}

}  // namespace biphoton::kernels::omp
