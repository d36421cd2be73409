// Serial versus OpenMP timings of the simulation and fitting kernels.
// Usage: bench_kernels [points] [repeats]

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "biphoton/kernels.hpp"

using namespace biphoton;
using namespace biphoton::kernels;

namespace {

double best_of(int repeats, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial_ms, double omp_ms) {
  std::printf("%-22s %10.3f %10.3f %8.2fx\n", name, serial_ms, omp_ms, serial_ms / omp_ms);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;

  RateKernel kernel;
  kernel.axis = GaussianTerm::from_covariance(0.0, 0.0, 36e-12, 36e-12, 0.53 * 36e-12);
  kernel.orth = GaussianTerm::from_covariance(0.0, 0.0, 36e-12, 36e-12, 0.45 * 36e-12);
  kernel.has_orth = true;
  kernel.peak_coincidence_rate = 100.0;
  kernel.peak_singles_rate = 2000.0;
  kernel.dark_rate = 25.0;

  std::vector<ProbePosition> positions(n);
  std::vector<FitSample> samples(n);
  const std::size_t side = static_cast<std::size_t>(std::sqrt(static_cast<double>(n))) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = -10e-6 + 20e-6 * static_cast<double>(i % side) / static_cast<double>(side);
    const double b = -10e-6 + 20e-6 * static_cast<double>(i / side) / static_cast<double>(side);
    positions[i] = {a, 0.0, b};
    samples[i] = {a / 6e-6, b / 6e-6, 0.0, 1.0};
  }
  std::vector<Rates> rates(n);
  std::vector<Counts> counts(n);
  const SurfaceParams params{0.01, -0.02, 1.0, 0.55, 0.02, -0.03};
  for (std::size_t i = 0; i < n; ++i)
    samples[i].rate = surface_value(FitForm::Covariance, {0.0, 0.0, 1.0, 0.6, 0.0, 0.0},
                                    samples[i].x1, samples[i].x2);

  std::printf("%zu points, best of %d, %d OpenMP threads\n", n, repeats, omp_get_max_threads());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  row("expected_rates",
      best_of(repeats, [&] { serial::expected_rates(kernel, positions, rates); }),
      best_of(repeats, [&] { omp::expected_rates(kernel, positions, rates); }));
  row("sample_counts",
      best_of(repeats, [&] { serial::sample_counts(7, rates, 1.0, counts); }),
      best_of(repeats, [&] { omp::sample_counts(7, rates, 1.0, counts); }));
  volatile double sink = 0.0;
  for (FitForm form : {FitForm::Covariance, FitForm::Rotated}) {
    const char* tag = form == FitForm::Covariance ? "covariance" : "rotated";
    char name[64];
    std::snprintf(name, sizeof name, "objective/%s", tag);
    row(name, best_of(repeats, [&] { sink = sink + serial::objective(form, params, samples); }),
        best_of(repeats, [&] { sink = sink + omp::objective(form, params, samples); }));
    std::snprintf(name, sizeof name, "normal_eq/%s", tag);
    row(name,
        best_of(repeats, [&] { sink = sink + serial::normal_equations(form, params, samples).chi2; }),
        best_of(repeats, [&] { sink = sink + omp::normal_equations(form, params, samples).chi2; }));
  }
  return 0;
}
