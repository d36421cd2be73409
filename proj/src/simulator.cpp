#include "biphoton/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace biphoton {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

std::vector<double> symmetric_grid(int points, double spacing) {
  std::vector<double> out(static_cast<std::size_t>(points));
  const double mid = 0.5 * (points - 1);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = (i - mid) * spacing;
  return out;
}

kernels::GaussianTerm term_from_model(const CorrelationModel& m, double scale) {
  const auto& c = m.cov();
  return kernels::GaussianTerm::from_covariance(m.center_1() * scale, m.center_2() * scale,
                                                c.var_1 * scale * scale, c.var_2 * scale * scale,
                                                c.cov_12 * scale * scale);
}

}  // namespace

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::LineScan ? "line" : "grid";
}

Protocol parse_protocol(std::string_view text) {
  if (text == "line" || text == "LineScan") return Protocol::LineScan;
  if (text == "grid" || text == "FullGrid") return Protocol::FullGrid;
  throw DomainError("unknown scan protocol '" + std::string(text) + "'");
}

std::vector<double> ScanGrid::axis_positions() const {
  return symmetric_grid(points_axis, spacing_axis_m);
}

std::vector<double> ScanGrid::orth_positions() const {
  return symmetric_grid(points_orth, spacing_orth_m);
}

void ScanPlan::validate() const {
  require(grid.points_axis >= 2, "scan needs at least two points along the axis");
  require(grid.spacing_axis_m > 0.0, "grid spacing must be positive");
  require(dwell_s > 0.0, "dwell time must be positive");
  require(drift_sigma_m >= 0.0, "drift sigma must be nonnegative");
  require(!passive_positions_m.empty(), "scan needs at least one passive position");
  if (protocol == Protocol::FullGrid) {
    require(grid.points_orth >= 2, "full grid needs at least two orthogonal points");
    require(grid.spacing_orth_m > 0.0, "orthogonal grid spacing must be positive");
  }
}

std::size_t ScanPlan::point_count() const {
  const std::size_t per_line = static_cast<std::size_t>(grid.points_axis) *
                               (protocol == Protocol::FullGrid
                                    ? static_cast<std::size_t>(grid.points_orth)
                                    : std::size_t{1});
  return per_line * passive_positions_m.size();
}

std::vector<double> centered_positions(int count, double half_span_m) {
  require(count >= 1, "need at least one position");
  if (count == 1) return {0.0};
  return symmetric_grid(count, 2.0 * half_span_m / (count - 1));
}

void DetectorSpec::validate() const {
  require(fiber_mode_field_diameter_m >= 0.0, "mode field diameter must be nonnegative");
  require(peak_coincidence_rate_hz >= 0.0 && peak_singles_rate_hz >= 0.0 &&
              dark_rate_hz >= 0.0 && accidental_rate_hz >= 0.0,
          "rates must be nonnegative");
}

void ScanRecord::validate() const {
  for (const auto& p : points) {
    require(p.singles_active >= 0 && p.singles_passive >= 0 && p.coincidences >= 0,
            "counts must be nonnegative");
    require(p.coincidences <= std::min(p.singles_active, p.singles_passive),
            "coincidences exceed singles");
  }
}

std::int64_t ScanRecord::total_coincidences() const {
  std::int64_t n = 0;
  for (const auto& p : points) n += p.coincidences;
  return n;
}

std::int64_t ScanRecord::max_coincidences() const {
  std::int64_t n = 0;
  for (const auto& p : points) n = std::max(n, p.coincidences);
  return n;
}

CorrelationModel blurred_model(const CorrelationModel& model, const DetectorSpec& det,
                               const OpticalTrain& train) {
  const double blur = det.fiber_mode_field_diameter_m / 4.0 *
                      measurement_to_model_scale(model.plane(), train);
  const double b2 = blur * blur;
  auto cov = model.cov();
  cov.var_1 += b2;
  cov.var_2 += b2;
  return model.with_covariance(cov);
}

kernels::Rates expected_rates(const CorrelationModel& model, const DetectorSpec& det,
                              double active_pos, double passive_pos) {
  if (model.degenerate())
    throw DegenerateCovarianceError("rates of a |rho| = 1 model are not representable");
  kernels::RateKernel k;
  k.axis = term_from_model(model, 1.0);
  k.peak_coincidence_rate = det.peak_coincidence_rate_hz;
  k.peak_singles_rate = det.peak_singles_rate_hz;
  k.dark_rate = det.dark_rate_hz;
  k.accidental_rate = det.accidental_rate_hz;
  return k.at({active_pos, 0.0, passive_pos});
}

kernels::RateKernel make_rate_kernel(const CorrelationModel& model,
                                     const std::optional<CorrelationModel>& orthogonal,
                                     const DetectorSpec& det, const OpticalTrain& train) {
  det.validate();
  if (model.degenerate())
    throw DegenerateCovarianceError("rates of a |rho| = 1 model are not representable");
  const double to_meas = 1.0 / measurement_to_model_scale(model.plane(), train);
  kernels::RateKernel k;
  k.axis = term_from_model(model, to_meas);
  if (orthogonal) {
    require(orthogonal->plane() == model.plane(), "orthogonal model must share the plane");
    if (orthogonal->degenerate())
      throw DegenerateCovarianceError("rates of a |rho| = 1 model are not representable");
    k.orth = term_from_model(*orthogonal, to_meas);
    k.has_orth = true;
  }
  k.peak_coincidence_rate = det.peak_coincidence_rate_hz;
  k.peak_singles_rate = det.peak_singles_rate_hz;
  k.dark_rate = det.dark_rate_hz;
  k.accidental_rate = det.accidental_rate_hz;
  return k;
}

std::vector<kernels::ProbePosition> plan_positions(const ScanPlan& plan) {
  plan.validate();
  const auto axis = plan.grid.axis_positions();
  const std::vector<double> orth =
      plan.protocol == Protocol::FullGrid ? plan.grid.orth_positions() : std::vector<double>{0.0};
  std::vector<kernels::ProbePosition> out;
  out.reserve(plan.point_count());
  for (double passive : plan.passive_positions_m)
    for (double o : orth)
      for (double a : axis) out.push_back({a, o, passive});
  return out;
}

std::vector<double> drift_offsets(const ScanPlan& plan, std::uint64_t seed) {
  std::vector<double> out(plan.passive_positions_m.size(), 0.0);
  if (plan.drift_sigma_m <= 0.0) return out;
  std::mt19937_64 rng(kernels::point_seed(seed, 1, 0));
  std::normal_distribution<double> step(0.0, plan.drift_sigma_m);
  double offset = 0.0;
  for (auto& o : out) {
    offset += step(rng);
    o = offset;
  }
  return out;
}

namespace {

CorrelationModel source_for(const CorrelationModel& model, const DetectorSpec& det,
                            const OpticalTrain& train, const SimulationOptions& options) {
  return options.apply_probe_blur ? blurred_model(model, det, train) : model;
}

kernels::RateKernel plan_kernel(const ScanPlan& plan, const CorrelationModel& model,
                                const DetectorSpec& det, const OpticalTrain& train,
                                const SimulationOptions& options) {
  require(plan.plane == model.plane(), "scan plan and model planes differ");
  require(plan.axis == model.axis(), "scan plan and model axes differ");
  train.validate();
  std::optional<CorrelationModel> orth;
  if (plan.protocol == Protocol::FullGrid) {
    const CorrelationModel& o = options.orthogonal ? *options.orthogonal : model;
    orth = source_for(o, det, train, options);
  }
  return make_rate_kernel(source_for(model, det, train, options), orth, det, train);
}

}  // namespace

std::vector<kernels::Rates> expected_plan_rates(const ScanPlan& plan, const CorrelationModel& model,
                                                const DetectorSpec& det, const OpticalTrain& train,
                                                const SimulationOptions& options) {
  const auto kernel = plan_kernel(plan, model, det, train, options);
  const auto positions = plan_positions(plan);
  std::vector<kernels::Rates> rates(positions.size());
  kernels::omp::expected_rates(kernel, positions, rates);
  return rates;
}

ScanRecord run_scan(const ScanPlan& plan, const CorrelationModel& model, const DetectorSpec& det,
                    const OpticalTrain& train, std::uint64_t seed,
                    const SimulationOptions& options) {
  const auto kernel = plan_kernel(plan, model, det, train, options);
  const auto positions = plan_positions(plan);

  // Pointing drift shifts the whole beam, so both probes see the same offset.
  auto shifted = positions;
  const auto offsets = drift_offsets(plan, seed);
  const std::size_t per_line = positions.size() / plan.passive_positions_m.size();
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    const double d = offsets[i / per_line];
    shifted[i].active_axis -= d;
    shifted[i].passive -= d;
  }

  std::vector<kernels::Rates> rates(positions.size());
  kernels::omp::expected_rates(kernel, shifted, rates);
  std::vector<kernels::Counts> counts(positions.size());
  kernels::omp::sample_counts(seed, rates, plan.dwell_s, counts);

  ScanRecord record;
  record.plan = plan;
  record.seed = seed;
  record.points.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    auto& p = record.points[i];
    const auto& pos = positions[i];
    p.active_x = plan.axis == Axis::X ? pos.active_axis : pos.active_orth;
    p.active_y = plan.axis == Axis::X ? pos.active_orth : pos.active_axis;
    p.passive = pos.passive;
    p.singles_active = counts[i].singles_active;
    p.singles_passive = counts[i].singles_passive;
    p.coincidences = counts[i].coincidences;
  }
  return record;
}

std::vector<ScanRecord> run_full_grid(const ScanPlan& plan, const CorrelationModel& model,
                                      const DetectorSpec& det, const OpticalTrain& train,
                                      std::uint64_t seed, const SimulationOptions& options) {
  require(plan.protocol == Protocol::FullGrid, "run_full_grid needs a FullGrid plan");
  const ScanRecord all = run_scan(plan, model, det, train, seed, options);
  const std::size_t per_map = all.points.size() / plan.passive_positions_m.size();
  std::vector<ScanRecord> maps;
  maps.reserve(plan.passive_positions_m.size());
  for (std::size_t k = 0; k < plan.passive_positions_m.size(); ++k) {
    ScanRecord r;
    r.plan = plan;
    r.plan.passive_positions_m = {plan.passive_positions_m[k]};
    r.seed = seed;
    r.model_tag = all.model_tag;
    r.points.assign(all.points.begin() + static_cast<std::ptrdiff_t>(k * per_map),
                    all.points.begin() + static_cast<std::ptrdiff_t>((k + 1) * per_map));
    maps.push_back(std::move(r));
  }
  return maps;
}

namespace {

template <class CountOf>
Centroid weighted_centroid(const ScanRecord& record, CountOf count_of) {
  const Axis axis = record.plan.axis;
  double total = 0.0;
  double first = 0.0;
  for (const auto& p : record.points) {
    const double c = static_cast<double>(count_of(p));
    total += c;
    first += c * p.active_axis(axis);
  }
  Centroid out;
  out.total = total;
  if (total <= 0.0) return out;
  out.mean = first / total;
  double spread = 0.0;
  for (const auto& p : record.points) {
    const double d = p.active_axis(axis) - out.mean;
    spread += static_cast<double>(count_of(p)) * d * d;
  }
  out.standard_error = std::sqrt(spread) / total;
  return out;
}

}  // namespace

Centroid coincidence_centroid(const ScanRecord& record) {
  return weighted_centroid(record, [](const ScanPoint& p) { return p.coincidences; });
}

Centroid singles_centroid(const ScanRecord& record) {
  return weighted_centroid(record, [](const ScanPoint& p) { return p.singles_active; });
}

}  // namespace biphoton
