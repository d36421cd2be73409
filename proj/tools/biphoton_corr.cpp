// biphoton-corr: simulate scans, fit coincidence maps, evaluate the
// entanglement criteria and export correlation diagrams.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "biphoton/config.hpp"
#include "biphoton/criteria.hpp"
#include "biphoton/diagram.hpp"
#include "biphoton/fitter.hpp"
#include "biphoton/serialization.hpp"
#include "biphoton/simulator.hpp"

namespace fs = std::filesystem;
using namespace biphoton;

namespace {

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kConvergence = 3, kPhysical = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string plane = "all";
  std::string axis = "all";
  std::string form = "rotated";
  std::string weighting = "uniform";
  int max_iterations = 200;
  std::string out;
  std::vector<std::string> records;
  std::string near_fit;
  std::string far_fit;
  std::string dir;
};

std::string tag(Plane p, Axis a) {
  return std::string(to_string(p)) + "_" + std::string(to_string(a));
}

std::vector<Plane> planes(const std::string& s) {
  if (s == "all") return {Plane::NearField, Plane::FarField};
  return {parse_plane(s)};
}

std::vector<Axis> axes(const std::string& s) {
  if (s == "all") return {Axis::X, Axis::Y};
  return {parse_axis(s)};
}

Axis other(Axis a) { return a == Axis::X ? Axis::Y : Axis::X; }

fs::path out_dir(const Options& o, const std::optional<ExperimentConfig>& cfg) {
  fs::path p = !o.out.empty() ? fs::path(o.out) : fs::path(cfg ? cfg->output_directory : "out");
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << text;
}

bool has_fit(const fs::path& dir, Plane p, Axis a) {
  return fs::exists(dir / ("fit_" + tag(p, a) + ".json"));
}

int cmd_simulate(const Options& o) {
  auto cfg = load_config(o.config);
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  const fs::path dir = out_dir(o, cfg);
  int written = 0;
  for (Plane p : planes(o.plane))
    for (Axis a : axes(o.axis)) {
      if (!cfg.has_source(p, a)) continue;
      const auto plan = cfg.scan(p).plan(p, a);
      SimulationOptions opt;
      opt.apply_probe_blur = cfg.apply_probe_blur;
      if (cfg.has_source(p, other(a))) opt.orthogonal = cfg.source(p, other(a));
      // Each plane/axis pair gets its own stream so that subsets reproduce the full run.
      const std::uint64_t s = seed * 4 + static_cast<std::uint64_t>(p) * 2 + static_cast<std::uint64_t>(a);
      auto record = run_scan(plan, cfg.source(p, a), cfg.detector(p), cfg.optics, s, opt);
      record.model_tag = "source." + tag(p, a);
      if (cfg.writes("csv")) {
        std::ofstream os(dir / ("record_" + tag(p, a) + ".csv"));
        write_record_csv(os, record);
      }
      if (cfg.writes("json")) write_json_file((dir / ("record_" + tag(p, a) + ".json")).string(), to_json(record));
      const double peak = static_cast<double>(record.max_coincidences()) / plan.dwell_s;
      double expected_peak = 0.0;
      for (const auto& r : expected_plan_rates(plan, cfg.source(p, a), cfg.detector(p), cfg.optics, opt))
        expected_peak = std::max(expected_peak, r.coincidences);
      std::printf("%s: %zu points, %lld coincidences, highest %.1f /s, expected peak %.1f /s\n",
                  tag(p, a).c_str(), record.points.size(),
                  static_cast<long long>(record.total_coincidences()), peak, expected_peak);
      ++written;
    }
  if (written == 0) throw ConfigError("no source model matches the requested plane/axis");
  return kOk;
}

int cmd_fit(const Options& o) {
  if (o.records.empty()) throw ConfigError("fit needs at least one --record file");
  std::optional<ExperimentConfig> cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  const fs::path dir = out_dir(o, cfg);
  const FitForm form = parse_fit_form(o.form);
  const Weighting weighting = parse_weighting(o.weighting);
  int status = kOk;
  for (const auto& path : o.records) {
    const auto record = read_record_file(path);
    FitOptions fo;
    fo.max_iterations = o.max_iterations;
    const auto f = fit(record, form, weighting, fo);
    const std::string t = tag(f.plane, f.axis);
    write_json_file((dir / ("fit_" + t + ".json")).string(), to_json(f));
    std::ofstream cs(dir / ("contours_" + t + ".csv"));
    write_contours_csv(cs, contour_lines(f));
    std::printf("%s: rho = %.4f, alpha = %.2f deg, sigma_1 = %.4g m, sigma_2 = %.4g m, %s after %d iterations\n",
                t.c_str(), f.rho(), f.rotated.alpha_deg(), f.sigma_1(), f.sigma_2(),
                std::string(to_string(f.status)).c_str(), f.iterations);
    if (!f.converged) {
      std::fprintf(stderr, "fit of %s did not converge (%s, residual %.6g)\n", path.c_str(),
                   std::string(to_string(f.status)).c_str(), f.residual_norm);
      status = kConvergence;
    }
  }
  return status;
}

CriterionReport analyze_pair(const ExperimentConfig& cfg, const FitResult& near,
                             const FitResult& far) {
  if (near.axis != far.axis) throw ConfigError("near and far fits belong to different axes");
  std::optional<DetectorSpec> det;
  if (cfg.detectors.contains(Plane::NearField)) det = cfg.detector(Plane::NearField);
  try {
    return build_report(near.axis, near, far, cfg.optics, det);
  } catch (const OverDeconvolutionError& e) {
    auto r = build_report(near.axis, near, far, cfg.optics, std::nullopt);
    r.warnings.push_back(std::string("deconvolution skipped: ") + e.what());
    return r;
  }
}

int cmd_analyze(const Options& o) {
  if (o.near_fit.empty() || o.far_fit.empty()) throw ConfigError("analyze needs --near and --far");
  const auto cfg = load_config(o.config);
  const fs::path dir = out_dir(o, cfg);
  const auto near = fit_from_json(read_json_file(o.near_fit));
  const auto far = fit_from_json(read_json_file(o.far_fit));
  const auto r = analyze_pair(cfg, near, far);
  write_json_file((dir / ("report_" + std::string(to_string(r.axis)) + ".json")).string(), to_json(r));
  std::cout << format_report(r);
  return r.floor && r.floor->suspicious ? kPhysical : kOk;
}

int cmd_limits(const Options& o) {
  const auto cfg = load_config(o.config);
  const fs::path dir = out_dir(o, cfg);
  const auto lim = physical_limits(cfg.optics);
  Json j = to_json(lim);
  Json warnings = Json::array();
  for (const auto& w : cfg.optics.warnings()) warnings.push_back(w);
  j["warnings"] = warnings;
  write_json_file((dir / "limits.json").string(), j);
  std::printf("momentum-sum floor      %.6g per m (emission %.6g, pump divergence %.6g)\n",
              lim.dp_sum_min_pump, lim.dp_sum_min_emission, lim.dp_sum_min_divergence);
  std::printf("position-diff floor     %.6g m (divergence), %.6g m (crystal thickness)\n",
              lim.dx_diff_min_divergence, lim.dx_diff_min_crystal);
  std::printf("product floor           %.6g hbar^2\n", lim.product_floor);
  std::printf("signal mode M^2         %.6g, bracket floor %.6g\n", lim.mode_m_squared, lim.bracket_floor);
  for (const auto& w : cfg.optics.warnings()) std::printf("warning: %s\n", w.c_str());
  return kOk;
}

void export_diagrams(const fs::path& dir, const ExperimentConfig& cfg, Plane p, Axis a,
                     const FitResult& f, std::ostream& text) {
  const std::string t = tag(p, a);
  const auto measured = f.measurement_model();
  const double half = 4.0 * std::max(measured.cov().sigma_1(), measured.cov().sigma_2());
  {
    std::ofstream os(dir / ("diagram_fit_" + t + ".csv"));
    write_diagram_csv(os, fit_diagram(f, half));
  }
  if (cfg.has_source(p, a)) {
    const auto model = to_measurement_plane(cfg.source(p, a), cfg.optics);
    const auto grid = model_diagram(model, half);
    std::ofstream os(dir / ("diagram_model_" + t + ".csv"));
    write_diagram_csv(os, grid);
    const auto shape = classify(grid);
    text << "  " << t << " model diagram: " << to_string(shape.shape) << ", major axis "
         << shape.major_axis_deg << " deg\n";
  }
  const auto fit_shape = classify(fit_diagram(f, half));
  text << "  " << t << " fitted diagram: " << to_string(fit_shape.shape) << ", major axis "
       << fit_shape.major_axis_deg << " deg\n";
  for (const char* ext : {".json", ".csv"}) {
    const fs::path rec = dir / ("record_" + t + ext);
    if (!fs::exists(rec)) continue;
    std::ofstream os(dir / ("diagram_measured_" + t + ".csv"));
    write_diagram_csv(os, measured_diagram(surface_from_record(read_record_file(rec.string()))));
    break;
  }
}

int cmd_report(const Options& o) {
  const auto cfg = load_config(o.config);
  const fs::path dir = !o.dir.empty() ? fs::path(o.dir) : fs::path(cfg.output_directory);
  if (!fs::is_directory(dir)) throw FormatError("artifact directory " + dir.string() + " not found");
  std::ostringstream text;
  int status = kOk;
  int reports = 0;
  for (Axis a : axes(o.axis)) {
    if (!has_fit(dir, Plane::NearField, a) || !has_fit(dir, Plane::FarField, a)) continue;
    const auto near = fit_from_json(read_json_file((dir / ("fit_" + tag(Plane::NearField, a) + ".json")).string()));
    const auto far = fit_from_json(read_json_file((dir / ("fit_" + tag(Plane::FarField, a) + ".json")).string()));
    const auto r = analyze_pair(cfg, near, far);
    write_json_file((dir / ("report_" + std::string(to_string(a)) + ".json")).string(), to_json(r));
    text << format_report(r) << "Correlation diagrams\n";
    export_diagrams(dir, cfg, Plane::NearField, a, near, text);
    export_diagrams(dir, cfg, Plane::FarField, a, far, text);
    text << "\n";
    if (r.floor && r.floor->suspicious) status = kPhysical;
    ++reports;
  }
  if (reports == 0) throw FormatError("no near/far fit pair found in " + dir.string());
  write_text(dir / "report.txt", text.str());
  std::cout << text.str();
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biphoton space-momentum correlation simulator and analysis"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "experiment config (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", o.out, "output directory");
  };
  auto* sim = app.add_subcommand("simulate", "simulate scan records");
  add_common(sim, true);
  sim->add_option("--seed", o.seed, "RNG seed (overrides the config)");
  sim->add_option("--plane", o.plane, "near, far or all")->check(CLI::IsMember({"near", "far", "all"}));
  sim->add_option("--axis", o.axis, "x, y or all")->check(CLI::IsMember({"x", "y", "all"}));

  auto* fitc = app.add_subcommand("fit", "fit coincidence maps of scan records");
  add_common(fitc, false);
  fitc->add_option("--record,records", o.records, "record files (.csv or .json)");
  fitc->add_option("--form", o.form, "rotated or covariance")->check(CLI::IsMember({"rotated", "covariance"}));
  fitc->add_option("--weighting", o.weighting, "uniform or poisson")->check(CLI::IsMember({"uniform", "poisson"}));
  fitc->add_option("--max-iterations", o.max_iterations, "iteration cap of the fit")->check(CLI::PositiveNumber);

  auto* an = app.add_subcommand("analyze", "evaluate the criteria for a near/far fit pair");
  add_common(an, true);
  an->add_option("--near", o.near_fit, "near-field fit JSON")->required();
  an->add_option("--far", o.far_fit, "far-field fit JSON")->required();

  auto* lim = app.add_subcommand("limits", "physical bounds of the optical setup");
  add_common(lim, true);

  auto* rep = app.add_subcommand("report", "text report and diagram grids from fit artifacts");
  add_common(rep, true);
  rep->add_option("--dir", o.dir, "artifact directory (default: config output directory)");
  rep->add_option("--axis", o.axis, "x, y or all")->check(CLI::IsMember({"x", "y", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*fitc) return cmd_fit(o);
    if (*an) return cmd_analyze(o);
    if (*lim) return cmd_limits(o);
    if (*rep) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
  return kOk;
}
