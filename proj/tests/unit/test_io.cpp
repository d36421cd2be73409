#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "reference.hpp"

#include "biphoton/config.hpp"
#include "biphoton/fitter.hpp"
#include "biphoton/serialization.hpp"

using namespace biphoton;

namespace {

Json reference_json() { return read_json_file(BIPHOTON_REFERENCE_CONFIG); }

ScanRecord small_record() {
  const auto& c = ref::config();
  auto plan = c.scan(Plane::FarField).plan(Plane::FarField, Axis::Y);
  return run_scan(plan, c.source(Plane::FarField, Axis::Y), c.detector(Plane::FarField), c.optics, 3);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("reference config") {
  const auto& c = ref::config();
  CHECK(c.sources.size() == 4);
  CHECK(c.detectors.size() == 2);
  CHECK(c.scan(Plane::NearField).points == 35);
  CHECK(c.scan(Plane::FarField).points == 20);
  CHECK(c.scan(Plane::NearField).passive_positions_m.size() == 13);
  CHECK(c.detector(Plane::NearField).peak_coincidence_rate_hz == 100.0);
  CHECK(c.detector(Plane::FarField).peak_coincidence_rate_hz == 10.0);
  CHECK(c.detector(Plane::NearField).fiber_mode_field_diameter_m == 5.3e-6);
  CHECK_FALSE(c.apply_probe_blur);
  CHECK(c.source(Plane::FarField, Axis::Y).sigma_1() == 25100.0);
  CHECK(c.writes("csv"));
}

TEST_CASE("strict parsing") {
  auto j = reference_json();
  j["optics"]["pump_waste_m"] = 1.0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = reference_json();
  j["source"]["near_x"]["sigma_1_per_m"] = 1.0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = reference_json();
  j.erase("optics");
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = reference_json();
  j["optics"]["pump_waist_m"] = "80 um";
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = reference_json();
  j["scan"]["near"]["passive_positions_m"] = Json::array({0.0});
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = reference_json();
  j["scan"]["near"]["protocol"] = "spiral";
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = reference_json();
  j["source"]["far_x"]["rho"] = -1.5;
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = reference_json();
  j["output"]["formats"] = Json::array({"xml"});
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = reference_json();
  j["_note"] = "comment keys are ignored";
  j["detector"]["_note"] = "here too";
  CHECK_NOTHROW(parse_config(j));

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("explicit passive positions and full grids") {
  auto j = reference_json();
  j["scan"]["near"].erase("passive_count");
  j["scan"]["near"]["passive_positions_m"] = Json::array({-5e-6, 0.0, 5e-6});
  j["scan"]["near"]["protocol"] = "grid";
  j["scan"]["near"]["orth_points"] = 11;
  const auto c = parse_config(j);
  const auto plan = c.scan(Plane::NearField).plan(Plane::NearField, Axis::X);
  CHECK(plan.protocol == Protocol::FullGrid);
  CHECK(plan.passive_positions_m.size() == 3);
  CHECK(plan.point_count() == 35u * 11u * 3u);
}

TEST_CASE("record CSV round trip") {
  const auto r = small_record();
  std::stringstream ss;
  write_record_csv(ss, r);
  std::string header;
  std::getline(ss, header);
  CHECK(header == kRecordCsvHeader);
  ss.seekg(0);
  const auto back = read_record_csv(ss);
  REQUIRE(back.points.size() == r.points.size());
  CHECK(back.plan.plane == Plane::FarField);
  CHECK(back.plan.axis == Axis::Y);
  CHECK(back.plan.dwell_s == r.plan.dwell_s);
  CHECK(back.plan.grid.points_axis == r.plan.grid.points_axis);
  CHECK(back.plan.passive_positions_m.size() == r.plan.passive_positions_m.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    CHECK(back.points[i].active_y == r.points[i].active_y);
    CHECK(back.points[i].passive == r.points[i].passive);
    CHECK(back.points[i].coincidences == r.points[i].coincidences);
    CHECK(back.points[i].singles_passive == r.points[i].singles_passive);
  }
  // The fit of the reloaded record is the fit of the original.
  const auto a = fit(r, FitForm::Covariance, Weighting::Uniform);
  const auto b = fit(back, FitForm::Covariance, Weighting::Uniform);
  CHECK(a.rho() == b.rho());
}

TEST_CASE("malformed CSV") {
  std::stringstream bad_header("plane,axis\nnear,x\n");
  CHECK_THROWS_AS(read_record_csv(bad_header), FormatError);
  std::stringstream short_row(std::string(kRecordCsvHeader) + "\nnear,x,0,0,0,1,5,5\n");
  CHECK_THROWS_AS(read_record_csv(short_row), FormatError);
  std::stringstream too_many(std::string(kRecordCsvHeader) + "\nnear,x,0,0,0,1,5,5,9\n");
  CHECK_THROWS(read_record_csv(too_many));
  std::stringstream negative(std::string(kRecordCsvHeader) + "\nnear,x,0,0,0,1,-5,5,0\n");
  CHECK_THROWS(read_record_csv(negative));
}

TEST_CASE("record JSON round trip") {
  auto r = small_record();
  r.model_tag = "source.far_y";
  const auto back = record_from_json(to_json(r));
  CHECK(back.seed == r.seed);
  CHECK(back.model_tag == r.model_tag);
  CHECK(back.plan.grid.spacing_axis_m == r.plan.grid.spacing_axis_m);
  REQUIRE(back.points.size() == r.points.size());
  CHECK(back.points[17].coincidences == r.points[17].coincidences);
  CHECK(to_json(back).dump() == to_json(r).dump());
}

TEST_CASE("fit JSON round trip") {
  const auto f = fit(small_record(), FitForm::Rotated, Weighting::PoissonVariance);
  const auto j = to_json(f);
  CHECK(j.contains("covariance_form"));
  CHECK(j.contains("rotated_form"));
  CHECK(j["contour_levels"].size() == 3);
  const auto back = fit_from_json(j);
  CHECK(back.form == f.form);
  CHECK(back.plane == f.plane);
  CHECK(back.axis == f.axis);
  CHECK(back.rho() == doctest::Approx(f.rho()).epsilon(1e-15));
  CHECK(back.rotated.alpha_rad == doctest::Approx(f.rotated.alpha_rad).epsilon(1e-15));
  CHECK(back.converged == f.converged);
  CHECK(back.iterations == f.iterations);
  REQUIRE(back.estimate_covariance.has_value());
  CHECK((*back.estimate_covariance - *f.estimate_covariance).norm() == 0.0);
  CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("criterion report JSON names the momentum sum") {
  const auto& c = ref::config();
  const auto r = build_report(Axis::X, c.source(Plane::NearField, Axis::X), c.source(Plane::FarField, Axis::X), c.optics);
  const auto j = to_json(r);
  CHECK(j.dump().find("p_sum") != std::string::npos);
  CHECK(j["verdict"] == "Entangled");
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, 39.7e-6, -1.5e300, 0.0, 12500.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("config directory fallback") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(BIPHOTON_REFERENCE_CONFIG).parent_path();
  ::setenv("BIPHOTON_CONFIG_DIR", dir.c_str(), 1);
  CHECK(resolve_config_path("paper_bbo.json") == (dir / "paper_bbo.json").string());
  ::unsetenv("BIPHOTON_CONFIG_DIR");
  CHECK(resolve_config_path("no_such.json") == "no_such.json");
}

}  // TEST_SUITE
