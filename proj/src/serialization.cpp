#include "biphoton/serialization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace biphoton {

namespace {

template <class T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad field '") + key + "': " + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw FormatError("trailing characters in number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("not a number: '" + s + "'");
  }
}

std::int64_t parse_count(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw FormatError("trailing characters in count '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("not a count: '" + s + "'");
  }
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Json to_json(const CorrelationModel& m) {
  return Json{{"plane", to_string(m.plane())},
              {"axis", to_string(m.axis())},
              {"center_1", m.center_1()},
              {"center_2", m.center_2()},
              {"sigma_1", m.sigma_1()},
              {"sigma_2", m.sigma_2()},
              {"rho", m.rho()}};
}

CorrelationModel model_from_json(const Json& j) {
  const Plane plane = parse_plane(get<std::string>(j, "plane"));
  const Axis axis = parse_axis(get<std::string>(j, "axis"));
  return {plane, axis, get<double>(j, "center_1"), get<double>(j, "center_2"),
          covariance_from_sigmas(get<double>(j, "sigma_1"), get<double>(j, "sigma_2"),
                                 get<double>(j, "rho"))};
}

Json to_json(const OpticalTrain& t) {
  return Json{{"pump_waist_m", t.pump_waist_m},
              {"pump_wavevector_per_m", t.pump_wavevector_per_m},
              {"pump_divergence_rad", t.pump_divergence_rad},
              {"signal_wavevector_per_m", t.signal_wavevector_per_m},
              {"signal_divergence_rad", t.signal_divergence_rad},
              {"crystal_length_m", t.crystal_length_m},
              {"crystal_index", t.crystal_index},
              {"nearfield_magnification", t.nearfield_magnification},
              {"momentum_calibration_m", t.momentum_calibration_m},
              {"fiber_mode_field_diameter_m", t.fiber_mode_field_diameter_m}};
}

Json to_json(const PhysicalLimits& l) {
  return Json{{"dp_sum_min_pump_per_m", l.dp_sum_min_pump},
              {"dp_sum_min_emission_per_m", l.dp_sum_min_emission},
              {"dp_sum_min_divergence_per_m", l.dp_sum_min_divergence},
              {"dx_diff_min_divergence_m", l.dx_diff_min_divergence},
              {"dx_diff_min_crystal_m", l.dx_diff_min_crystal},
              {"product_floor_hbar2", l.product_floor},
              {"mode_m_squared", l.mode_m_squared},
              {"bracket_floor", l.bracket_floor}};
}

Json to_json(const DetectorSpec& d) {
  return Json{{"fiber_mode_field_diameter_m", d.fiber_mode_field_diameter_m},
              {"peak_coincidence_rate_hz", d.peak_coincidence_rate_hz},
              {"peak_singles_rate_hz", d.peak_singles_rate_hz},
              {"dark_rate_hz", d.dark_rate_hz},
              {"accidental_rate_hz", d.accidental_rate_hz}};
}

Json to_json(const ScanPlan& p) {
  return Json{{"plane", to_string(p.plane)},
              {"axis", to_string(p.axis)},
              {"protocol", to_string(p.protocol)},
              {"points_axis", p.grid.points_axis},
              {"spacing_axis_m", p.grid.spacing_axis_m},
              {"points_orth", p.grid.points_orth},
              {"spacing_orth_m", p.grid.spacing_orth_m},
              {"passive_positions_m", p.passive_positions_m},
              {"dwell_s", p.dwell_s},
              {"drift_sigma_m", p.drift_sigma_m}};
}

ScanPlan plan_from_json(const Json& j) {
  ScanPlan p;
  p.plane = parse_plane(get<std::string>(j, "plane"));
  p.axis = parse_axis(get<std::string>(j, "axis"));
  p.protocol = parse_protocol(get<std::string>(j, "protocol"));
  p.grid.points_axis = get<int>(j, "points_axis");
  p.grid.spacing_axis_m = get<double>(j, "spacing_axis_m");
  p.grid.points_orth = get<int>(j, "points_orth");
  p.grid.spacing_orth_m = get<double>(j, "spacing_orth_m");
  p.passive_positions_m = get<std::vector<double>>(j, "passive_positions_m");
  p.dwell_s = get<double>(j, "dwell_s");
  p.drift_sigma_m = get<double>(j, "drift_sigma_m");
  p.validate();
  return p;
}

Json to_json(const ScanRecord& r) {
  Json points = Json::array();
  for (const auto& p : r.points)
    points.push_back(Json{{"active_pos_x", p.active_x},
                          {"active_pos_y", p.active_y},
                          {"passive_pos", p.passive},
                          {"singles_a", p.singles_active},
                          {"singles_p", p.singles_passive},
                          {"coinc", p.coincidences}});
  Json j{{"plan", to_json(r.plan)}, {"seed", r.seed}};
  j["model_tag"] = r.model_tag ? Json(*r.model_tag) : Json(nullptr);
  j["points"] = std::move(points);
  return j;
}

ScanRecord record_from_json(const Json& j) {
  ScanRecord r;
  if (!j.contains("plan")) throw FormatError("missing field 'plan'");
  r.plan = plan_from_json(j.at("plan"));
  r.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("model_tag") && !j.at("model_tag").is_null())
    r.model_tag = j.at("model_tag").get<std::string>();
  if (!j.contains("points") || !j.at("points").is_array())
    throw FormatError("missing point list");
  for (const auto& e : j.at("points")) {
    ScanPoint p;
    p.active_x = get<double>(e, "active_pos_x");
    p.active_y = get<double>(e, "active_pos_y");
    p.passive = get<double>(e, "passive_pos");
    p.singles_active = get<std::int64_t>(e, "singles_a");
    p.singles_passive = get<std::int64_t>(e, "singles_p");
    p.coincidences = get<std::int64_t>(e, "coinc");
    r.points.push_back(p);
  }
  r.validate();
  return r;
}

void write_record_csv(std::ostream& os, const ScanRecord& r) {
  os << kRecordCsvHeader << '\n';
  const std::string plane(to_string(r.plan.plane));
  const std::string axis(to_string(r.plan.axis));
  const std::string dwell = format_number(r.plan.dwell_s);
  for (const auto& p : r.points) {
    os << plane << ',' << axis << ',' << format_number(p.passive) << ','
       << format_number(p.active_x) << ',' << format_number(p.active_y) << ',' << dwell << ','
       << p.singles_active << ',' << p.singles_passive << ',' << p.coincidences << '\n';
  }
}

ScanRecord read_record_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty record file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordCsvHeader) throw FormatError("unexpected CSV header: " + line);

  ScanRecord r;
  bool first = true;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 9)
      throw FormatError("row " + std::to_string(row) + ": expected 9 columns");
    const Plane plane = parse_plane(cells[0]);
    const Axis axis = parse_axis(cells[1]);
    const double dwell = parse_double(cells[5]);
    if (first) {
      r.plan.plane = plane;
      r.plan.axis = axis;
      r.plan.dwell_s = dwell;
      first = false;
    } else if (plane != r.plan.plane || axis != r.plan.axis || dwell != r.plan.dwell_s) {
      throw FormatError("row " + std::to_string(row) + ": mixed plane, axis or dwell");
    }
    ScanPoint p;
    p.passive = parse_double(cells[2]);
    p.active_x = parse_double(cells[3]);
    p.active_y = parse_double(cells[4]);
    p.singles_active = parse_count(cells[6]);
    p.singles_passive = parse_count(cells[7]);
    p.coincidences = parse_count(cells[8]);
    r.points.push_back(p);
  }
  if (r.points.empty()) throw FormatError("record has no rows");
  r.validate();

  // Rebuild the plan from the distinct coordinates.
  std::set<double> axis_pos, orth_pos;
  std::vector<double> passive;
  for (const auto& p : r.points) {
    axis_pos.insert(p.active_axis(r.plan.axis));
    orth_pos.insert(p.active_orth(r.plan.axis));
    if (std::find(passive.begin(), passive.end(), p.passive) == passive.end())
      passive.push_back(p.passive);
  }
  auto spacing = [](const std::set<double>& s) {
    return s.size() < 2 ? 1e-6 : (*s.rbegin() - *s.begin()) / static_cast<double>(s.size() - 1);
  };
  r.plan.protocol = orth_pos.size() > 1 ? Protocol::FullGrid : Protocol::LineScan;
  r.plan.grid.points_axis = static_cast<int>(axis_pos.size());
  r.plan.grid.spacing_axis_m = spacing(axis_pos);
  r.plan.grid.points_orth = static_cast<int>(orth_pos.size());
  r.plan.grid.spacing_orth_m = spacing(orth_pos);
  r.plan.passive_positions_m = passive;
  return r;
}

namespace {

Json matrix_json(const Eigen::Matrix<double, 6, 6>& m) {
  Json rows = Json::array();
  for (int i = 0; i < 6; ++i) {
    Json row = Json::array();
    for (int k = 0; k < 6; ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Json to_json(const FitResult& f) {
  Json j;
  j["form"] = to_string(f.form);
  j["plane"] = to_string(f.plane);
  j["axis"] = to_string(f.axis);
  j["units"] = "measurement plane, metres";
  j["covariance_form"] = Json{{"center_1", f.center_1},  {"center_2", f.center_2},
                              {"amplitude", f.amplitude}, {"rho", f.rho()},
                              {"sigma_1", f.sigma_1()},   {"sigma_2", f.sigma_2()}};
  j["rotated_form"] = Json{{"center_1", f.center_1},
                           {"center_2", f.center_2},
                           {"amplitude", f.amplitude},
                           {"alpha_deg", f.rotated.alpha_deg()},
                           {"sigma_m", f.rotated.sigma_m},
                           {"sigma_n", f.rotated.sigma_n}};
  const auto w = widths_for_criterion(f);
  j["widths"] = Json{{"sigma_u", w.sigma_u},
                     {"sigma_v", w.sigma_v},
                     {"sigma_s", w.sigma_s},
                     {"sigma_t", w.sigma_t}};
  j["diagnostics"] = Json{{"residual_norm", f.residual_norm},
                          {"converged", f.converged},
                          {"status", to_string(f.status)},
                          {"iterations", f.iterations},
                          {"sample_count", f.sample_count},
                          {"residual_history", f.residual_history}};
  if (f.estimate_covariance) {
    const Json names = f.form == FitForm::Covariance
                           ? Json{"center_1", "center_2", "amplitude", "rho", "sigma_1", "sigma_2"}
                           : Json{"center_1", "center_2", "amplitude", "alpha_rad", "sigma_m",
                                  "sigma_n"};
    j["estimate_covariance"] = Json{{"parameters", names},
                                    {"matrix", matrix_json(*f.estimate_covariance)}};
  } else {
    j["estimate_covariance"] = nullptr;
  }
  j["contour_levels"] = Json{0.5, std::exp(-1.0), std::exp(-2.0)};
  return j;
}

FitResult fit_from_json(const Json& j) {
  FitResult f;
  f.form = parse_fit_form(get<std::string>(j, "form"));
  f.plane = parse_plane(get<std::string>(j, "plane"));
  f.axis = parse_axis(get<std::string>(j, "axis"));
  if (!j.contains("covariance_form")) throw FormatError("missing field 'covariance_form'");
  const auto& c = j.at("covariance_form");
  f.center_1 = get<double>(c, "center_1");
  f.center_2 = get<double>(c, "center_2");
  f.amplitude = get<double>(c, "amplitude");
  f.covariance = covariance_from_sigmas(get<double>(c, "sigma_1"), get<double>(c, "sigma_2"),
                                        get<double>(c, "rho"));
  if (j.contains("rotated_form")) {
    const auto& r = j.at("rotated_form");
    f.rotated.alpha_rad = get<double>(r, "alpha_deg") * std::numbers::pi / 180.0;
    f.rotated.sigma_m = get<double>(r, "sigma_m");
    f.rotated.sigma_n = get<double>(r, "sigma_n");
  } else {
    f.rotated = covariance_to_rotated(f.covariance);
  }
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    f.residual_norm = get<double>(d, "residual_norm");
    f.converged = get<bool>(d, "converged");
    f.status = parse_fit_status(get<std::string>(d, "status"));
    f.iterations = get<int>(d, "iterations");
    f.sample_count = get<std::size_t>(d, "sample_count");
    f.residual_history = get<std::vector<double>>(d, "residual_history");
  }
  if (j.contains("estimate_covariance") && !j.at("estimate_covariance").is_null()) {
    const auto& m = j.at("estimate_covariance").at("matrix");
    Eigen::Matrix<double, 6, 6> cov;
    for (int i = 0; i < 6; ++i)
      for (int k = 0; k < 6; ++k) cov(i, k) = m.at(i).at(k).get<double>();
    f.estimate_covariance = cov;
  }
  return f;
}

void write_contours_csv(std::ostream& os, const std::vector<ContourLine>& lines) {
  os << "level,label,index,x1,x2\n";
  for (const auto& line : lines) {
    const std::string level = format_number(line.level);
    for (std::size_t i = 0; i < line.points.size(); ++i)
      os << level << ',' << line.label << ',' << i << ',' << format_number(line.points[i].first)
         << ',' << format_number(line.points[i].second) << '\n';
  }
}

Json to_json(const FloorComparison& c) {
  return Json{{"floor_hbar2", c.floor},
              {"measured_hbar2", c.measured},
              {"ratio", c.ratio},
              {"suspicious", c.suspicious}};
}

Json to_json(const CriterionReport& r) {
  Json j;
  j["axis"] = to_string(r.axis);
  j["var_x_diff_m2"] = r.var_x_diff;
  j["var_p_sum_per_m2"] = r.var_p_sum;
  j["var_product_hbar2"] = r.var_product;
  j["rho_x"] = r.rho_x;
  j["rho_p"] = r.rho_p;
  j["sigma_x_in_m"] = r.sigma_x_in;
  j["sigma_p_in_per_m"] = r.sigma_p_in;
  j["m_squared"] = r.m_squared;
  j["covariance_product_hbar2"] = r.covariance_form_value;
  j["m_squared_criterion"] = r.m_squared_form_value;
  j["criterion_bracket"] = Json{{"lower", r.bracket_lower}, {"upper", r.bracket_upper}};
  j["verdict"] = to_string(r.verdict);
  j["limits"] = r.limits ? to_json(*r.limits) : Json(nullptr);
  j["floor_check"] = r.floor ? to_json(*r.floor) : Json(nullptr);
  j["deconvolved_product_hbar2"] =
      r.deconvolved_product ? Json(*r.deconvolved_product) : Json(nullptr);
  j["warnings"] = r.warnings;
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << j.dump(2) << '\n';
}

ScanRecord read_record_file(const std::string& path) {
  const bool is_csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  if (is_csv) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return read_record_csv(in);
  }
  return record_from_json(read_json_file(path));
}

}  // namespace biphoton
