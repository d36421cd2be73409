#pragma once

// JSON and CSV forms of the toolkit's artifacts.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "biphoton/correlation_model.hpp"
#include "biphoton/criteria.hpp"
#include "biphoton/fitter.hpp"
#include "biphoton/optics_geometry.hpp"
#include "biphoton/simulator.hpp"

namespace biphoton {

using Json = nlohmann::ordered_json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {plane, axis, center_1, center_2, sigma_1, sigma_2, rho}
Json to_json(const CorrelationModel& model);
CorrelationModel model_from_json(const Json& j);

Json to_json(const OpticalTrain& train);
Json to_json(const PhysicalLimits& limits);
Json to_json(const DetectorSpec& det);
Json to_json(const ScanPlan& plan);
ScanPlan plan_from_json(const Json& j);

Json to_json(const ScanRecord& record);
ScanRecord record_from_json(const Json& j);

inline constexpr const char* kRecordCsvHeader =
    "plane,axis,passive_pos,active_pos_x,active_pos_y,dwell_s,singles_a,singles_p,coinc";
void write_record_csv(std::ostream& os, const ScanRecord& record);
/// Reconstructs plane, axis, dwell, protocol, grid and passive positions
/// from the rows; the seed is unknown and left at 0.
ScanRecord read_record_csv(std::istream& is);

Json to_json(const FitResult& fit);
FitResult fit_from_json(const Json& j);
void write_contours_csv(std::ostream& os, const std::vector<ContourLine>& lines);

Json to_json(const FloorComparison& floor);
Json to_json(const CriterionReport& report);

/// Shortest round-trip decimal form of a double.
std::string format_number(double value);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
ScanRecord read_record_file(const std::string& path);

}  // namespace biphoton
