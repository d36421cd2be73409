#pragma once

// Correlation diagrams: coincidence rate sampled over (x1, x2), ready for
// external plotting, plus a coarse shape classification of a diagram.

#include <iosfwd>
#include <string>
#include <vector>

#include "biphoton/correlation_model.hpp"
#include "biphoton/fitter.hpp"

namespace biphoton {

struct DiagramGrid {
  std::vector<double> x1;
  std::vector<double> x2;
  /// values[i2 * x1.size() + i1]
  std::vector<double> values;

  double at(std::size_t i1, std::size_t i2) const { return values[i2 * x1.size() + i1]; }
};

/// Relative density (peak 1) of a model on an n x n grid spanning
/// center +- half_span on both axes.
DiagramGrid model_diagram(const CorrelationModel& model, double half_span, int n = 81);
/// Fitted rate surface on the same kind of grid, centred on the fit.
DiagramGrid fit_diagram(const FitResult& fit, double half_span, int n = 81);
/// Measured rates placed on the distinct (active, passive) coordinates of a
/// surface; cells without an observation are NaN.
DiagramGrid measured_diagram(const RateSurface& surface);

enum class DiagramShape { Isotropic, Diagonal, AntiDiagonal, AxisAligned, Tilted };
std::string_view to_string(DiagramShape shape);

struct ShapeSummary {
  DiagramShape shape = DiagramShape::Isotropic;
  double major_axis_deg = 0.0;  ///< angle of the major axis from the x1 axis, in (-90, 90]
  double axis_ratio = 1.0;      ///< minor / major width
};

/// Classifies a diagram from its value-weighted second moments. Shapes with
/// axis_ratio above 1 - isotropy_tol count as isotropic; otherwise the major
/// axis is compared to 0, 90 and +-45 degrees within angle_tol_deg.
ShapeSummary classify(const DiagramGrid& grid, double isotropy_tol = 0.02,
                      double angle_tol_deg = 5.0);

/// Columns x1,x2,value; NaN cells are skipped.
void write_diagram_csv(std::ostream& os, const DiagramGrid& grid);

}  // namespace biphoton
