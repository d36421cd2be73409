#include "biphoton/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "biphoton/serialization.hpp"

namespace biphoton {

namespace {

std::vector<double> span(double center, double half_span, int n) {
  if (n < 2 || !(half_span > 0.0)) throw DomainError("diagram needs n >= 2 and a positive span");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = center - half_span + 2.0 * half_span * i / (n - 1);
  return v;
}

std::vector<double> distinct_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(),
                      [](double a, double b) { return std::abs(a - b) <= 1e-12 * (std::abs(a) + std::abs(b) + 1e-30); }),
          v.end());
  return v;
}

std::size_t nearest(const std::vector<double>& v, double x) {
  const auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.begin()) return 0;
  if (it == v.end()) return v.size() - 1;
  const auto i = static_cast<std::size_t>(it - v.begin());
  return (x - v[i - 1] < v[i] - x) ? i - 1 : i;
}

}  // namespace

DiagramGrid model_diagram(const CorrelationModel& model, double half_span, int n) {
  DiagramGrid g;
  g.x1 = span(model.center_1(), half_span, n);
  g.x2 = span(model.center_2(), half_span, n);
  g.values.reserve(g.x1.size() * g.x2.size());
  for (double b : g.x2)
    for (double a : g.x1) g.values.push_back(relative_density(model, a, b));
  return g;
}

DiagramGrid fit_diagram(const FitResult& fit, double half_span, int n) {
  DiagramGrid g;
  g.x1 = span(fit.center_1, half_span, n);
  g.x2 = span(fit.center_2, half_span, n);
  g.values.reserve(g.x1.size() * g.x2.size());
  for (double b : g.x2)
    for (double a : g.x1) g.values.push_back(fit.rate_at(a, b));
  return g;
}

DiagramGrid measured_diagram(const RateSurface& surface) {
  DiagramGrid g;
  std::vector<double> a, b;
  for (const auto& o : surface.observations) {
    a.push_back(o.x1);
    b.push_back(o.x2);
  }
  g.x1 = distinct_sorted(std::move(a));
  g.x2 = distinct_sorted(std::move(b));
  g.values.assign(g.x1.size() * g.x2.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& o : surface.observations)
    g.values[nearest(g.x2, o.x2) * g.x1.size() + nearest(g.x1, o.x1)] = o.rate;
  return g;
}

std::string_view to_string(DiagramShape shape) {
  switch (shape) {
    case DiagramShape::Isotropic: return "isotropic";
    case DiagramShape::Diagonal: return "diagonal";
    case DiagramShape::AntiDiagonal: return "anti-diagonal";
    case DiagramShape::AxisAligned: return "axis-aligned";
    case DiagramShape::Tilted: return "tilted";
  }
  return "unknown";
}

ShapeSummary classify(const DiagramGrid& grid, double isotropy_tol, double angle_tol_deg) {
  double w = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < grid.x2.size(); ++j)
    for (std::size_t i = 0; i < grid.x1.size(); ++i) {
      const double v = grid.at(i, j);
      if (!std::isfinite(v) || v <= 0.0) continue;
      w += v;
      m1 += v * grid.x1[i];
      m2 += v * grid.x2[j];
    }
  if (!(w > 0.0)) throw DomainError("diagram has no positive values");
  m1 /= w;
  m2 /= w;
  double a = 0.0, b = 0.0, d = 0.0;
  for (std::size_t j = 0; j < grid.x2.size(); ++j)
    for (std::size_t i = 0; i < grid.x1.size(); ++i) {
      const double v = grid.at(i, j);
      if (!std::isfinite(v) || v <= 0.0) continue;
      const double u1 = grid.x1[i] - m1, u2 = grid.x2[j] - m2;
      a += v * u1 * u1;
      b += v * u1 * u2;
      d += v * u2 * u2;
    }
  const double mean = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), b);
  ShapeSummary s;
  s.axis_ratio = std::sqrt(std::max(0.0, mean - radius) / (mean + radius));
  double theta = 0.5 * std::atan2(2.0 * b, a - d) * 180.0 / std::numbers::pi;
  if (theta <= -90.0) theta += 180.0;
  s.major_axis_deg = theta;
  if (s.axis_ratio > 1.0 - isotropy_tol) {
    s.shape = DiagramShape::Isotropic;
    s.major_axis_deg = 0.0;
  } else if (std::abs(theta - 45.0) <= angle_tol_deg) {
    s.shape = DiagramShape::Diagonal;
  } else if (std::abs(theta + 45.0) <= angle_tol_deg) {
    s.shape = DiagramShape::AntiDiagonal;
  } else if (std::abs(theta) <= angle_tol_deg || std::abs(std::abs(theta) - 90.0) <= angle_tol_deg) {
    s.shape = DiagramShape::AxisAligned;
  } else {
    s.shape = DiagramShape::Tilted;
  }
  return s;
}

void write_diagram_csv(std::ostream& os, const DiagramGrid& grid) {
  os << "x1,x2,value\n";
  for (std::size_t j = 0; j < grid.x2.size(); ++j)
    for (std::size_t i = 0; i < grid.x1.size(); ++i) {
      const double v = grid.at(i, j);
      if (!std::isfinite(v)) continue;
      os << format_number(grid.x1[i]) << ',' << format_number(grid.x2[j]) << ','
         << format_number(v) << '\n';
    }
}

}  // namespace biphoton
