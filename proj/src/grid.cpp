#include "selfsim/grid.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "selfsim/errors.hpp"

namespace selfsim {

std::string_view scheme_name(GridScheme scheme) {
  return scheme == GridScheme::kUniform ? "uniform" : "geometric";
}

GridScheme parse_scheme(std::string_view name) {
  if (name == "uniform") return GridScheme::kUniform;
  if (name == "geometric" || name == "geometric-refined")
    return GridScheme::kGeometricRefined;
  throw ParameterError(fmt::format("unknown grid scheme '{}'", name));
}

bool Grid::is_uniform() const noexcept {
  if (points.size() < 2 || points.front() != 0.0) return false;
  const double step = horizon / static_cast<double>(points.size() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(points[i] - static_cast<double>(i) * step) > 1e-12 * horizon)
      return false;
  }
  return true;
}

Grid build_grid(double horizon, std::size_t n, GridScheme scheme,
                GeometricRefinement refinement) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ParameterError("grid horizon T must be positive and finite");
  if (n < 2) throw ParameterError("grid needs at least 2 points");

  Grid grid;
  grid.horizon = horizon;
  grid.scheme = scheme;
  grid.points.reserve(n);

  if (scheme == GridScheme::kUniform) {
    const double step = horizon / static_cast<double>(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      grid.points.push_back(static_cast<double>(i) * step);
    grid.points.push_back(horizon);
    return grid;
  }

  const int m = refinement.refined_points;
  if (m < 1 || static_cast<std::size_t>(m) >= n)
    throw ParameterError(
        fmt::format("geometric grid: refined points must lie in 1..{}", n - 1));
  if (!(refinement.factor > 1.0))
    throw ParameterError("geometric grid: refinement factor must exceed 1");
  grid.refinement = refinement;

  const std::size_t tail = n - static_cast<std::size_t>(m);
  const double step = horizon / static_cast<double>(tail);
  grid.points.push_back(0.0);
  for (int j = m - 1; j >= 1; --j)
    grid.points.push_back(step * std::pow(refinement.factor, -j));
  for (std::size_t i = 1; i < tail; ++i)
    grid.points.push_back(static_cast<double>(i) * step);
  grid.points.push_back(horizon);
  return grid;
}

Grid grid_from_points(std::vector<double> points, GridScheme scheme) {
  if (points.empty()) throw ParameterError("grid needs at least one point");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] >= 0.0) || !std::isfinite(points[i]))
      throw ParameterError("grid points must be finite and >= 0");
    if (i > 0 && !(points[i] > points[i - 1]))
      throw ParameterError("grid points must be strictly increasing");
  }
  Grid grid;
  grid.horizon = points.back();
  grid.scheme = scheme;
  grid.points = std::move(points);
  return grid;
}

Grid refine_grid(const Grid& grid, int times) {
  Grid out = grid;
  for (int pass = 0; pass < times; ++pass) {
    std::vector<double> pts;
    pts.reserve(2 * out.points.size());
    for (std::size_t i = 0; i < out.points.size(); ++i) {
      if (i > 0) pts.push_back(0.5 * (out.points[i - 1] + out.points[i]));
      pts.push_back(out.points[i]);
    }
    out.points = std::move(pts);
  }
  return out;
}

Grid scale_grid(const Grid& grid, double factor) {
  if (!(factor > 0.0)) throw ParameterError("grid scale factor must be positive");
  Grid out = grid;
  for (double& p : out.points) p *= factor;
  out.horizon = out.points.back();
  return out;
}

Grid power_grid(const Grid& grid, double exponent) {
  if (!(exponent > 0.0)) throw ParameterError("grid exponent must be positive");
  Grid out = grid;
  for (double& p : out.points) p = std::pow(p, exponent);
  out.horizon = out.points.back();
  return out;
}

}  // namespace selfsim
