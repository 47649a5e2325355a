#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace selfsim {

enum class GridScheme { kUniform, kGeometricRefined };

std::string_view scheme_name(GridScheme scheme);
GridScheme parse_scheme(std::string_view name);

/// Geometric refinement near 0: the first `refined_points` positive points
/// are h f^-(m-1), ..., h f^-1, h with h = T / (n - m) the spacing of the
/// uniform tail h, 2h, ..., T.
struct GeometricRefinement {
  int refined_points = 4;
  double factor = 4.0;
};

/// Ordered discretization of [0, T]. Points are strictly increasing and the
/// last point equals the horizon.
struct Grid {
  std::vector<double> points;
  double horizon = 0.0;
  GridScheme scheme = GridScheme::kUniform;
  GeometricRefinement refinement;  // meaningful for kGeometricRefined only

  std::size_t size() const noexcept { return points.size(); }
  bool starts_at_zero() const noexcept {
    return !points.empty() && points.front() == 0.0;
  }
  /// Starts at 0 with equal spacing (checked numerically, 1e-12 relative).
  /// The circulant sampler requires this.
  bool is_uniform() const noexcept;
  double spacing() const noexcept {
    return points.size() > 1 ? points[1] - points[0] : horizon;
  }
};

Grid build_grid(double horizon, std::size_t n, GridScheme scheme = GridScheme::kUniform,
                GeometricRefinement refinement = {});

/// Grid whose points are exactly `points` (validated: strictly increasing,
/// nonnegative). The scheme is recorded as given.
Grid grid_from_points(std::vector<double> points,
                      GridScheme scheme = GridScheme::kUniform);

/// Inserts the midpoint of every interval `times` times (2n - 1 points after
/// one pass). Every point of the input stays at index i * 2^times.
Grid refine_grid(const Grid& grid, int times = 1);

/// Multiplies every point by `factor` (> 0).
Grid scale_grid(const Grid& grid, double factor);

/// Maps every point t to t^exponent (> 0).
Grid power_grid(const Grid& grid, double exponent);

}  // namespace selfsim
