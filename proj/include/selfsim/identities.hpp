#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "selfsim/process.hpp"

namespace selfsim {

/// One parameter set per family, chosen so that kappa is 1 or 2 (closed-form
/// Piterbarg bounds exist): fbm(1), bifractional(1.6, 0.625), sub-fractional(1),
/// integrated(1, k=1), time-average(1), dual(1).
std::vector<ProcessSpec> representative_specs();

struct IdentityCheck {
  double parameter = 0.0;  // c for scaling, a1 for the time change
  std::size_t paths = 0;
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;
  bool bit_exact = false;
};

/// Y(t^a1) on the uniform grid over [0, T] against Y on the grid {t_i^a1}, both
/// by dense Cholesky from the same draws: per-path suprema of
/// sqrt(2) Y - (1+R) sigma^2 are compared.
IdentityCheck check_time_change_identity(const ProcessSpec& spec, double a1, double T,
                                         std::size_t grid_n, double R, std::size_t n_paths,
                                         std::uint64_t seed);

/// c Y on the uniform grid over [0, T] against Y on the same grid scaled by
/// c^(2/alpha), both by dense Cholesky from the same draws. The two kernel
/// matrices agree only up to rounding of c^2 t^alpha versus (c^(2/alpha) t)^alpha.
IdentityCheck check_scaling_identity(const ProcessSpec& spec, double c, double T,
                                     std::size_t grid_n, double R, std::size_t n_paths,
                                     std::uint64_t seed);

/// Smallest eigenvalue of the kernel matrix on n random points in (0, horizon],
/// divided by the largest variance.
double min_relative_eigenvalue(const ProcessSpec& spec, std::size_t n, double horizon,
                               std::uint64_t seed);

}  // namespace selfsim
