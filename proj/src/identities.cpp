#include "selfsim/identities.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "selfsim/errors.hpp"
#include "selfsim/estimator.hpp"
#include "selfsim/philox.hpp"
#include "selfsim/sampler.hpp"

namespace selfsim {
namespace {

IdentityCheck compare_suprema(const PathBatch& lhs, const PathBatch& rhs, double R) {
  const std::vector<double> a = path_suprema(lhs, R);
  const std::vector<double> b = path_suprema(rhs, R);
  IdentityCheck out;
  out.paths = a.size();
  out.bit_exact = true;
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double diff = std::abs(a[p] - b[p]);
    out.max_abs_diff = std::max(out.max_abs_diff, diff);
    out.max_rel_diff = std::max(out.max_rel_diff, diff / std::max(1.0, std::abs(a[p])));
    if (a[p] != b[p]) out.bit_exact = false;
  }
  // The functional values must agree as well, not only the suprema.
  const double Ha = estimate_from_batch(lhs, R).value;
  const double Hb = estimate_from_batch(rhs, R).value;
  if (Ha != Hb) out.bit_exact = false;
  return out;
}

}  // namespace

std::vector<ProcessSpec> representative_specs() {
  return {ProcessSpec::fbm(1.0),          ProcessSpec::bifractional(1.6, 0.625),
          ProcessSpec::subfractional(1.0), ProcessSpec::integrated_fbm(1.0, 1),
          ProcessSpec::time_average_fbm(1.0), ProcessSpec::dual_fbm(1.0)};
}

IdentityCheck check_time_change_identity(const ProcessSpec& spec, double a1, double T,
                                         std::size_t grid_n, double R, std::size_t n_paths,
                                         std::uint64_t seed) {
  const Grid grid = build_grid(T, grid_n);
  const PathBatch changed = PathSampler(spec.time_changed(a1), grid, SamplerMethod::kCholesky)
                                .sample(n_paths, seed, 1);
  const PathBatch mapped = PathSampler(spec, power_grid(grid, a1), SamplerMethod::kCholesky)
                               .sample(n_paths, seed, 1);
  IdentityCheck out = compare_suprema(changed, mapped, R);
  out.parameter = a1;
  return out;
}

IdentityCheck check_scaling_identity(const ProcessSpec& spec, double c, double T,
                                     std::size_t grid_n, double R, std::size_t n_paths,
                                     std::uint64_t seed) {
  const double alpha = ss_parameters(spec).alpha;
  const Grid grid = build_grid(T, grid_n);
  const PathBatch scaled = PathSampler(spec.scaled(c), grid, SamplerMethod::kCholesky)
                               .sample(n_paths, seed, 1);
  const PathBatch stretched =
      PathSampler(spec, scale_grid(grid, std::pow(c, 2.0 / alpha)), SamplerMethod::kCholesky)
          .sample(n_paths, seed, 1);
  IdentityCheck out = compare_suprema(scaled, stretched, R);
  out.parameter = c;
  return out;
}

double min_relative_eigenvalue(const ProcessSpec& spec, std::size_t n, double horizon,
                               std::uint64_t seed) {
  if (n < 1) throw ParameterError("min_relative_eigenvalue: n must be >= 1");
  NormalStream stream(seed, 0, Stream::kScan);
  std::vector<double> pts(n);
  for (double& t : pts) t = horizon * stream.uniform();
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const Eigen::MatrixXd cov = assemble_covariance(spec, grid_from_points(pts));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() / cov.diagonal().maxCoeff();
}

}  // namespace selfsim
