#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "selfsim/grid.hpp"
#include "selfsim/process.hpp"

namespace selfsim {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Relative diagonal jitter levels tried in order after a plain attempt.
struct JitterPolicy {
  std::vector<double> levels{1e-12, 1e-10, 1e-8};
};

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  /// Relative jitter that made the factorization succeed (0 if none).
  double jitter = 0.0;
};

/// Cholesky factor of a symmetric matrix. On failure adds eps * max_diagonal
/// to the diagonal for each eps in the policy. Throws
/// NotPositiveDefiniteError (mentioning `context`) if every level fails.
CholeskyFactor factorize(const Eigen::MatrixXd& matrix,
                         const JitterPolicy& policy = {},
                         std::string_view context = {});

/// [R_Y(t_i, t_j)] over the positive grid points (a t = 0 point is dropped).
Eigen::MatrixXd assemble_covariance(const ProcessSpec& spec, const Grid& grid);

/// Sampled paths, one row per path and one column per grid point.
struct PathBatch {
  RowMatrix values;
  Grid grid;
  ProcessSpec spec;
  std::uint64_t seed = 0;
  std::string generator_id;

  std::size_t n_paths() const noexcept {
    return static_cast<std::size_t>(values.rows());
  }
};

enum class SamplerMethod {
  kAuto,
  kCholesky,     // dense factor of the kernel matrix
  kCirculant,    // FFT circulant embedding of fractional Gaussian noise
  kRankOne,      // Y(t) = t^(alpha/2) xi
  kIntegration,  // trapezoid integration of an fBm base path
};

std::string_view method_name(SamplerMethod method);

/// Prepared sampler for one (spec, grid). Paths are produced in fixed chunks
/// of kChunk rows; the values of path j depend only on (seed, j), never on
/// how many paths are requested or on the number of worker threads.
class PathSampler {
 public:
  static constexpr std::size_t kChunk = 64;

  PathSampler(const ProcessSpec& spec, const Grid& grid,
              SamplerMethod method = SamplerMethod::kAuto);
  ~PathSampler();
  PathSampler(PathSampler&&) noexcept;
  PathSampler& operator=(PathSampler&&) noexcept;

  const ProcessSpec& spec() const noexcept;
  const Grid& grid() const noexcept;
  SamplerMethod method() const noexcept;
  std::string generator_id() const;
  /// Relative jitter applied by a Cholesky factorization (0 otherwise).
  double applied_jitter() const noexcept;

  /// Fills `out` (resized to kChunk x grid size) with paths
  /// chunk * kChunk ... chunk * kChunk + kChunk - 1.
  void sample_chunk(std::uint64_t seed, std::uint64_t chunk, RowMatrix& out) const;

  /// Paths 0 .. n_paths - 1.
  PathBatch sample(std::size_t n_paths, std::uint64_t seed, int threads = 0) const;

  /// Exact covariance of the sampled discrete law over all grid points
  /// (including a zero row and column for t = 0). For integration-based
  /// sampling this is the covariance of the trapezoid approximation, not of
  /// the continuous kernel. Computed once on first use.
  const Eigen::MatrixXd& law_covariance() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Dense Cholesky sampling: each row is L z with z standard normal, keyed by
/// (seed, path index); the t = 0 column is zero.
PathBatch sample_paths(const ProcessSpec& spec, const Grid& grid,
                       std::size_t n_paths, std::uint64_t seed, int threads = 0);

/// fBm by circulant embedding of fractional Gaussian noise on a uniform grid
/// starting at 0. alpha must lie in (0, 2).
PathBatch sample_fbm_fft(double alpha, const Grid& grid, std::size_t n_paths,
                         std::uint64_t seed, int threads = 0);

/// In-place trapezoid construction of an integral-defined family from an
/// fBm path sampled on `points` (which must start at 0).
void integrate_path(const ProcessSpec& derived, std::span<const double> points,
                    std::span<double> values);

/// Applies integrate_path to every row of an fBm batch. `derived` must be an
/// integrated or time-average spec with the base batch's alpha.
PathBatch derive_integrated(const PathBatch& base, const ProcessSpec& derived);

/// Smallest number of midpoint refinements of `grid` that gives at least
/// `min_points` points (base resolution for integration sampling).
int integration_refinements(const Grid& grid, std::size_t min_points = 512);

/// Binary layout (all little-endian):
///   char[8] "SSPBATCH", u32 version = 1,
///   u32 family, f64 alpha, f64 K, u32 k, f64 amplitude, f64 time_exponent,
///   u64 seed, u32 id_length, char[id_length] generator_id,
///   u32 scheme, u64 n_grid, f64[n_grid] points,
///   u64 n_paths, f64[n_paths * n_grid] values (row-major).
void write_path_batch(const PathBatch& batch, std::ostream& out);
PathBatch read_path_batch(std::istream& in);

}  // namespace selfsim
