#include "selfsim/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>

#include <Eigen/Cholesky>
#include <fftw3.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "selfsim/errors.hpp"
#include "selfsim/parallel.hpp"
#include "selfsim/philox.hpp"

namespace selfsim {
namespace {

std::mutex g_fftw_planner_mutex;

// fftw_malloc'd complex buffer; all buffers share the planner's alignment.
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n)
      : data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data_ == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* get() const noexcept { return data_; }

 private:
  fftw_complex* data_;
};

class FftwPlan {
 public:
  explicit FftwPlan(std::size_t n) : n_(n) {
    FftwBuffer in(n), out(n);
    std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in.get(), out.get(),
                             FFTW_FORWARD, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw ComputeError("FFTW planning failed");
  }
  ~FftwPlan() {
    std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
    fftw_destroy_plan(plan_);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  // New-array execution is thread-safe.
  void execute(const FftwBuffer& in, const FftwBuffer& out) const {
    fftw_execute_dft(plan_, in.get(), out.get());
  }
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

double fgn_autocovariance(double alpha, std::size_t lag) {
  const double k = static_cast<double>(lag);
  return 0.5 * (std::pow(k + 1.0, alpha) - 2.0 * std::pow(k, alpha) +
                std::pow(std::abs(k - 1.0), alpha));
}

class Engine {
 public:
  virtual ~Engine() = default;
  virtual void sample_chunk(std::uint64_t seed, std::uint64_t chunk,
                            RowMatrix& out) const = 0;
  virtual Eigen::MatrixXd law_covariance() const = 0;
  virtual double jitter() const { return 0.0; }
};

Eigen::MatrixXd kernel_matrix_full(const ProcessSpec& spec, const Grid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = (i == j) ? variance(spec, grid.points[i])
                                : covariance(spec, grid.points[i], grid.points[j]);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

class CholeskyEngine final : public Engine {
 public:
  CholeskyEngine(const ProcessSpec& spec, const Grid& grid)
      : spec_(spec), grid_(grid) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.points[i] > 0.0) positive_.push_back(static_cast<Eigen::Index>(i));
    }
    cov_ = assemble_covariance(spec, grid);
    if (positive_.empty()) return;
    const Eigen::MatrixXd& cov = cov_;
    // Factor the unit-diagonal correlation matrix so the relative jitter acts
    // on every variance scale alike, then restore the scales row-wise.
    scales_ = cov.diagonal().array().sqrt();
    if ((scales_.array() <= 0.0).any())
      throw ComputeError(fmt::format("{}: zero variance at a positive grid point",
                                     spec.label()));
    const Eigen::MatrixXd corr =
        scales_.asDiagonal().inverse() * cov * scales_.asDiagonal().inverse();
    CholeskyFactor factor = factorize(
        corr, {}, fmt::format("{} on {} grid points in [0, {}]", spec.label(),
                              grid.size(), grid.horizon));
    jitter_ = factor.jitter;
    if (jitter_ > 0.0) {
      spdlog::debug("{}: Cholesky needed relative jitter {}", spec.label(), jitter_);
    }
    lower_ = scales_.asDiagonal() * factor.lower;
  }

  void sample_chunk(std::uint64_t seed, std::uint64_t chunk,
                    RowMatrix& out) const override {
    const auto m = static_cast<Eigen::Index>(positive_.size());
    const auto width = static_cast<Eigen::Index>(PathSampler::kChunk);
    Eigen::MatrixXd z(m, width);
    for (Eigen::Index r = 0; r < width; ++r) {
      NormalStream stream(seed, chunk * PathSampler::kChunk + r);
      for (Eigen::Index i = 0; i < m; ++i) z(i, r) = stream.normal();
    }
    out.setZero(width, static_cast<Eigen::Index>(grid_.size()));
    if (m == 0) return;
    const Eigen::MatrixXd y = lower_.triangularView<Eigen::Lower>() * z;
    for (Eigen::Index i = 0; i < m; ++i) out.col(positive_[i]) = y.row(i).transpose();
  }

  Eigen::MatrixXd law_covariance() const override {
    const auto n = static_cast<Eigen::Index>(grid_.size());
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, n);
    // L L^T equals the kernel matrix plus the relative jitter on the
    // equilibrated diagonal.
    Eigen::MatrixXd cov = cov_;
    cov.diagonal() += jitter_ * scales_.cwiseAbs2();
    for (std::size_t a = 0; a < positive_.size(); ++a)
      for (std::size_t b = 0; b < positive_.size(); ++b)
        full(positive_[a], positive_[b]) = cov(a, b);
    return full;
  }

  double jitter() const override { return jitter_; }

 private:
  ProcessSpec spec_;
  Grid grid_;
  std::vector<Eigen::Index> positive_;
  Eigen::MatrixXd cov_;
  Eigen::VectorXd scales_;
  Eigen::MatrixXd lower_;
  double jitter_ = 0.0;
};

class CirculantEngine final : public Engine {
 public:
  CirculantEngine(double alpha, const Grid& grid)
      : alpha_(alpha), grid_(grid), increments_(grid.size() - 1),
        plan_(2 * increments_) {
    const std::size_t m = 2 * increments_;
    FftwBuffer row(m), eig(m);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t lag = j <= increments_ ? j : m - j;
      row.get()[j][0] = fgn_autocovariance(alpha, lag);
      row.get()[j][1] = 0.0;
    }
    plan_.execute(row, eig);
    double max_eig = 0.0;
    double min_eig = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      max_eig = std::max(max_eig, eig.get()[j][0]);
      min_eig = std::min(min_eig, eig.get()[j][0]);
    }
    embeddable_ = min_eig >= -1e-10 * max_eig;
    amplitudes_.resize(m);
    for (std::size_t j = 0; j < m; ++j)
      amplitudes_[j] = std::sqrt(std::max(eig.get()[j][0], 0.0) / static_cast<double>(m));
    step_scale_ = std::pow(grid.horizon / static_cast<double>(increments_), alpha / 2.0);
  }

  bool embeddable() const noexcept { return embeddable_; }

  void sample_chunk(std::uint64_t seed, std::uint64_t chunk,
                    RowMatrix& out) const override {
    const std::size_t m = plan_.size();
    const auto width = static_cast<Eigen::Index>(PathSampler::kChunk);
    out.resize(width, static_cast<Eigen::Index>(grid_.size()));
    FftwBuffer in(m), spectrum(m);
    for (Eigen::Index r = 0; r < width; ++r) {
      NormalStream stream(seed, chunk * PathSampler::kChunk + r);
      for (std::size_t j = 0; j < m; ++j) {
        in.get()[j][0] = amplitudes_[j] * stream.normal();
        in.get()[j][1] = amplitudes_[j] * stream.normal();
      }
      plan_.execute(in, spectrum);
      double level = 0.0;
      out(r, 0) = 0.0;
      for (std::size_t i = 0; i < increments_; ++i) {
        level += step_scale_ * spectrum.get()[i][0];
        out(r, static_cast<Eigen::Index>(i + 1)) = level;
      }
    }
  }

  Eigen::MatrixXd law_covariance() const override {
    return kernel_matrix_full(ProcessSpec::fbm(alpha_), grid_);
  }

 private:
  double alpha_;
  Grid grid_;
  std::size_t increments_;
  FftwPlan plan_;
  std::vector<double> amplitudes_;
  double step_scale_ = 1.0;
  bool embeddable_ = true;
};

class RankOneEngine final : public Engine {
 public:
  RankOneEngine(const ProcessSpec& spec, const Grid& grid) : grid_(grid) {
    profile_.resize(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i)
      profile_[static_cast<Eigen::Index>(i)] = std::sqrt(variance(spec, grid.points[i]));
  }

  void sample_chunk(std::uint64_t seed, std::uint64_t chunk,
                    RowMatrix& out) const override {
    const auto width = static_cast<Eigen::Index>(PathSampler::kChunk);
    out.resize(width, profile_.size());
    for (Eigen::Index r = 0; r < width; ++r) {
      NormalStream stream(seed, chunk * PathSampler::kChunk + r);
      out.row(r) = stream.normal() * profile_.transpose();
    }
  }

  Eigen::MatrixXd law_covariance() const override {
    return profile_ * profile_.transpose();
  }

 private:
  Grid grid_;
  Eigen::VectorXd profile_;
};

class IntegrationEngine final : public Engine {
 public:
  IntegrationEngine(const ProcessSpec& derived, const Grid& grid)
      : derived_(derived), grid_(grid) {
    if (!grid.starts_at_zero())
      throw ParameterError("integration sampling needs a grid starting at 0");
    refinements_ = integration_refinements(grid);
    base_grid_ = refine_grid(grid, refinements_);
    base_ = std::make_unique<PathSampler>(ProcessSpec::fbm(derived.alpha_param()),
                                          base_grid_);
  }

  void sample_chunk(std::uint64_t seed, std::uint64_t chunk,
                    RowMatrix& out) const override {
    RowMatrix fine;
    base_->sample_chunk(seed, chunk, fine);
    const auto width = fine.rows();
    const std::size_t stride = std::size_t{1} << refinements_;
    out.resize(width, static_cast<Eigen::Index>(grid_.size()));
    std::vector<double> row(base_grid_.size());
    for (Eigen::Index r = 0; r < width; ++r) {
      for (std::size_t i = 0; i < row.size(); ++i)
        row[i] = fine(r, static_cast<Eigen::Index>(i));
      integrate_path(derived_, base_grid_.points, row);
      for (std::size_t i = 0; i < grid_.size(); ++i)
        out(r, static_cast<Eigen::Index>(i)) = row[i * stride];
    }
  }

  // D Sigma_B D^T, with D the (linear) trapezoid construction.
  Eigen::MatrixXd law_covariance() const override {
    Eigen::MatrixXd cov = base_->law_covariance();
    const auto nb = cov.rows();
    std::vector<double> row(static_cast<std::size_t>(nb));
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index r = 0; r < nb; ++r) {
        for (Eigen::Index c = 0; c < nb; ++c) row[c] = cov(r, c);
        integrate_path(derived_, base_grid_.points, row);
        for (Eigen::Index c = 0; c < nb; ++c) cov(r, c) = row[c];
      }
      cov.transposeInPlace();
    }
    const std::size_t stride = std::size_t{1} << refinements_;
    const auto n = static_cast<Eigen::Index>(grid_.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        out(i, j) = cov(i * stride, j * stride);
    return out;
  }

 private:
  ProcessSpec derived_;
  Grid grid_;
  Grid base_grid_;
  int refinements_ = 0;
  std::unique_ptr<PathSampler> base_;
};

SamplerMethod choose_method(const ProcessSpec& spec, const Grid& grid) {
  if (is_rank_one(spec)) return SamplerMethod::kRankOne;
  if (spec.is_transformed()) return SamplerMethod::kCholesky;
  switch (spec.family()) {
    case Family::kFbm:
      return grid.is_uniform() && grid.size() >= 2 ? SamplerMethod::kCirculant
                                                    : SamplerMethod::kCholesky;
    case Family::kIntegratedFbm:
    case Family::kTimeAverageFbm:
      return grid.starts_at_zero() && grid.size() >= 2 ? SamplerMethod::kIntegration
                                                        : SamplerMethod::kCholesky;
    default:
      return SamplerMethod::kCholesky;
  }
}

}  // namespace

std::string_view method_name(SamplerMethod method) {
  switch (method) {
    case SamplerMethod::kAuto:
      return "auto";
    case SamplerMethod::kCholesky:
      return "cholesky";
    case SamplerMethod::kCirculant:
      return "circulant";
    case SamplerMethod::kRankOne:
      return "rank-one";
    case SamplerMethod::kIntegration:
      return "integration";
  }
  return "unknown";
}

CholeskyFactor factorize(const Eigen::MatrixXd& matrix, const JitterPolicy& policy,
                         std::string_view context) {
  if (matrix.rows() != matrix.cols())
    throw ParameterError("factorize: matrix must be square");
  if (matrix.size() == 0) return {};
  const double scale = matrix.cwiseAbs().maxCoeff();
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ParameterError("factorize: matrix must be symmetric");

  auto attempt = [](const Eigen::MatrixXd& m) -> std::optional<Eigen::MatrixXd> {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Eigen::MatrixXd lower = llt.matrixL();
    if (!lower.allFinite()) return std::nullopt;
    return lower;
  };

  if (auto lower = attempt(matrix)) return {std::move(*lower), 0.0};
  const double max_diag = matrix.diagonal().maxCoeff();
  for (double eps : policy.levels) {
    Eigen::MatrixXd jittered = matrix;
    jittered.diagonal().array() += eps * max_diag;
    if (auto lower = attempt(jittered)) return {std::move(*lower), eps};
  }
  throw NotPositiveDefiniteError(fmt::format(
      "matrix is not positive definite even with relative jitter {}{}{}",
      policy.levels.empty() ? 0.0 : policy.levels.back(),
      context.empty() ? "" : ": ", context));
}

Eigen::MatrixXd assemble_covariance(const ProcessSpec& spec, const Grid& grid) {
  std::vector<double> pts;
  for (double t : grid.points)
    if (t > 0.0) pts.push_back(t);
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = (i == j) ? variance(spec, pts[i]) : covariance(spec, pts[i], pts[j]);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

struct PathSampler::Impl {
  Impl(const ProcessSpec& s, const Grid& g) : spec(s), grid(g) {}
  ProcessSpec spec;
  Grid grid;
  SamplerMethod method = SamplerMethod::kAuto;
  std::unique_ptr<Engine> engine;
  mutable std::once_flag law_once;
  mutable Eigen::MatrixXd law;
};

PathSampler::PathSampler(const ProcessSpec& spec, const Grid& grid,
                         SamplerMethod method)
    : impl_(std::make_unique<Impl>(spec, grid)) {
  if (grid.size() < 1) throw ParameterError("sampler needs a nonempty grid");
  if (method == SamplerMethod::kAuto) method = choose_method(spec, grid);
  impl_->method = method;

  switch (method) {
    case SamplerMethod::kCholesky:
      impl_->engine = std::make_unique<CholeskyEngine>(spec, grid);
      break;
    case SamplerMethod::kRankOne:
      if (!is_rank_one(spec))
        throw ParameterError(fmt::format("{} is not a rank-one process", spec.label()));
      impl_->engine = std::make_unique<RankOneEngine>(spec, grid);
      break;
    case SamplerMethod::kCirculant: {
      if (spec.family() != Family::kFbm || spec.is_transformed())
        throw ParameterError("circulant sampling applies to plain fBm only");
      if (!(spec.alpha_param() < 2.0))
        throw ParameterError("circulant sampling needs alpha in (0, 2)");
      if (!grid.is_uniform())
        throw ParameterError("circulant sampling needs a uniform grid starting at 0");
      auto circulant = std::make_unique<CirculantEngine>(spec.alpha_param(), grid);
      if (circulant->embeddable()) {
        impl_->engine = std::move(circulant);
      } else {
        spdlog::warn("{}: circulant embedding has negative eigenvalues, falling "
                     "back to Cholesky",
                     spec.label());
        impl_->method = SamplerMethod::kCholesky;
        impl_->engine = std::make_unique<CholeskyEngine>(spec, grid);
      }
      break;
    }
    case SamplerMethod::kIntegration:
      if (spec.is_transformed() || (spec.family() != Family::kIntegratedFbm &&
                                    spec.family() != Family::kTimeAverageFbm))
        throw ParameterError(
            "integration sampling applies to integrated and time-average fBm");
      impl_->engine = std::make_unique<IntegrationEngine>(spec, grid);
      break;
    case SamplerMethod::kAuto:
      break;
  }
}

PathSampler::~PathSampler() = default;
PathSampler::PathSampler(PathSampler&&) noexcept = default;
PathSampler& PathSampler::operator=(PathSampler&&) noexcept = default;

const ProcessSpec& PathSampler::spec() const noexcept { return impl_->spec; }
const Grid& PathSampler::grid() const noexcept { return impl_->grid; }
SamplerMethod PathSampler::method() const noexcept { return impl_->method; }
double PathSampler::applied_jitter() const noexcept { return impl_->engine->jitter(); }

std::string PathSampler::generator_id() const {
  return fmt::format("{}/philox4x32-10/box-muller", method_name(impl_->method));
}

void PathSampler::sample_chunk(std::uint64_t seed, std::uint64_t chunk,
                               RowMatrix& out) const {
  impl_->engine->sample_chunk(seed, chunk, out);
}

PathBatch PathSampler::sample(std::size_t n_paths, std::uint64_t seed,
                              int threads) const {
  if (n_paths < 1) throw ParameterError("n_paths must be at least 1");
  PathBatch batch{RowMatrix(static_cast<Eigen::Index>(n_paths),
                            static_cast<Eigen::Index>(impl_->grid.size())),
                  impl_->grid, impl_->spec, seed, generator_id()};
  const std::size_t chunks = (n_paths + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    RowMatrix block;
    sample_chunk(seed, c, block);
    const std::size_t first = c * kChunk;
    const std::size_t rows = std::min(kChunk, n_paths - first);
    batch.values.middleRows(static_cast<Eigen::Index>(first),
                            static_cast<Eigen::Index>(rows)) =
        block.topRows(static_cast<Eigen::Index>(rows));
  });
  return batch;
}

const Eigen::MatrixXd& PathSampler::law_covariance() const {
  std::call_once(impl_->law_once, [this] { impl_->law = impl_->engine->law_covariance(); });
  return impl_->law;
}

PathBatch sample_paths(const ProcessSpec& spec, const Grid& grid, std::size_t n_paths,
                       std::uint64_t seed, int threads) {
  return PathSampler(spec, grid, SamplerMethod::kCholesky).sample(n_paths, seed, threads);
}

PathBatch sample_fbm_fft(double alpha, const Grid& grid, std::size_t n_paths,
                         std::uint64_t seed, int threads) {
  return PathSampler(ProcessSpec::fbm(alpha), grid, SamplerMethod::kCirculant)
      .sample(n_paths, seed, threads);
}

void integrate_path(const ProcessSpec& derived, std::span<const double> points,
                    std::span<double> values) {
  if (points.size() != values.size())
    throw ParameterError("integrate_path: size mismatch");
  if (points.empty()) return;
  if (points.front() != 0.0)
    throw ParameterError("integrate_path: grid must start at 0");
  const double alpha = derived.alpha_param();

  auto cumulative_trapezoid = [&](double factor) {
    double previous = values[0];
    values[0] = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      const double current = values[i];
      values[i] = values[i - 1] + 0.5 * (points[i] - points[i - 1]) * (previous + current);
      previous = current;
    }
    for (double& v : values) v *= factor;
  };

  switch (derived.family()) {
    case Family::kIntegratedFbm:
      for (int j = 1; j <= derived.k(); ++j)
        cumulative_trapezoid(integration_constant(alpha, j));
      break;
    case Family::kTimeAverageFbm:
      cumulative_trapezoid(std::sqrt(alpha + 2.0));
      values[0] = 0.0;
      for (std::size_t i = 1; i < values.size(); ++i) values[i] /= points[i];
      break;
    default:
      throw ParameterError(fmt::format(
          "integrate_path: {} is not an integral-defined family", derived.label()));
  }
}

PathBatch derive_integrated(const PathBatch& base, const ProcessSpec& derived) {
  if (base.spec.family() != Family::kFbm || base.spec.is_transformed())
    throw ParameterError("derive_integrated: base batch must be plain fBm");
  if (derived.family() != Family::kIntegratedFbm &&
      derived.family() != Family::kTimeAverageFbm)
    throw ParameterError("derive_integrated: target must be integrated or time-average");
  if (derived.is_transformed() || derived.alpha_param() != base.spec.alpha_param())
    throw ParameterError(fmt::format(
        "derive_integrated: base {} does not match target {}", base.spec.label(),
        derived.label()));
  PathBatch out{base.values, base.grid, derived, base.seed,
                base.generator_id + "+trapezoid"};
  std::vector<double> row(base.grid.size());
  for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = out.values(r, i);
    integrate_path(derived, base.grid.points, row);
    for (std::size_t i = 0; i < row.size(); ++i) out.values(r, i) = row[i];
  }
  return out;
}

int integration_refinements(const Grid& grid, std::size_t min_points) {
  int r = 0;
  std::size_t n = grid.size();
  while (n < min_points && r < 20) {
    n = 2 * n - 1;
    ++r;
  }
  return r;
}

// ---- binary dump ----------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw ParameterError("path batch: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

constexpr char kMagic[8] = {'S', 'S', 'P', 'B', 'A', 'T', 'C', 'H'};

}  // namespace

void write_path_batch(const PathBatch& batch, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, 1);
  const ProcessSpec& s = batch.spec;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.family()));
  put<double>(out, s.alpha_param());
  put<double>(out, s.K());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.k()));
  put<double>(out, s.amplitude());
  put<double>(out, s.time_exponent());
  put<std::uint64_t>(out, batch.seed);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.generator_id.size()));
  out.write(batch.generator_id.data(), static_cast<std::streamsize>(batch.generator_id.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.grid.scheme));
  put<std::uint64_t>(out, batch.grid.size());
  for (double t : batch.grid.points) put<double>(out, t);
  put<std::uint64_t>(out, batch.n_paths());
  for (Eigen::Index r = 0; r < batch.values.rows(); ++r)
    for (Eigen::Index c = 0; c < batch.values.cols(); ++c) put<double>(out, batch.values(r, c));
}

PathBatch read_path_batch(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParameterError("path batch: bad magic");
  if (get<std::uint32_t>(in) != 1) throw ParameterError("path batch: unsupported version");
  const auto family_raw = get<std::uint32_t>(in);
  if (family_raw > static_cast<std::uint32_t>(Family::kDualFbm))
    throw ParameterError("path batch: bad family");
  const double alpha = get<double>(in);
  const double K = get<double>(in);
  const auto k = static_cast<int>(get<std::uint32_t>(in));
  const double amplitude = get<double>(in);
  const double time_exponent = get<double>(in);
  ProcessSpec spec(static_cast<Family>(family_raw), alpha, K, k);
  if (amplitude != 1.0) spec = spec.scaled(amplitude);
  if (time_exponent != 1.0) spec = spec.time_changed(time_exponent);
  const auto seed = get<std::uint64_t>(in);
  std::string id(get<std::uint32_t>(in), '\0');
  if (!in.read(id.data(), static_cast<std::streamsize>(id.size())))
    throw ParameterError("path batch: truncated generator id");
  const auto scheme = static_cast<GridScheme>(get<std::uint32_t>(in));
  std::vector<double> pts(get<std::uint64_t>(in));
  for (double& t : pts) t = get<double>(in);
  Grid grid = grid_from_points(std::move(pts), scheme);
  const auto rows = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  RowMatrix values(rows, static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) values(r, c) = get<double>(in);
  return PathBatch{std::move(values), std::move(grid), spec, seed, std::move(id)};
}

}  // namespace selfsim
