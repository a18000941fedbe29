#pragma once

// Regularized FIR reconstruction of displacement from acceleration.
//
// For a window of N uniformly spaced acceleration samples a the displacement
// estimate is
//
//     d = C * a * dt^2,   C = (Lw^T Lw + lambda^2 I)^-1 Lw^T W S
//
// where D is the (N-2) x N second-difference stencil, W the diagonal weighting
// over the N-2 interior points, Lw = W D, and S selects the interior samples
// a[1..N-2] that each stencil row is centred on. C depends only on N, the
// weighting and lambda; dt^2 and the m -> mm factor are applied when
// reconstructing.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dispmon {

// Input accelerations are m/s^2; every displacement leaving this module is mm.
inline constexpr double kMetresToMillimetres = 1000.0;
inline constexpr std::size_t kMinWindowLen = 5;
inline constexpr std::size_t kDefaultWindowLen = 901;
inline constexpr double kDefaultSampleRateHz = 300.0;

enum class Weighting { identity, hann };

std::string_view to_string(Weighting w);
Weighting weighting_from_string(std::string_view name);

struct ReconstructionConfig {
  double sample_rate_hz = kDefaultSampleRateHz;
  std::size_t window_len = kDefaultWindowLen;
  Weighting weighting = Weighting::identity;
  std::optional<double> lambda_override;

  double dt() const { return 1.0 / sample_rate_hz; }
  // lambda_override when present, otherwise regularization_factor(window_len).
  double lambda() const;
  // Throws DomainError when an invariant does not hold.
  void validate() const;
};

// 46.81 * n^-1.95
double regularization_factor(std::size_t n);

struct DifferenceOperator {
  Eigen::MatrixXd rows;  // (n-2) x n, unscaled [1, -2, 1] stencil
};

DifferenceOperator second_difference_operator(std::size_t n, double dt);

struct WeightingDiagonal {
  Eigen::VectorXd weights;  // n-2 interior weights
};

WeightingDiagonal weighting_diagonal(Weighting scheme, std::size_t n);

struct AccelerationSeries {
  std::vector<double> samples;  // m/s^2
  double sample_rate_hz = kDefaultSampleRateHz;
  double start_time = 0.0;

  double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate_hz; }
};

struct DisplacementSeries {
  std::vector<double> samples;  // mm
  double sample_rate_hz = kDefaultSampleRateHz;
  double start_time = 0.0;

  double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate_hz; }
};

// Immutable once built; share freely between threads.
class CoefficientMatrix {
public:
  static std::shared_ptr<const CoefficientMatrix> build(const ReconstructionConfig& config);

  const Eigen::MatrixXd& matrix() const { return c_; }
  const ReconstructionConfig& config() const { return config_; }
  std::size_t size() const { return static_cast<std::size_t>(c_.rows()); }
  double lambda() const { return lambda_; }

private:
  CoefficientMatrix(ReconstructionConfig config, double lambda, Eigen::MatrixXd c)
      : config_(std::move(config)), lambda_(lambda), c_(std::move(c)) {}

  ReconstructionConfig config_;
  double lambda_;
  Eigen::MatrixXd c_;
};

// Builds once per (N, weighting, lambda) and returns the cached instance after.
std::shared_ptr<const CoefficientMatrix> coefficient_matrix(const ReconstructionConfig& config);

// accel length and rate must match the matrix's config.
DisplacementSeries reconstruct_batch(const CoefficientMatrix& c, const AccelerationSeries& accel);

// Whole-record reconstruction with N = accel length. Solves the same normal
// equations through a sparse Cholesky factorization, so C is never formed and
// records of tens of thousands of samples are fine.
DisplacementSeries reconstruct_record(const AccelerationSeries& accel,
                                      Weighting weighting = Weighting::identity,
                                      std::optional<double> lambda_override = std::nullopt);

struct PeakDisplacement {
  double value_mm = 0.0;
  std::size_t index = 0;
};

PeakDisplacement max_abs_displacement(std::span<const double> samples_mm);
inline PeakDisplacement max_abs_displacement(const DisplacementSeries& d) {
  return max_abs_displacement(d.samples);
}

// A contiguous run of reconstructed samples. first_index counts samples from
// the most recent (re)start of the stream.
struct EmittedSegment {
  std::uint64_t first_index = 0;
  DisplacementSeries series;
};

// Sliding-window application of a fixed C. Every hop of N/2 new samples the
// current window is reconstructed and its central N/2 samples are emitted, so
// the concatenated output is gap-free and skips the window-edge transients.
//
// One instance per stream; not thread-safe.
class StreamReconstructor {
public:
  explicit StreamReconstructor(const ReconstructionConfig& config);

  // chunk must continue the previous one within half a sample period. On a
  // discontinuity the buffer is reset and GapError is thrown; push the chunk
  // again to start a new stream at its start_time.
  std::vector<EmittedSegment> push(const AccelerationSeries& chunk);

  void reset();

  std::size_t window_len() const { return window_len_; }
  std::size_t hop() const { return hop_; }
  // Offset of the first emitted sample within each window.
  std::size_t emit_offset() const { return (window_len_ - hop_) / 2; }
  std::uint64_t samples_consumed() const { return consumed_; }
  std::uint64_t restarts() const { return restarts_; }

private:
  std::shared_ptr<const CoefficientMatrix> c_;
  double sample_rate_hz_;
  std::size_t window_len_;
  std::size_t hop_;

  std::vector<double> buffer_;
  std::uint64_t buffer_first_index_ = 0;  // stream index of buffer_[0]
  double stream_start_time_ = 0.0;
  std::uint64_t consumed_ = 0;
  std::uint64_t restarts_ = 0;
  bool started_ = false;
};

}  // namespace dispmon
