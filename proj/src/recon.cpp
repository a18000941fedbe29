#include "dispmon/recon.hpp"

#include "dispmon/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

namespace dispmon {

std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::identity: return "identity";
    case Weighting::hann: return "hann";
  }
  return "identity";
}

Weighting weighting_from_string(std::string_view name) {
  if (name == "identity") return Weighting::identity;
  if (name == "hann") return Weighting::hann;
  throw UsageError("unknown weighting scheme '" + std::string(name) + "'");
}

double regularization_factor(std::size_t n) {
  if (n < kMinWindowLen) {
    throw DomainError("regularization_factor: window length " + std::to_string(n) + " < 5");
  }
  return 46.81 * std::pow(static_cast<double>(n), -1.95);
}

double ReconstructionConfig::lambda() const {
  return lambda_override ? *lambda_override : regularization_factor(window_len);
}

void ReconstructionConfig::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw DomainError("sample_rate_hz must be positive");
  }
  if (window_len < kMinWindowLen) {
    throw DomainError("window_len must be >= 5, got " + std::to_string(window_len));
  }
  if (lambda_override && (!std::isfinite(*lambda_override) || *lambda_override < 0.0)) {
    throw DomainError("lambda_override must be a non-negative real");
  }
  if (!(lambda() > 0.0)) throw DomainError("effective lambda must be > 0");
}

DifferenceOperator second_difference_operator(std::size_t n, double dt) {
  if (n < kMinWindowLen) throw DomainError("second_difference_operator: n < 5");
  if (!(dt > 0.0)) throw DomainError("second_difference_operator: dt must be > 0");
  const auto rows = static_cast<Eigen::Index>(n - 2);
  DifferenceOperator op{Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(n))};
  for (Eigen::Index i = 0; i < rows; ++i) {
    op.rows(i, i) = 1.0;
    op.rows(i, i + 1) = -2.0;
    op.rows(i, i + 2) = 1.0;
  }
  return op;
}

WeightingDiagonal weighting_diagonal(Weighting scheme, std::size_t n) {
  if (n < kMinWindowLen) throw DomainError("weighting_diagonal: n < 5");
  const auto m = static_cast<Eigen::Index>(n - 2);
  WeightingDiagonal w{Eigen::VectorXd::Ones(m)};
  if (scheme == Weighting::hann) {
    // Symmetric Hann over the interior points; m >= 3 so the peak is nonzero.
    for (Eigen::Index i = 0; i < m; ++i) {
      w.weights(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                          static_cast<double>(m - 1));
    }
  }
  return w;
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Lw = W * D as a sparse (n-2) x n matrix.
SparseMatrix weighted_difference(const Eigen::VectorXd& w, Eigen::Index n) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(3 * (n - 2)));
  for (Eigen::Index i = 0; i < n - 2; ++i) {
    triplets.emplace_back(i, i, w(i));
    triplets.emplace_back(i, i + 1, -2.0 * w(i));
    triplets.emplace_back(i, i + 2, w(i));
  }
  SparseMatrix lw(n - 2, n);
  lw.setFromTriplets(triplets.begin(), triplets.end());
  return lw;
}

// W * S: row i picks interior sample i + 1 with weight w(i).
SparseMatrix weighted_selector(const Eigen::VectorXd& w, Eigen::Index n) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n - 2));
  for (Eigen::Index i = 0; i < n - 2; ++i) triplets.emplace_back(i, i + 1, w(i));
  SparseMatrix ws(n - 2, n);
  ws.setFromTriplets(triplets.begin(), triplets.end());
  return ws;
}

SparseMatrix normal_matrix(const SparseMatrix& lw, double lambda) {
  SparseMatrix a = SparseMatrix(lw.transpose()) * lw;
  SparseMatrix ridge(a.rows(), a.cols());
  ridge.setIdentity();
  a += (lambda * lambda) * ridge;
  return a;
}

void check_samples(std::span<const double> samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw DataError("non-finite acceleration sample at index " + std::to_string(i));
    }
  }
}

}  // namespace

std::shared_ptr<const CoefficientMatrix> CoefficientMatrix::build(const ReconstructionConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.window_len);
  const double lambda = config.lambda();
  const auto w = weighting_diagonal(config.weighting, config.window_len);

  const SparseMatrix lw = weighted_difference(w.weights, n);
  const Eigen::MatrixXd a = Eigen::MatrixXd(normal_matrix(lw, lambda));
  const Eigen::MatrixXd b = Eigen::MatrixXd(SparseMatrix(lw.transpose()) * weighted_selector(w.weights, n));

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericError("coefficient_matrix: normal matrix is not positive definite", llt.rcond());
  }
  Eigen::MatrixXd c = llt.solve(b);
  if (!c.allFinite()) {
    throw NumericError("coefficient_matrix: non-finite coefficients", llt.rcond());
  }
  return std::shared_ptr<const CoefficientMatrix>(new CoefficientMatrix(config, lambda, std::move(c)));
}

std::shared_ptr<const CoefficientMatrix> coefficient_matrix(const ReconstructionConfig& config) {
  config.validate();
  using Key = std::tuple<std::size_t, Weighting, double>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const CoefficientMatrix>> cache;

  const Key key{config.window_len, config.weighting, config.lambda()};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  // Built outside the lock; two racing builders produce identical matrices.
  auto built = CoefficientMatrix::build(config);
  std::lock_guard lock(mutex);
  if (cache.size() >= 16) cache.clear();
  return cache.try_emplace(key, std::move(built)).first->second;
}

DisplacementSeries reconstruct_batch(const CoefficientMatrix& c, const AccelerationSeries& accel) {
  const auto& cfg = c.config();
  if (accel.samples.size() != c.size()) {
    throw ShapeError("reconstruct_batch: expected " + std::to_string(c.size()) + " samples, got " +
                     std::to_string(accel.samples.size()));
  }
  if (std::abs(accel.sample_rate_hz - cfg.sample_rate_hz) > 1e-9 * cfg.sample_rate_hz) {
    throw ShapeError("reconstruct_batch: sample rate mismatch");
  }
  check_samples(accel.samples);

  const double dt = cfg.dt();
  const double scale = dt * dt * kMetresToMillimetres;
  const Eigen::Map<const Eigen::VectorXd> a(accel.samples.data(), static_cast<Eigen::Index>(accel.samples.size()));

  DisplacementSeries out;
  out.sample_rate_hz = accel.sample_rate_hz;
  out.start_time = accel.start_time;
  out.samples.resize(accel.samples.size());
  Eigen::Map<Eigen::VectorXd> d(out.samples.data(), static_cast<Eigen::Index>(out.samples.size()));
  d.noalias() = c.matrix() * a;
  d *= scale;
  return out;
}

DisplacementSeries reconstruct_record(const AccelerationSeries& accel, Weighting weighting,
                                      std::optional<double> lambda_override) {
  ReconstructionConfig cfg;
  cfg.sample_rate_hz = accel.sample_rate_hz;
  cfg.window_len = accel.samples.size();
  cfg.weighting = weighting;
  cfg.lambda_override = lambda_override;
  cfg.validate();
  check_samples(accel.samples);

  const auto n = static_cast<Eigen::Index>(cfg.window_len);
  const auto w = weighting_diagonal(weighting, cfg.window_len);
  const SparseMatrix lw = weighted_difference(w.weights, n);

  Eigen::VectorXd rhs_interior(n - 2);
  for (Eigen::Index i = 0; i < n - 2; ++i) {
    rhs_interior(i) = w.weights(i) * accel.samples[static_cast<std::size_t>(i + 1)];
  }
  const Eigen::VectorXd rhs = lw.transpose() * rhs_interior;

  Eigen::SimplicialLLT<SparseMatrix> solver(normal_matrix(lw, cfg.lambda()));
  if (solver.info() != Eigen::Success) {
    throw NumericError("reconstruct_record: factorization failed", 0.0);
  }
  Eigen::VectorXd d = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !d.allFinite()) {
    throw NumericError("reconstruct_record: solve produced non-finite values", 0.0);
  }

  const double dt = cfg.dt();
  d *= dt * dt * kMetresToMillimetres;
  return DisplacementSeries{std::vector<double>(d.begin(), d.end()), accel.sample_rate_hz, accel.start_time};
}

PeakDisplacement max_abs_displacement(std::span<const double> samples_mm) {
  if (samples_mm.empty()) throw DomainError("max_abs_displacement: empty series");
  PeakDisplacement peak{std::abs(samples_mm[0]), 0};
  for (std::size_t i = 1; i < samples_mm.size(); ++i) {
    const double v = std::abs(samples_mm[i]);
    if (v > peak.value_mm) peak = {v, i};
  }
  return peak;
}

StreamReconstructor::StreamReconstructor(const ReconstructionConfig& config)
    : c_(coefficient_matrix(config)),
      sample_rate_hz_(config.sample_rate_hz),
      window_len_(config.window_len),
      hop_(config.window_len / 2) {
  buffer_.reserve(2 * window_len_);
}

void StreamReconstructor::reset() {
  buffer_.clear();
  buffer_first_index_ = 0;
  consumed_ = 0;
  started_ = false;
}

std::vector<EmittedSegment> StreamReconstructor::push(const AccelerationSeries& chunk) {
  if (std::abs(chunk.sample_rate_hz - sample_rate_hz_) > 1e-9 * sample_rate_hz_) {
    throw ShapeError("stream chunk sample rate mismatch");
  }
  check_samples(chunk.samples);
  if (chunk.samples.empty()) return {};

  const double dt = 1.0 / sample_rate_hz_;
  if (started_) {
    const double expected = stream_start_time_ + static_cast<double>(consumed_) * dt;
    if (std::abs(chunk.start_time - expected) > 0.5 * dt) {
      reset();
      ++restarts_;
      throw GapError(expected, chunk.start_time);
    }
  } else {
    started_ = true;
    stream_start_time_ = chunk.start_time;
  }

  buffer_.insert(buffer_.end(), chunk.samples.begin(), chunk.samples.end());
  consumed_ += chunk.samples.size();

  std::vector<EmittedSegment> out;
  const std::size_t lo = emit_offset();
  while (buffer_.size() >= window_len_) {
    AccelerationSeries window{std::vector<double>(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(window_len_)),
                              sample_rate_hz_, 0.0};
    const auto d = reconstruct_batch(*c_, window);

    EmittedSegment seg;
    seg.first_index = buffer_first_index_ + lo;
    seg.series.sample_rate_hz = sample_rate_hz_;
    seg.series.start_time = stream_start_time_ + static_cast<double>(seg.first_index) * dt;
    seg.series.samples.assign(d.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                              d.samples.begin() + static_cast<std::ptrdiff_t>(lo + hop_));
    out.push_back(std::move(seg));

    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(hop_));
    buffer_first_index_ += hop_;
  }
  return out;
}

}  // namespace dispmon
