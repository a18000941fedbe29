#include "dispmon/errors.hpp"
#include "dispmon/validate.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>

namespace dispmon {

namespace {

// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

}  // namespace

PsdEstimate welch_psd(std::span<const double> series, double sample_rate_hz, std::size_t segment_len,
                      double overlap_fraction) {
  if (!(sample_rate_hz > 0.0)) throw DomainError("welch_psd: sample rate must be > 0");
  if (segment_len < 2) throw DomainError("welch_psd: segment length must be >= 2");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) throw DomainError("welch_psd: overlap must be in [0, 1)");
  if (series.size() < segment_len) {
    throw DomainError("welch_psd: series of " + std::to_string(series.size()) + " samples is shorter than segment " +
                      std::to_string(segment_len));
  }

  const std::size_t n = segment_len;
  const std::size_t overlap = static_cast<std::size_t>(std::floor(static_cast<double>(n) * overlap_fraction));
  const std::size_t hop = std::max<std::size_t>(1, n - overlap);
  const std::size_t bins = n / 2 + 1;

  std::vector<double> window(n);
  double window_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    window_power += window[i] * window[i];
  }

  auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
  std::unique_ptr<double, decltype(&fftw_free)> in_guard(in, fftw_free);
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_guard(out, fftw_free);
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE));
  }

  std::vector<double> acc(bins, 0.0);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + n <= series.size(); start += hop) {
    for (std::size_t i = 0; i < n; ++i) in[i] = series[start + i] * window[i];
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < bins; ++k) acc[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    ++segments;
  }

  const double scale = 1.0 / (sample_rate_hz * window_power * static_cast<double>(segments));
  PsdEstimate psd;
  psd.segment_len = n;
  psd.overlap_fraction = overlap_fraction;
  psd.frequencies_hz.resize(bins);
  psd.power.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    psd.frequencies_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n);
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    psd.power[k] = acc[k] * scale * (edge ? 1.0 : 2.0);
  }
  return psd;
}

double psd_band_error(const PsdEstimate& est, const PsdEstimate& ref, double band_lo_hz, double band_hi_hz) {
  if (est.frequencies_hz.size() != ref.frequencies_hz.size()) throw ShapeError("psd_band_error: grid size mismatch");
  std::vector<double> e;
  std::vector<double> r;
  for (std::size_t k = 0; k < est.frequencies_hz.size(); ++k) {
    const double f = est.frequencies_hz[k];
    if (std::abs(f - ref.frequencies_hz[k]) > 1e-9 * std::max(1.0, std::abs(f))) {
      throw ShapeError("psd_band_error: frequency grids differ");
    }
    if (f < band_lo_hz || f > band_hi_hz) continue;
    e.push_back(est.power[k]);
    r.push_back(ref.power[k]);
  }
  return rms_error(e, r);
}

}  // namespace dispmon
