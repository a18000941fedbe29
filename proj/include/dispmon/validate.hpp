#pragma once

// Error metrics and the end-to-end validation harness.

#include "dispmon/recon.hpp"
#include "dispmon/signal.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dispmon {

// 100 * RMS(est - ref) / RMS(ref)
double rms_error(std::span<const double> est, std::span<const double> ref);

struct PsdEstimate {
  std::vector<double> frequencies_hz;
  std::vector<double> power;  // one-sided density, unit^2 / Hz
  std::size_t segment_len = 0;
  double overlap_fraction = 0.0;

  double resolution_hz() const { return frequencies_hz.size() > 1 ? frequencies_hz[1] - frequencies_hz[0] : 0.0; }
};

inline constexpr std::size_t kDefaultSegmentLen = 2048;
inline constexpr double kDefaultOverlap = 0.5;
inline constexpr double kDefaultBandHz = 20.0;

// Periodic-Hann windowed, overlapped, averaged periodogram. No detrending, so
// a constant signal lands in the 0 Hz bin. sum(power) * df approximates the
// mean square of the input.
PsdEstimate welch_psd(std::span<const double> series, double sample_rate_hz,
                      std::size_t segment_len = kDefaultSegmentLen, double overlap_fraction = kDefaultOverlap);

// rms_error over the PSD values whose frequency lies in [band_lo, band_hi].
double psd_band_error(const PsdEstimate& est, const PsdEstimate& ref, double band_lo_hz = 0.0,
                      double band_hi_hz = kDefaultBandHz);

enum class ValidationMode { direct, pipeline };

struct ValidationOptions {
  std::uint64_t seed = 7;
  ReconstructionConfig reconstruction;
  std::size_t segment_len = kDefaultSegmentLen;
  double overlap_fraction = kDefaultOverlap;
  double band_hz = kDefaultBandHz;
  double noise_rms = 0.0;
  LinkModel link;  // pipeline mode only
  // Substitute the oracle for the estimate; both errors must come out 0.
  bool self_check = false;
};

struct ErrorReport {
  std::string case_label;
  double e_time_pct = 0.0;
  double e_freq_pct = 0.0;
  double max_est_mm = 0.0;
  double max_ref_mm = 0.0;
  double runtime_s = 0.0;
  std::size_t compared_samples = 0;
  std::size_t trimmed_each_side = 0;
};

// Case labels "s1", "s2", "t1", "t2". Direct mode reconstructs the generated
// acceleration window by window; pipeline mode goes simulator -> frames ->
// ingest -> store -> live view. The time-domain comparison excludes the first
// and last N/2 samples of the record.
ErrorReport run_validation(std::string_view case_label, ValidationMode mode, const ValidationOptions& options = {});

ValidationMode validation_mode_from_string(std::string_view name);

// CSV: case,E_time_pct,E_freq_pct,max_est_mm,max_ref_mm,runtime_s
void write_report_csv(std::ostream& out, std::span<const ErrorReport> reports, bool include_runtime = true);
// Fixed-width two-column summary table.
void write_report_table(std::ostream& out, std::span<const ErrorReport> reports);

}  // namespace dispmon
