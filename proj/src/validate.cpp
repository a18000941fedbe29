#include "dispmon/validate.hpp"

#include "dispmon/errors.hpp"
#include "dispmon/ingest.hpp"
#include "dispmon/monitor.hpp"
#include "dispmon/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>

#include <unistd.h>

namespace dispmon {

double rms_error(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size()) throw ShapeError("rms_error: length mismatch");
  if (ref.size() < 2) throw ShapeError("rms_error: need at least 2 samples");
  double diff2 = 0.0;
  double ref2 = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = est[i] - ref[i];
    diff2 += d * d;
    ref2 += ref[i] * ref[i];
  }
  if (!(ref2 > 0.0)) throw DomainError("rms_error: reference RMS is zero");
  return 100.0 * std::sqrt(diff2 / ref2);
}

ValidationMode validation_mode_from_string(std::string_view name) {
  if (name == "direct") return ValidationMode::direct;
  if (name == "pipeline") return ValidationMode::pipeline;
  throw UsageError("unknown validation mode '" + std::string(name) + "'");
}

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dispmon-validate-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

void reconstruct_direct(const AccelerationSeries& accel, const ReconstructionConfig& cfg, std::vector<double>& est) {
  StreamReconstructor stream(cfg);
  for (const auto& seg : stream.push(accel)) {
    for (std::size_t i = 0; i < seg.series.samples.size(); ++i) est[seg.first_index + i] = seg.series.samples[i];
  }
}

void reconstruct_pipeline(const AccelerationSeries& accel, const ValidationOptions& opt, std::vector<double>& est) {
  TempDir dir;
  Store store(dir.path());
  {
    Acquisition acquisition(store);
    acquisition.start(std::make_unique<SimulatedSource>(simulate_sensor(accel, opt.link), 0.0, "sim:validation"));
    if (!acquisition.wait_exhausted(std::chrono::minutes(5))) throw Error("pipeline: simulated source did not finish");
    acquisition.stop();
  }

  ServiceConfig cfg;
  cfg.reconstruction = opt.reconstruction;
  LiveViewSession session(cfg);
  session.enable_tap();
  // Poll-sized batches, as the live endpoint would see them.
  const auto poll_batch = static_cast<std::size_t>(cfg.poll_interval_s * cfg.reconstruction.sample_rate_hz);
  const auto records = store.fetch_live(0);
  for (std::size_t i = 0; i < records.size(); i += poll_batch) {
    const std::size_t end = std::min(records.size(), i + poll_batch);
    session.feed(std::span(records).subspan(i, end - i));
  }

  for (const auto& p : session.tap()) {
    const auto idx = std::llround((p.t - accel.start_time) * accel.sample_rate_hz);
    if (idx >= 0 && static_cast<std::size_t>(idx) < est.size()) est[static_cast<std::size_t>(idx)] = p.d_mm;
  }
}

}  // namespace

ErrorReport run_validation(std::string_view case_label, ValidationMode mode, const ValidationOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  ErrorReport report;
  report.case_label = std::string(case_label);
  try {
    options.reconstruction.validate();
    SignalSpec spec = preset_signal(case_label);
    spec.seed = options.seed;
    spec.noise_rms = options.noise_rms;
    spec.sample_rate_hz = options.reconstruction.sample_rate_hz;
    const auto signal = generate(spec);
    const auto& ref = signal.displacement.samples;
    const std::size_t n = ref.size();

    std::vector<double> est(n, kMissing);
    if (options.self_check) {
      est = ref;
    } else if (mode == ValidationMode::direct) {
      reconstruct_direct(signal.acceleration, options.reconstruction, est);
    } else {
      reconstruct_pipeline(signal.acceleration, options, est);
    }

    // Longest run of reconstructed samples outside the edge-transient region.
    const std::size_t trim = options.reconstruction.window_len / 2;
    report.trimmed_each_side = trim;
    std::size_t best_start = 0;
    std::size_t best_len = 0;
    for (std::size_t i = trim; i + trim < n;) {
      if (std::isnan(est[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + trim < n && !std::isnan(est[j])) ++j;
      if (j - i > best_len) {
        best_start = i;
        best_len = j - i;
      }
      i = j;
    }
    if (best_len < 2) throw DomainError("no reconstructed samples inside the comparison region");

    const std::span<const double> e(est.data() + best_start, best_len);
    const std::span<const double> r(ref.data() + best_start, best_len);
    report.compared_samples = best_len;
    report.e_time_pct = rms_error(e, r);

    const double fs = options.reconstruction.sample_rate_hz;
    const auto pe = welch_psd(e, fs, options.segment_len, options.overlap_fraction);
    const auto pr = welch_psd(r, fs, options.segment_len, options.overlap_fraction);
    report.e_freq_pct = psd_band_error(pe, pr, 0.0, options.band_hz);

    report.max_est_mm = max_abs_displacement(e).value_mm;
    report.max_ref_mm = max_abs_displacement(r).value_mm;
  } catch (const Error& err) {
    throw Error("validation case " + report.case_label + ": " + err.what());
  }
  report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

void write_report_csv(std::ostream& out, std::span<const ErrorReport> reports, bool include_runtime) {
  out << "case,E_time_pct,E_freq_pct,max_est_mm,max_ref_mm,runtime_s\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%s,%.4f,%.4f,%.4f,%.4f,%.3f\n", r.case_label.c_str(), r.e_time_pct, r.e_freq_pct,
                  r.max_est_mm, r.max_ref_mm, include_runtime ? r.runtime_s : 0.0);
    out << line;
  }
}

void write_report_table(std::ostream& out, std::span<const ErrorReport> reports) {
  char line[128];
  out << "Signal  E_time(%)  E_freq(%)\n";
  for (const auto& r : reports) {
    std::string label = r.case_label;
    std::transform(label.begin(), label.end(), label.begin(), [](unsigned char c) { return std::toupper(c); });
    std::snprintf(line, sizeof line, "%-6s  %9.2f  %9.2f\n", label.c_str(), r.e_time_pct, r.e_freq_pct);
    out << line;
  }
}

}  // namespace dispmon
