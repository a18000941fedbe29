#pragma once

// Server-side displacement views and the control actions behind the HTTP API.

#include "dispmon/ingest.hpp"
#include "dispmon/recon.hpp"
#include "dispmon/record.hpp"
#include "dispmon/store.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dispmon {

enum class Severity { green, orange, red };

std::string_view to_string(Severity s);

// green <= 6.00 mm < orange <= 10.00 mm < red. Throws DomainError for negative input.
Severity classify_severity(double max_mm);

struct ServiceConfig {
  double poll_interval_s = 0.5;
  double display_rate_hz = 5.0;
  std::size_t max_points = 100;
  ReconstructionConfig reconstruction;
  Axis axis = Axis::x;
  // Acceleration gaps up to this long are bridged by linear interpolation
  // before streaming; longer ones restart the reconstructor.
  double max_fill_gap_s = 0.5;
  std::string bind = "127.0.0.1:8080";
  std::string default_source = "sim:s1";
  std::filesystem::path data_dir = "dispmon-data";

  void validate() const;
  // Samples between displayed points, round(fs / display_rate).
  std::size_t decimation_stride() const;
};

// JSON config file; keys mirror the field names, reconstruction keys are
// window_len, sample_rate_hz, weighting and lambda.
ServiceConfig load_service_config(const std::filesystem::path& path);

struct DisplayPoint {
  double t = 0.0;     // s
  double d_mm = 0.0;  // mm

  bool operator==(const DisplayPoint&) const = default;
};

struct DisplacementView {
  std::vector<DisplayPoint> points;
  double max_displacement_mm = 0.0;
  double max_time_s = 0.0;
  Severity severity = Severity::green;
  std::int64_t as_of_seq = 0;
  bool restarted = false;
};

// Turns irregular (t, a) samples into uniform runs. Missing samples within
// max_gap_s are linearly interpolated; anything else (backwards time, long
// or off-grid gaps) starts a new run.
class GapFiller {
public:
  GapFiller(double sample_rate_hz, double max_gap_s);

  // Appends the samples that (t, a) contributes to `out`. Returns false when
  // (t, a) begins a new run instead of continuing the current one.
  bool add(double t, double a, std::vector<double>& out);
  bool started() const { return started_; }
  double expected_next_t() const { return last_t_ + dt_; }
  void reset() { started_ = false; }

private:
  double dt_;
  double max_gap_s_;
  bool started_ = false;
  double last_t_ = 0.0;
  double last_a_ = 0.0;
};

// Streaming reconstruction, decimation and peak tracking for one client.
// Not thread-safe; MonitorService serializes access per session.
class LiveViewSession {
public:
  explicit LiveViewSession(const ServiceConfig& config);

  // Records must be in seq order and newer than cursor().
  void feed(std::span<const SensorRecord> records);
  // Current view. Clears the pending restarted flag.
  DisplacementView take_view();

  std::int64_t cursor() const { return cursor_; }

  // Keeps every reconstructed sample (undecimated) for validation.
  void enable_tap() { tap_enabled_ = true; }
  const std::vector<DisplayPoint>& tap() const { return tap_; }

private:
  struct Sample {
    std::uint64_t index;
    double t;
    double d;
  };

  void push_run(std::vector<double>& run, double run_start_t);

  std::size_t stride_;
  std::size_t retained_;  // undecimated samples kept, max_points * stride
  double sample_rate_hz_;
  Axis axis_;
  StreamReconstructor stream_;
  GapFiller filler_;

  std::deque<Sample> window_;
  std::int64_t cursor_ = 0;
  bool restarted_ = false;
  bool tap_enabled_ = false;
  std::vector<DisplayPoint> tap_;
};

// Decimated, peak-annotated view of a finished displacement record.
DisplacementView summarize_record(const DisplacementSeries& d, std::size_t max_points, std::int64_t as_of_seq);

struct ControlResult {
  AcquisitionState state;
  std::optional<std::size_t> removed;
};

enum class ControlAction { display, stop, del };

class MonitorService {
public:
  MonitorService(ServiceConfig config, std::shared_ptr<Store> store);
  ~MonitorService();

  // display starts the acquisition (source defaults to the configured one),
  // stop ends it, del clears the live table and is refused while running.
  ControlResult control(ControlAction action, std::optional<std::string> source = std::nullopt);
  AcquisitionState acquisition_state() const { return acquisition_.state(); }

  DisplacementView live_view(std::int64_t as_of_seq, const std::string& session = "default");
  std::vector<SensorRecord> live_accelerations(std::int64_t since_seq) const;

  ExperimentId save_experiment();
  std::vector<ExperimentInfo> list_experiments() const;
  std::size_t clear_experiments();
  DisplacementView experiment_view(const ExperimentId& id);

  const ServiceConfig& config() const { return config_; }
  Store& store() { return *store_; }
  Acquisition& acquisition() { return acquisition_; }

private:
  struct SessionSlot {
    std::mutex mutex;
    std::unique_ptr<LiveViewSession> session;
    std::uint64_t generation = 0;
  };

  ServiceConfig config_;
  std::shared_ptr<Store> store_;
  Acquisition acquisition_;
  std::mutex control_mutex_;

  std::mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<SessionSlot>> sessions_;

  std::mutex experiment_cache_mutex_;
  std::map<ExperimentId, DisplacementView> experiment_cache_;
};

}  // namespace dispmon
