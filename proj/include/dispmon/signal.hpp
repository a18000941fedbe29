#pragma once

// Test excitations and a simulated wireless sensor link.

#include "dispmon/recon.hpp"
#include "dispmon/record.hpp"

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace dispmon {

enum class SignalKind { sinusoid, train_crossing };

struct SignalSpec {
  SignalKind kind = SignalKind::sinusoid;
  // sinusoid
  double frequency_hz = 1.0;
  double amplitude_mm = 1.0;
  // train crossing; amplitude_mm is reused as the per-axle pulse depth
  double speed_kmh = 0.0;
  int axle_count = 24;
  double wheelbase_m = 3.0;
  double lead_in_s = 3.0;

  double duration_s = 20.0;
  double sample_rate_hz = kDefaultSampleRateHz;
  double noise_rms = 0.0;  // white noise on the acceleration, m/s^2
  std::uint64_t seed = 0;

  void validate() const;
};

// Presets "s1", "s2", "t1", "t2".
SignalSpec preset_signal(std::string_view name);

struct GeneratedSignal {
  AccelerationSeries acceleration;
  DisplacementSeries displacement;  // analytic oracle, mm
};

// a(t) = -A (2 pi f)^2 sin(2 pi f t), A in metres; oracle d(t) = A_mm sin(2 pi f t).
GeneratedSignal gen_sinusoid(const SignalSpec& spec);

// Each axle contributes a zero-mean pulse: a cos^4 dip of width s = wheelbase/speed
// flanked by two half-depth rebounds at +/- s/2. The acceleration is the analytic
// second derivative of that displacement.
GeneratedSignal gen_train_crossing(const SignalSpec& spec);

// Dispatches on spec.kind.
GeneratedSignal generate(const SignalSpec& spec);

struct LinkModel {
  double drop_probability = 0.0;  // [0, 1)
  double jitter_stddev_s = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TimedRecord {
  double deliver_at_s = 0.0;  // offset from stream start at which the server receives it
  SensorRecord record;
};

// Sensor-side view of a series: one record per surviving sample, signal on
// `axis`, every other channel zero. Delivery offsets are monotone; the
// sample timestamps t stay exact regardless of jitter. Pure in (series, link).
std::vector<TimedRecord> simulate_sensor(const AccelerationSeries& series, const LinkModel& link,
                                         Axis axis = Axis::x, std::int64_t sensor_id = 1);

}  // namespace dispmon
