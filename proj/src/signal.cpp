#include "dispmon/signal.hpp"

#include "dispmon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace dispmon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t sample_count(const SignalSpec& spec) {
  return static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
}

void add_noise(std::vector<double>& a, double rms, std::uint64_t seed) {
  if (rms <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, rms);
  for (double& v : a) v += noise(rng);
}

// cos^4 pulse of total width w centred at 0, and its second derivative.
double pulse(double tau, double w) {
  if (std::abs(tau) > 0.5 * w) return 0.0;
  const double c = std::cos(std::numbers::pi * tau / w);
  return c * c * c * c;
}

double pulse_dd(double tau, double w) {
  if (std::abs(tau) > 0.5 * w) return 0.0;
  const double k = std::numbers::pi / w;
  const double c = std::cos(k * tau);
  const double s = std::sin(k * tau);
  return k * k * (12.0 * c * c * s * s - 4.0 * c * c * c * c);
}

}  // namespace

void SignalSpec::validate() const {
  if (!(duration_s > 0.0)) throw UsageError("duration_s must be > 0");
  if (!(sample_rate_hz > 0.0)) throw UsageError("sample_rate_hz must be > 0");
  if (noise_rms < 0.0) throw UsageError("noise_rms must be >= 0");
  if (kind == SignalKind::sinusoid) {
    if (!(frequency_hz > 0.0)) throw UsageError("sinusoid frequency must be > 0");
    if (amplitude_mm < 0.0) throw UsageError("sinusoid amplitude must be >= 0");
  } else {
    if (!(speed_kmh > 0.0)) throw UsageError("train speed must be > 0");
    if (axle_count <= 0) throw UsageError("train needs at least one axle");
    if (!(wheelbase_m > 0.0)) throw UsageError("wheelbase must be > 0");
    if (lead_in_s < 0.0) throw UsageError("lead-in must be >= 0");
  }
}

SignalSpec preset_signal(std::string_view name) {
  SignalSpec s;
  if (name == "s1") {
    s.kind = SignalKind::sinusoid;
    s.frequency_hz = 1.0;
    s.amplitude_mm = 1.0;
  } else if (name == "s2") {
    s.kind = SignalKind::sinusoid;
    s.frequency_hz = 2.0;
    s.amplitude_mm = 2.0;
  } else if (name == "t1") {
    s.kind = SignalKind::train_crossing;
    s.speed_kmh = 24.9;
    s.amplitude_mm = 3.0;
  } else if (name == "t2") {
    s.kind = SignalKind::train_crossing;
    s.speed_kmh = 31.1;
    s.amplitude_mm = 3.0;
  } else {
    throw UsageError("unknown signal preset '" + std::string(name) + "'");
  }
  return s;
}

GeneratedSignal gen_sinusoid(const SignalSpec& spec) {
  if (spec.kind != SignalKind::sinusoid) throw UsageError("gen_sinusoid: spec is not a sinusoid");
  spec.validate();
  const std::size_t n = sample_count(spec);
  const double omega = kTwoPi * spec.frequency_hz;
  const double amp_m = spec.amplitude_mm / kMetresToMillimetres;

  GeneratedSignal g;
  g.acceleration.sample_rate_hz = g.displacement.sample_rate_hz = spec.sample_rate_hz;
  g.acceleration.samples.resize(n);
  g.displacement.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    const double s = std::sin(omega * t);
    g.acceleration.samples[i] = -amp_m * omega * omega * s;
    g.displacement.samples[i] = spec.amplitude_mm * s;
  }
  add_noise(g.acceleration.samples, spec.noise_rms, spec.seed);
  return g;
}

GeneratedSignal gen_train_crossing(const SignalSpec& spec) {
  if (spec.kind != SignalKind::train_crossing) throw UsageError("gen_train_crossing: spec is not a train");
  spec.validate();
  const std::size_t n = sample_count(spec);
  const double speed = spec.speed_kmh / 3.6;
  const double spacing = spec.wheelbase_m / speed;
  const double depth_m = spec.amplitude_mm / kMetresToMillimetres;

  GeneratedSignal g;
  g.acceleration.sample_rate_hz = g.displacement.sample_rate_hz = spec.sample_rate_hz;
  g.acceleration.samples.assign(n, 0.0);
  g.displacement.samples.assign(n, 0.0);

  struct Lobe {
    double offset;
    double gain;
  };
  const Lobe lobes[] = {{0.0, -1.0}, {-0.5 * spacing, 0.5}, {0.5 * spacing, 0.5}};

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    double d = 0.0;
    double a = 0.0;
    for (int k = 0; k < spec.axle_count; ++k) {
      const double centre = spec.lead_in_s + static_cast<double>(k) * spacing;
      if (std::abs(t - centre) > spacing) continue;
      for (const auto& lobe : lobes) {
        const double tau = t - centre - lobe.offset;
        d += lobe.gain * pulse(tau, spacing);
        a += lobe.gain * pulse_dd(tau, spacing);
      }
    }
    g.displacement.samples[i] = spec.amplitude_mm * d;
    g.acceleration.samples[i] = depth_m * a;
  }
  add_noise(g.acceleration.samples, spec.noise_rms, spec.seed);
  return g;
}

GeneratedSignal generate(const SignalSpec& spec) {
  return spec.kind == SignalKind::sinusoid ? gen_sinusoid(spec) : gen_train_crossing(spec);
}

void LinkModel::validate() const {
  if (!(drop_probability >= 0.0 && drop_probability < 1.0)) {
    throw UsageError("drop_probability must be in [0, 1)");
  }
  if (!(jitter_stddev_s >= 0.0)) throw UsageError("jitter_stddev_s must be >= 0");
}

std::vector<TimedRecord> simulate_sensor(const AccelerationSeries& series, const LinkModel& link, Axis axis,
                                         std::int64_t sensor_id) {
  link.validate();
  if (!(series.sample_rate_hz > 0.0)) throw UsageError("simulate_sensor: sample rate must be > 0");

  std::mt19937_64 rng(link.seed);
  std::bernoulli_distribution drop(link.drop_probability);
  std::normal_distribution<double> jitter(0.0, link.jitter_stddev_s > 0.0 ? link.jitter_stddev_s : 1.0);

  std::vector<TimedRecord> out;
  out.reserve(series.samples.size());
  double last_delivery = 0.0;
  for (std::size_t i = 0; i < series.samples.size(); ++i) {
    // Draw both variates for every sample so the jitter sequence does not
    // depend on which records were dropped.
    const bool dropped = drop(rng);
    const double delay = link.jitter_stddev_s > 0.0 ? std::abs(jitter(rng)) : 0.0;
    if (dropped) continue;

    const double t = series.time_at(i);
    TimedRecord tr;
    tr.record.t = t;
    tr.record.sensor_id = sensor_id;
    switch (axis) {
      case Axis::x: tr.record.ax = series.samples[i]; break;
      case Axis::y: tr.record.ay = series.samples[i]; break;
      case Axis::z: tr.record.az = series.samples[i]; break;
    }
    last_delivery = std::max(last_delivery, t - series.start_time + delay);
    tr.deliver_at_s = last_delivery;
    out.push_back(tr);
  }
  return out;
}

}  // namespace dispmon
