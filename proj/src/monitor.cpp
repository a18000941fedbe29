#include "dispmon/monitor.hpp"

#include "dispmon/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dispmon {

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::green: return "green";
    case Severity::orange: return "orange";
    case Severity::red: return "red";
  }
  return "green";
}

Severity classify_severity(double max_mm) {
  if (!(max_mm >= 0.0)) throw DomainError("classify_severity: max displacement must be >= 0");
  if (max_mm <= 6.00) return Severity::green;
  if (max_mm <= 10.00) return Severity::orange;
  return Severity::red;
}

void ServiceConfig::validate() const {
  reconstruction.validate();
  if (!(poll_interval_s > 0.0)) throw UsageError("poll_interval_s must be > 0");
  if (!(display_rate_hz > 0.0) || display_rate_hz > reconstruction.sample_rate_hz) {
    throw UsageError("display_rate_hz must be in (0, sample_rate_hz]");
  }
  if (max_points == 0) throw UsageError("max_points must be > 0");
  if (max_fill_gap_s < 0.0) throw UsageError("max_fill_gap_s must be >= 0");
}

std::size_t ServiceConfig::decimation_stride() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(reconstruction.sample_rate_hz / display_rate_hz)));
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("bad config file " + path.string() + ": " + e.what());
  }
  ServiceConfig c;
  try {
    c.poll_interval_s = j.value("poll_interval_s", c.poll_interval_s);
    c.display_rate_hz = j.value("display_rate_hz", c.display_rate_hz);
    c.max_points = j.value("max_points", c.max_points);
    c.max_fill_gap_s = j.value("max_fill_gap_s", c.max_fill_gap_s);
    c.bind = j.value("bind", c.bind);
    c.default_source = j.value("source", c.default_source);
    c.data_dir = j.value("data_dir", c.data_dir.string());
    if (j.contains("axis")) c.axis = axis_from_string(j.at("axis").get<std::string>());
    auto& r = c.reconstruction;
    r.window_len = j.value("window_len", r.window_len);
    r.sample_rate_hz = j.value("sample_rate_hz", r.sample_rate_hz);
    if (j.contains("weighting")) r.weighting = weighting_from_string(j.at("weighting").get<std::string>());
    if (j.contains("lambda")) r.lambda_override = j.at("lambda").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("bad config value in " + path.string() + ": " + e.what());
  }
  return c;
}

GapFiller::GapFiller(double sample_rate_hz, double max_gap_s) : dt_(1.0 / sample_rate_hz), max_gap_s_(max_gap_s) {}

bool GapFiller::add(double t, double a, std::vector<double>& out) {
  if (!started_) {
    started_ = true;
    last_t_ = t;
    last_a_ = a;
    out.push_back(a);
    return true;
  }
  const double gap = t - last_t_;
  const auto steps = std::llround(gap / dt_);
  const bool on_grid = std::abs(gap - static_cast<double>(steps) * dt_) <= 0.25 * dt_;
  if (steps < 1 || !on_grid || static_cast<double>(steps - 1) * dt_ > max_gap_s_ + 0.25 * dt_) return false;

  for (long long k = 1; k < steps; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(steps);
    out.push_back(last_a_ + f * (a - last_a_));
  }
  out.push_back(a);
  last_t_ = t;
  last_a_ = a;
  return true;
}

LiveViewSession::LiveViewSession(const ServiceConfig& config)
    : stride_(config.decimation_stride()),
      retained_(config.max_points * config.decimation_stride()),
      sample_rate_hz_(config.reconstruction.sample_rate_hz),
      axis_(config.axis),
      stream_(config.reconstruction),
      filler_(config.reconstruction.sample_rate_hz, config.max_fill_gap_s) {}

void LiveViewSession::push_run(std::vector<double>& run, double run_start_t) {
  if (run.empty()) return;
  AccelerationSeries chunk{std::move(run), sample_rate_hz_, run_start_t};
  run.clear();

  std::vector<EmittedSegment> segments;
  try {
    segments = stream_.push(chunk);
  } catch (const GapError& gap) {
    restarted_ = true;
    // Time went backwards (new acquisition without a delete): the old points
    // would break ordering.
    if (gap.actual_t() < gap.expected_t()) window_.clear();
    segments = stream_.push(chunk);
  }

  for (const auto& seg : segments) {
    for (std::size_t i = 0; i < seg.series.samples.size(); ++i) {
      const Sample s{seg.first_index + i, seg.series.time_at(i), seg.series.samples[i]};
      window_.push_back(s);
      if (tap_enabled_) tap_.push_back({s.t, s.d});
    }
  }
  while (window_.size() > retained_) window_.pop_front();
}

void LiveViewSession::feed(std::span<const SensorRecord> records) {
  std::vector<double> run;
  double run_start_t = 0.0;
  for (const auto& r : records) {
    const double a = acceleration_on(r, axis_);
    if (run.empty()) {
      // Time of the first sample this record contributes, interpolated or not.
      run_start_t = filler_.started() ? std::min(r.t, filler_.expected_next_t()) : r.t;
    }
    if (!filler_.add(r.t, a, run)) {
      push_run(run, run_start_t);
      filler_.reset();
      run_start_t = r.t;
      filler_.add(r.t, a, run);
    }
    cursor_ = r.seq_id;
  }
  push_run(run, run_start_t);
}

DisplacementView LiveViewSession::take_view() {
  DisplacementView v;
  v.as_of_seq = cursor_;
  v.restarted = restarted_;
  restarted_ = false;
  if (window_.empty()) return v;

  const Sample* peak = &window_.front();
  for (const auto& s : window_) {
    if (std::abs(s.d) > std::abs(peak->d)) peak = &s;
    if (s.index % stride_ == 0) v.points.push_back({s.t, s.d});
  }
  v.max_displacement_mm = std::abs(peak->d);
  v.max_time_s = peak->t;
  v.severity = classify_severity(v.max_displacement_mm);
  return v;
}

DisplacementView summarize_record(const DisplacementSeries& d, std::size_t max_points, std::int64_t as_of_seq) {
  DisplacementView v;
  v.as_of_seq = as_of_seq;
  if (d.samples.empty()) return v;
  const std::size_t n = d.samples.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
  for (std::size_t i = 0; i < n; i += stride) v.points.push_back({d.time_at(i), d.samples[i]});
  const auto peak = max_abs_displacement(d);
  v.max_displacement_mm = peak.value_mm;
  v.max_time_s = d.time_at(peak.index);
  v.severity = classify_severity(peak.value_mm);
  return v;
}

MonitorService::MonitorService(ServiceConfig config, std::shared_ptr<Store> store)
    : config_(std::move(config)), store_(std::move(store)), acquisition_(*store_) {
  config_.validate();
}

MonitorService::~MonitorService() { acquisition_.stop(); }

ControlResult MonitorService::control(ControlAction action, std::optional<std::string> source) {
  std::lock_guard lock(control_mutex_);
  switch (action) {
    case ControlAction::display: {
      if (acquisition_.running()) throw ConflictError("acquisition already running");
      return {acquisition_.start(open_source(source.value_or(config_.default_source))), std::nullopt};
    }
    case ControlAction::stop:
      return {acquisition_.stop(), std::nullopt};
    case ControlAction::del: {
      if (acquisition_.running()) throw ConflictError("cannot delete the live table while acquisition is running");
      const std::size_t removed = store_->clear_live();
      return {acquisition_.state(), removed};
    }
  }
  throw UsageError("unknown control action");
}

DisplacementView MonitorService::live_view(std::int64_t as_of_seq, const std::string& session) {
  SessionSlot* slot = nullptr;
  {
    std::lock_guard lock(sessions_mutex_);
    auto& entry = sessions_[session];
    if (!entry) entry = std::make_unique<SessionSlot>();
    slot = entry.get();
  }

  std::lock_guard lock(slot->mutex);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::uint64_t generation = store_->live_generation();
    if (!slot->session || as_of_seq <= 0 || generation != slot->generation || as_of_seq > slot->session->cursor()) {
      slot->session = std::make_unique<LiveViewSession>(config_);
      slot->generation = generation;
    }
    auto records = store_->fetch_live(slot->session->cursor());
    if (store_->live_generation() != generation) {
      slot->session.reset();
      continue;
    }
    slot->session->feed(records);
    break;
  }
  if (!slot->session) slot->session = std::make_unique<LiveViewSession>(config_);
  return slot->session->take_view();
}

std::vector<SensorRecord> MonitorService::live_accelerations(std::int64_t since_seq) const {
  if (since_seq < 0) throw DomainError("since must be >= 0");
  return store_->fetch_live(since_seq);
}

ExperimentId MonitorService::save_experiment() { return store_->save_experiment(); }

std::vector<ExperimentInfo> MonitorService::list_experiments() const { return store_->list_experiments(); }

std::size_t MonitorService::clear_experiments() {
  const std::size_t removed = store_->clear_experiments();
  std::lock_guard lock(experiment_cache_mutex_);
  experiment_cache_.clear();
  return removed;
}

DisplacementView MonitorService::experiment_view(const ExperimentId& id) {
  {
    std::lock_guard lock(experiment_cache_mutex_);
    if (auto it = experiment_cache_.find(id); it != experiment_cache_.end()) return it->second;
  }
  const auto records = store_->fetch_experiment(id);

  // Reconstruct the most recent uniform run of the record.
  GapFiller filler(config_.reconstruction.sample_rate_hz, config_.max_fill_gap_s);
  std::vector<double> run;
  double run_start_t = 0.0;
  std::size_t runs = 0;
  for (const auto& r : records) {
    const double a = acceleration_on(r, config_.axis);
    if (!filler.add(r.t, a, run)) {
      run.clear();
      filler.reset();
      filler.add(r.t, a, run);
    }
    if (run.size() == 1) {
      run_start_t = r.t;
      ++runs;
    }
  }
  if (run.size() < kMinWindowLen) {
    throw PreconditionError("experiment " + id.str() + " has too few contiguous samples to reconstruct");
  }

  const AccelerationSeries accel{std::move(run), config_.reconstruction.sample_rate_hz, run_start_t};
  const auto d = reconstruct_record(accel, config_.reconstruction.weighting);
  DisplacementView v = summarize_record(d, config_.max_points, records.back().seq_id);
  v.restarted = runs > 1;

  std::lock_guard lock(experiment_cache_mutex_);
  experiment_cache_.try_emplace(id, v);
  return v;
}

}  // namespace dispmon
