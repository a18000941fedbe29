#include "dispmon/ingest.hpp"

#include "dispmon/errors.hpp"
#include "dispmon/store.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <condition_variable>

namespace dispmon {

namespace {

double parse_channel(std::string_view field, std::size_t index) {
  double v = 0.0;
  const auto* last = field.data() + field.size();
  const auto res = std::from_chars(field.data(), last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw FrameError("field " + std::to_string(index) + " is not a number: '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) throw FrameError("field " + std::to_string(index) + " is not finite");
  return v;
}

}  // namespace

SensorRecord parse_frame(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);

  std::array<std::string_view, 8> fields;
  std::size_t n = 0;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    if (n == fields.size()) throw FrameError("too many fields");
    fields[n++] = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (n != fields.size()) throw FrameError("expected 8 fields, got " + std::to_string(n));

  SensorRecord r;
  r.t = parse_channel(fields[0], 0);
  if (r.t < 0.0) throw FrameError("negative sample time");
  r.ax = parse_channel(fields[1], 1);
  r.ay = parse_channel(fields[2], 2);
  r.az = parse_channel(fields[3], 3);
  r.gx = parse_channel(fields[4], 4);
  r.gy = parse_channel(fields[5], 5);
  r.gz = parse_channel(fields[6], 6);

  const auto id = fields[7];
  const auto res = std::from_chars(id.data(), id.data() + id.size(), r.sensor_id);
  if (res.ec != std::errc{} || res.ptr != id.data() + id.size()) {
    throw FrameError("sensor_id is not an integer: '" + std::string(id) + "'");
  }
  r.reg_time_ms = now_epoch_ms();
  return r;
}

std::string_view to_string(AcquisitionStatus s) {
  return s == AcquisitionStatus::running ? "running" : "idle";
}

Acquisition::Acquisition(Store& store) : store_(store) {}

Acquisition::~Acquisition() { stop(); }

AcquisitionState Acquisition::start(std::unique_ptr<FrameSource> source) {
  std::lock_guard lock(mutex_);
  if (status_ == AcquisitionStatus::running) {
    throw ConflictError("acquisition already running from " + source_);
  }
  status_ = AcquisitionStatus::running;
  source_ = source->descriptor();
  started_at_ms_ = now_epoch_ms();
  received_ = 0;
  rejected_ = 0;
  appended_ = 0;
  exhausted_ = false;
  worker_ = std::jthread([this, src = std::move(source)](std::stop_token st) mutable { run(st, std::move(src)); });
  return {status_, source_, started_at_ms_, 0, 0, 0, false};
}

AcquisitionState Acquisition::stop() {
  std::lock_guard lock(mutex_);
  if (worker_.joinable()) {
    worker_.request_stop();
    worker_.join();
  }
  status_ = AcquisitionStatus::idle;
  return {status_, source_, started_at_ms_, appended_.load(), received_.load(), rejected_.load(), exhausted_.load()};
}

AcquisitionState Acquisition::state() const {
  std::lock_guard lock(mutex_);
  return {status_, source_, started_at_ms_, appended_.load(), received_.load(), rejected_.load(), exhausted_.load()};
}

bool Acquisition::running() const {
  std::lock_guard lock(mutex_);
  return status_ == AcquisitionStatus::running;
}

bool Acquisition::wait_exhausted(std::chrono::milliseconds timeout) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!exhausted_.load()) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return true;
}

void Acquisition::run(std::stop_token stop, std::unique_ptr<FrameSource> source) {
  while (!stop.stop_requested()) {
    auto frame = source->next(stop);
    if (!frame) break;
    if (stop.stop_requested()) break;
    ++received_;
    try {
      store_.append_live(parse_frame(*frame));
      ++appended_;
    } catch (const FrameError&) {
      ++rejected_;
    } catch (const PersistenceError&) {
      ++rejected_;
    }
  }
  if (!stop.stop_requested()) exhausted_ = true;
}

}  // namespace dispmon
