#include "dispmon/errors.hpp"
#include "dispmon/ingest.hpp"

#include <charconv>
#include <condition_variable>
#include <fstream>
#include <map>

namespace dispmon {

namespace {

// Sleeps until deadline; false when stop was requested first.
bool sleep_until(std::stop_token stop, std::chrono::steady_clock::time_point deadline) {
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  return !cv.wait_until(lock, stop, deadline, [] { return false; }) && !stop.stop_requested();
}

std::chrono::steady_clock::duration seconds_to_duration(double s) {
  return std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(s));
}

double parse_param_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw UsageError("source parameter " + key + " is not a number: '" + value + "'");
  }
  return v;
}

std::map<std::string, std::string> parse_query(std::string_view query) {
  std::map<std::string, std::string> out;
  while (!query.empty()) {
    const auto amp = query.find('&');
    const auto item = query.substr(0, amp);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw UsageError("source parameter without value: '" + std::string(item) + "'");
    out[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    query.remove_prefix(amp + 1);
  }
  return out;
}

}  // namespace

SimulatedSource::SimulatedSource(std::vector<TimedRecord> records, double speed, std::string descriptor)
    : records_(std::move(records)), speed_(speed), descriptor_(std::move(descriptor)) {
  if (speed_ < 0.0) throw UsageError("replay speed must be >= 0");
}

std::optional<std::string> SimulatedSource::next(std::stop_token stop) {
  if (pos_ >= records_.size() || stop.stop_requested()) return std::nullopt;
  const auto& tr = records_[pos_];
  if (speed_ > 0.0) {
    if (!origin_) origin_ = std::chrono::steady_clock::now();
    if (!sleep_until(stop, *origin_ + seconds_to_duration(tr.deliver_at_s / speed_))) return std::nullopt;
  }
  ++pos_;
  return format_frame(tr.record);
}

FileSource::FileSource(std::string path, double speed) : path_(std::move(path)), speed_(speed) {
  if (speed_ < 0.0) throw UsageError("replay speed must be >= 0");
  std::ifstream in(path_);
  if (!in) throw UsageError("cannot open frame file " + path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    lines_.push_back(line);
  }
}

std::optional<std::string> FileSource::next(std::stop_token stop) {
  if (pos_ >= lines_.size() || stop.stop_requested()) return std::nullopt;
  const std::string& line = lines_[pos_];
  if (speed_ > 0.0) {
    // Pace on the t field; frames whose t does not parse are delivered at once
    // and rejected by the ingester.
    double t = 0.0;
    const auto comma = line.find(',');
    const auto res = std::from_chars(line.data(), line.data() + (comma == std::string::npos ? line.size() : comma), t);
    if (res.ec == std::errc{}) {
      if (!origin_) {
        origin_ = std::chrono::steady_clock::now();
        first_t_ = t;
      }
      const double offset = std::max(0.0, t - *first_t_) / speed_;
      if (!sleep_until(stop, *origin_ + seconds_to_duration(offset))) return std::nullopt;
    }
  }
  ++pos_;
  return line;
}

std::unique_ptr<FrameSource> open_source(std::string_view descriptor) {
  const auto colon = descriptor.find(':');
  if (colon == std::string_view::npos) throw UsageError("source descriptor needs a scheme: '" + std::string(descriptor) + "'");
  const auto scheme = descriptor.substr(0, colon);
  auto rest = descriptor.substr(colon + 1);
  std::map<std::string, std::string> params;
  if (const auto q = rest.find('?'); q != std::string_view::npos) {
    params = parse_query(rest.substr(q + 1));
    rest = rest.substr(0, q);
  }

  double speed = 1.0;
  if (auto it = params.find("speed"); it != params.end()) {
    speed = parse_param_double("speed", it->second);
    params.erase(it);
  }

  if (scheme == "file") {
    if (!params.empty()) throw UsageError("unknown file source parameter '" + params.begin()->first + "'");
    return std::make_unique<FileSource>(std::string(rest), speed);
  }
  if (scheme != "sim") throw UsageError("unknown source scheme '" + std::string(scheme) + "'");

  SignalSpec spec = preset_signal(rest);
  LinkModel link;
  for (const auto& [key, value] : params) {
    const double v = parse_param_double(key, value);
    if (key == "seed") {
      link.seed = static_cast<std::uint64_t>(v);
      spec.seed = link.seed;
    } else if (key == "drop") {
      link.drop_probability = v;
    } else if (key == "jitter") {
      link.jitter_stddev_s = v;
    } else if (key == "duration") {
      spec.duration_s = v;
    } else if (key == "noise") {
      spec.noise_rms = v;
    } else {
      throw UsageError("unknown sim source parameter '" + key + "'");
    }
  }
  const auto signal = generate(spec);
  return std::make_unique<SimulatedSource>(simulate_sensor(signal.acceleration, link), speed, std::string(descriptor));
}

}  // namespace dispmon
