#include "dispmon/record.hpp"

#include "dispmon/errors.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>

namespace dispmon {

Axis axis_from_string(std::string_view name) {
  if (name == "x") return Axis::x;
  if (name == "y") return Axis::y;
  if (name == "z") return Axis::z;
  throw UsageError("unknown axis '" + std::string(name) + "'");
}

double acceleration_on(const SensorRecord& r, Axis axis) {
  switch (axis) {
    case Axis::x: return r.ax;
    case Axis::y: return r.ay;
    case Axis::z: return r.az;
  }
  return r.ax;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_frame(const SensorRecord& r) {
  std::string out;
  out.reserve(96);
  for (double v : {r.t, r.ax, r.ay, r.az, r.gx, r.gy, r.gz}) {
    out += format_double(v);
    out += ',';
  }
  out += std::to_string(r.sensor_id);
  return out;
}

std::int64_t now_epoch_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string format_iso8601_ms(std::int64_t epoch_ms) {
  std::int64_t secs = epoch_ms / 1000;
  std::int64_t ms = epoch_ms % 1000;
  if (ms < 0) {
    ms += 1000;
    --secs;
  }
  const std::time_t tt = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::array<char, 96> buf{};
  std::snprintf(buf.data(), buf.size(), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf.data();
}

std::int64_t parse_iso8601_ms(std::string_view text) {
  std::tm tm{};
  int ms = 0;
  const std::string s(text);
  const int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                            &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &ms);
  if (n != 7) throw UsageError("bad ISO-8601 timestamp '" + s + "'");
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const std::int64_t out = static_cast<std::int64_t>(timegm(&tm)) * 1000 + ms;
  // timegm normalizes out-of-range fields (month 13, Feb 30); only the
  // canonical spelling is accepted.
  if (format_iso8601_ms(out) != s) throw UsageError("bad ISO-8601 timestamp '" + s + "'");
  return out;
}

}  // namespace dispmon
