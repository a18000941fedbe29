#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dispmon {

// One timestamped sample from one sensor. Accelerations in m/s^2, angular
// rates in deg/s. seq_id and reg_time_ms belong to the server: the sensor
// never sets them.
struct SensorRecord {
  std::int64_t seq_id = 0;
  double t = 0.0;  // seconds since experiment start
  double ax = 0.0, ay = 0.0, az = 0.0;
  double gx = 0.0, gy = 0.0, gz = 0.0;
  std::int64_t sensor_id = 0;
  std::int64_t reg_time_ms = 0;  // server receive time, Unix epoch milliseconds

  bool operator==(const SensorRecord&) const = default;
};

enum class Axis { x, y, z };

Axis axis_from_string(std::string_view name);
double acceleration_on(const SensorRecord& r, Axis axis);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

// Wire frame without the trailing newline: t,ax,ay,az,gx,gy,gz,sensor_id
std::string format_frame(const SensorRecord& r);

std::int64_t now_epoch_ms();

// "2026-10-15T10:26:30.123Z"
std::string format_iso8601_ms(std::int64_t epoch_ms);
std::int64_t parse_iso8601_ms(std::string_view text);

}  // namespace dispmon
