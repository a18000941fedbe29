#pragma once

// Frame parsing and the acquisition lifecycle that moves sensor frames into
// the live table.
//
// Frame wire format, one per line, newline-terminated:
//
//   t,ax,ay,az,gx,gy,gz,sensor_id
//
// Source descriptors:
//
//   sim:<preset>[?seed=N&drop=P&jitter=S&speed=K&duration=S&noise=R]
//   file:<path>[?speed=K]
//
// speed is the replay rate relative to real time (1 = native pace, 0 = as
// fast as possible).

#include "dispmon/record.hpp"
#include "dispmon/signal.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace dispmon {

class Store;

// reg_time_ms is stamped here; seq_id is left 0 for the store to assign.
SensorRecord parse_frame(std::string_view line);

class FrameSource {
public:
  virtual ~FrameSource() = default;
  // Blocks until the next frame is due. nullopt when exhausted or stopped.
  virtual std::optional<std::string> next(std::stop_token stop) = 0;
  virtual std::string descriptor() const = 0;
};

// Plays a simulate_sensor stream as frames.
class SimulatedSource : public FrameSource {
public:
  SimulatedSource(std::vector<TimedRecord> records, double speed, std::string descriptor = "sim");
  std::optional<std::string> next(std::stop_token stop) override;
  std::string descriptor() const override { return descriptor_; }

private:
  std::vector<TimedRecord> records_;
  double speed_;
  std::string descriptor_;
  std::size_t pos_ = 0;
  std::optional<std::chrono::steady_clock::time_point> origin_;
};

// Replays a frame file, pacing by the frames' t field.
class FileSource : public FrameSource {
public:
  FileSource(std::string path, double speed);
  std::optional<std::string> next(std::stop_token stop) override;
  std::string descriptor() const override { return "file:" + path_; }

private:
  std::string path_;
  double speed_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
  std::optional<double> first_t_;
  std::optional<std::chrono::steady_clock::time_point> origin_;
};

std::unique_ptr<FrameSource> open_source(std::string_view descriptor);

enum class AcquisitionStatus { idle, running };
std::string_view to_string(AcquisitionStatus s);

struct AcquisitionState {
  AcquisitionStatus status = AcquisitionStatus::idle;
  std::string source;
  std::int64_t started_at_ms = 0;
  std::uint64_t records_ingested = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t frames_rejected = 0;
  bool source_exhausted = false;
};

// Owns the single acquisition a server may run. start/stop are serialized
// internally; the ingestion thread is the store's only live-table writer.
class Acquisition {
public:
  explicit Acquisition(Store& store);
  ~Acquisition();
  Acquisition(const Acquisition&) = delete;
  Acquisition& operator=(const Acquisition&) = delete;

  // Throws ConflictError when already running.
  AcquisitionState start(std::unique_ptr<FrameSource> source);
  // No record is appended after this returns. Stopping while idle is a no-op.
  AcquisitionState stop();
  AcquisitionState state() const;
  bool running() const;

  // Blocks until the running source is exhausted or the timeout passes.
  bool wait_exhausted(std::chrono::milliseconds timeout) const;

private:
  void run(std::stop_token stop, std::unique_ptr<FrameSource> source);

  Store& store_;
  mutable std::mutex mutex_;
  AcquisitionStatus status_ = AcquisitionStatus::idle;
  std::string source_;
  std::int64_t started_at_ms_ = 0;
  std::atomic<std::uint64_t> received_{0};
  std::atomic<std::uint64_t> rejected_{0};
  std::atomic<std::uint64_t> appended_{0};
  std::atomic<bool> exhausted_{false};
  std::jthread worker_;
};

}  // namespace dispmon
