#pragma once

// Two-table persistence: a live acquisition table and an archive of saved
// experiments keyed by save time.
//
// On-disk layout under the store directory:
//
//   live.log                 one canonical record line per live sample
//   experiments/<id>.log     header lines "# ..." followed by canonical lines
//
// Canonical record line (no spaces, shortest round-trip doubles):
//
//   seq_id,t,ax,ay,az,gx,gy,gz,sensor_id,reg_time_ms
//
// Experiment files are written to a temporary name, fsync'd and renamed, so a
// saved experiment survives a crash byte-for-byte. Live appends are flushed to
// the OS per record; a torn trailing line is discarded when reopening.

#include "dispmon/record.hpp"

#include <compare>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace dispmon {

// Printed as "20261015T102630.123Z-1": save time to the millisecond plus a
// counter that keeps ids unique when two saves land in the same millisecond.
struct ExperimentId {
  std::int64_t exp_time_ms = 0;
  std::int64_t suffix = 0;

  std::string str() const;
  std::string exp_time_iso8601() const;
  static ExperimentId parse(std::string_view text);

  auto operator<=>(const ExperimentId&) const = default;
};

struct ExperimentInfo {
  ExperimentId id;
  std::size_t record_count = 0;
};

std::string encode_record(const SensorRecord& r);
SensorRecord decode_record(std::string_view line);

class Store {
public:
  using Clock = std::function<std::int64_t()>;  // epoch milliseconds

  explicit Store(std::filesystem::path dir, Clock clock = now_epoch_ms);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Assigns seq_id = previous max + 1 (1 after a clear) and returns it.
  std::int64_t append_live(SensorRecord record);
  std::vector<SensorRecord> fetch_live(std::int64_t since_seq) const;
  std::size_t live_size() const;
  std::optional<SensorRecord> newest_live() const;
  // Bumped by every clear_live; lets readers notice the seq counter restarting.
  std::uint64_t live_generation() const;
  std::size_t clear_live();

  // Snapshot of the live table; throws PreconditionError when it is empty.
  ExperimentId save_experiment();
  std::vector<ExperimentInfo> list_experiments() const;
  std::vector<SensorRecord> fetch_experiment(const ExperimentId& id) const;
  std::size_t clear_experiments();

  // Frame-format export with a "# exp_time=<iso8601>" header line.
  void export_experiment(const ExperimentId& id, std::ostream& out) const;
  // Archives a frame file under its exp_time header (now when absent). Every
  // record's reg_time is set to exp_time; seq ids are renumbered from 1.
  ExperimentId import_experiment(std::istream& in);

  const std::filesystem::path& directory() const { return dir_; }

private:
  using Records = std::shared_ptr<const std::vector<SensorRecord>>;

  void load();
  void open_live_for_append();
  ExperimentId next_id(std::int64_t exp_time_ms);
  ExperimentId archive(std::vector<SensorRecord> records, std::int64_t exp_time_ms);
  std::filesystem::path experiment_path(const ExperimentId& id) const;

  std::filesystem::path dir_;
  Clock clock_;

  mutable std::shared_mutex mutex_;
  std::vector<SensorRecord> live_;
  std::uint64_t live_generation_ = 0;
  std::FILE* live_file_ = nullptr;
  std::map<ExperimentId, Records> archive_;
  std::int64_t next_suffix_ = 1;
};

}  // namespace dispmon
