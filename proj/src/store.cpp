#include "dispmon/store.hpp"

#include "dispmon/errors.hpp"
#include "dispmon/ingest.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace dispmon {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kLiveFile = "live.log";
constexpr std::string_view kExperimentDir = "experiments";
constexpr std::string_view kExperimentExt = ".log";
constexpr std::string_view kExperimentMagic = "# dispmon-experiment v1";

template <typename T>
T parse_number(std::string_view field, std::string_view what) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw PersistenceError("corrupt record: bad " + std::string(what) + " '" + std::string(field) + "'");
  }
  return value;
}

void fsync_path(const fs::path& p, bool directory) {
  const int fd = ::open(p.c_str(), directory ? O_RDONLY | O_DIRECTORY : O_RDONLY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

std::vector<std::string> read_lines(const fs::path& p, bool* torn_tail) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw PersistenceError("cannot open " + p.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      if (torn_tail) *torn_tail = true;
      break;
    }
    lines.emplace_back(content, pos, nl - pos);
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

std::string ExperimentId::str() const {
  // 2026-10-15T10:26:30.123Z -> 20261015T102630.123Z
  std::string iso = exp_time_iso8601();
  std::string compact;
  for (char c : iso) {
    if (c != '-' && c != ':') compact += c;
  }
  return compact + "-" + std::to_string(suffix);
}

std::string ExperimentId::exp_time_iso8601() const { return format_iso8601_ms(exp_time_ms); }

ExperimentId ExperimentId::parse(std::string_view text) {
  // YYYYMMDDTHHMMSS.mmmZ-<suffix>
  const auto dash = text.rfind('-');
  if (text.size() < 21 || dash != 20 || text[8] != 'T' || text[15] != '.' || text[19] != 'Z') {
    throw NotFoundError("malformed experiment id '" + std::string(text) + "'");
  }
  std::string iso;
  iso.append(text.substr(0, 4)).append("-").append(text.substr(4, 2)).append("-").append(text.substr(6, 2));
  iso.append("T").append(text.substr(9, 2)).append(":").append(text.substr(11, 2)).append(":");
  iso.append(text.substr(13, 7));
  ExperimentId id;
  try {
    id.exp_time_ms = parse_iso8601_ms(iso);
  } catch (const UsageError&) {
    throw NotFoundError("malformed experiment id '" + std::string(text) + "'");
  }
  const auto tail = text.substr(dash + 1);
  const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), id.suffix);
  if (res.ec != std::errc{} || res.ptr != tail.data() + tail.size() || id.suffix < 1) {
    throw NotFoundError("malformed experiment id '" + std::string(text) + "'");
  }
  return id;
}

std::string encode_record(const SensorRecord& r) {
  std::string out = std::to_string(r.seq_id);
  for (double v : {r.t, r.ax, r.ay, r.az, r.gx, r.gy, r.gz}) {
    out += ',';
    out += format_double(v);
  }
  out += ',';
  out += std::to_string(r.sensor_id);
  out += ',';
  out += std::to_string(r.reg_time_ms);
  return out;
}

SensorRecord decode_record(std::string_view line) {
  std::array<std::string_view, 10> f;
  std::size_t n = 0;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    if (n == f.size()) throw PersistenceError("corrupt record: too many fields");
    f[n++] = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (n != f.size()) throw PersistenceError("corrupt record: expected 10 fields");
  SensorRecord r;
  r.seq_id = parse_number<std::int64_t>(f[0], "seq_id");
  r.t = parse_number<double>(f[1], "t");
  r.ax = parse_number<double>(f[2], "ax");
  r.ay = parse_number<double>(f[3], "ay");
  r.az = parse_number<double>(f[4], "az");
  r.gx = parse_number<double>(f[5], "gx");
  r.gy = parse_number<double>(f[6], "gy");
  r.gz = parse_number<double>(f[7], "gz");
  r.sensor_id = parse_number<std::int64_t>(f[8], "sensor_id");
  r.reg_time_ms = parse_number<std::int64_t>(f[9], "reg_time_ms");
  return r;
}

Store::Store(fs::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {
  std::error_code ec;
  fs::create_directories(dir_ / kExperimentDir, ec);
  if (ec) throw PersistenceError("cannot create store directory " + dir_.string() + ": " + ec.message());
  load();
  open_live_for_append();
}

Store::~Store() {
  if (live_file_) std::fclose(live_file_);
}

void Store::load() {
  const fs::path live_path = dir_ / kLiveFile;
  if (fs::exists(live_path)) {
    bool torn = false;
    for (const auto& line : read_lines(live_path, &torn)) {
      if (!line.empty()) live_.push_back(decode_record(line));
    }
    if (torn) {
      // Rewrite without the partial line so later appends start clean.
      std::ofstream out(live_path, std::ios::binary | std::ios::trunc);
      for (const auto& r : live_) out << encode_record(r) << '\n';
    }
  }

  for (const auto& entry : fs::directory_iterator(dir_ / kExperimentDir)) {
    const auto& p = entry.path();
    if (p.extension() != kExperimentExt) continue;  // skips leftover *.tmp
    const ExperimentId id = ExperimentId::parse(p.stem().string());
    auto records = std::make_shared<std::vector<SensorRecord>>();
    for (const auto& line : read_lines(p, nullptr)) {
      if (line.empty() || line.front() == '#') continue;
      records->push_back(decode_record(line));
    }
    archive_.emplace(id, std::move(records));
    next_suffix_ = std::max(next_suffix_, id.suffix + 1);
  }
}

void Store::open_live_for_append() {
  live_file_ = std::fopen((dir_ / kLiveFile).c_str(), "ab");
  if (!live_file_) {
    throw PersistenceError("cannot open live table: " + std::string(std::strerror(errno)));
  }
}

std::int64_t Store::append_live(SensorRecord record) {
  std::unique_lock lock(mutex_);
  record.seq_id = live_.empty() ? 1 : live_.back().seq_id + 1;
  const std::string line = encode_record(record) + '\n';
  if (std::fwrite(line.data(), 1, line.size(), live_file_) != line.size() || std::fflush(live_file_) != 0) {
    throw PersistenceError("append to live table failed: " + std::string(std::strerror(errno)));
  }
  live_.push_back(record);
  return record.seq_id;
}

std::vector<SensorRecord> Store::fetch_live(std::int64_t since_seq) const {
  std::shared_lock lock(mutex_);
  // seq ids are 1..n without holes, so the slice starts at index since_seq.
  if (since_seq < 0) since_seq = 0;
  const auto from = static_cast<std::size_t>(since_seq);
  if (from >= live_.size()) return {};
  return {live_.begin() + static_cast<std::ptrdiff_t>(from), live_.end()};
}

std::size_t Store::live_size() const {
  std::shared_lock lock(mutex_);
  return live_.size();
}

std::optional<SensorRecord> Store::newest_live() const {
  std::shared_lock lock(mutex_);
  if (live_.empty()) return std::nullopt;
  return live_.back();
}

std::uint64_t Store::live_generation() const {
  std::shared_lock lock(mutex_);
  return live_generation_;
}

std::size_t Store::clear_live() {
  std::unique_lock lock(mutex_);
  const std::size_t removed = live_.size();
  std::fclose(live_file_);
  live_file_ = std::fopen((dir_ / kLiveFile).c_str(), "wb");
  if (!live_file_) throw PersistenceError("cannot truncate live table: " + std::string(std::strerror(errno)));
  ::fsync(::fileno(live_file_));
  live_.clear();
  ++live_generation_;
  return removed;
}

ExperimentId Store::next_id(std::int64_t exp_time_ms) { return ExperimentId{exp_time_ms, next_suffix_++}; }

fs::path Store::experiment_path(const ExperimentId& id) const {
  return dir_ / kExperimentDir / (id.str() + std::string(kExperimentExt));
}

ExperimentId Store::archive(std::vector<SensorRecord> records, std::int64_t exp_time_ms) {
  const ExperimentId id = next_id(exp_time_ms);
  const fs::path final_path = experiment_path(id);
  fs::path tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << kExperimentMagic << '\n' << "# exp_time=" << id.exp_time_iso8601() << '\n';
    for (const auto& r : records) out << encode_record(r) << '\n';
    out.flush();
    if (!out) throw PersistenceError("cannot write experiment " + id.str());
  }
  fsync_path(tmp, false);
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) throw PersistenceError("cannot commit experiment " + id.str() + ": " + ec.message());
  fsync_path(final_path.parent_path(), true);
  archive_.emplace(id, std::make_shared<const std::vector<SensorRecord>>(std::move(records)));
  return id;
}

ExperimentId Store::save_experiment() {
  std::unique_lock lock(mutex_);
  if (live_.empty()) throw PreconditionError("save_experiment: live table is empty");
  return archive(live_, clock_());
}

std::vector<ExperimentInfo> Store::list_experiments() const {
  std::shared_lock lock(mutex_);
  std::vector<ExperimentInfo> out;
  out.reserve(archive_.size());
  for (const auto& [id, records] : archive_) out.push_back({id, records->size()});
  return out;
}

std::vector<SensorRecord> Store::fetch_experiment(const ExperimentId& id) const {
  std::shared_lock lock(mutex_);
  const auto it = archive_.find(id);
  if (it == archive_.end()) throw NotFoundError("no experiment " + id.str());
  return *it->second;
}

std::size_t Store::clear_experiments() {
  std::unique_lock lock(mutex_);
  const std::size_t removed = archive_.size();
  for (const auto& [id, records] : archive_) {
    std::error_code ec;
    fs::remove(experiment_path(id), ec);
    if (ec) throw PersistenceError("cannot remove experiment " + id.str() + ": " + ec.message());
  }
  archive_.clear();
  fsync_path(dir_ / kExperimentDir, true);
  return removed;
}

void Store::export_experiment(const ExperimentId& id, std::ostream& out) const {
  const auto records = fetch_experiment(id);
  out << "# exp_time=" << id.exp_time_iso8601() << '\n';
  for (const auto& r : records) out << format_frame(r) << '\n';
}

ExperimentId Store::import_experiment(std::istream& in) {
  std::string line;
  std::optional<std::int64_t> exp_time;
  std::vector<SensorRecord> records;
  std::int64_t seq = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view key = "# exp_time=";
      if (line.starts_with(key)) exp_time = parse_iso8601_ms(std::string_view(line).substr(key.size()));
      continue;
    }
    SensorRecord r;
    try {
      r = parse_frame(line);
    } catch (const FrameError& e) {
      throw UsageError("import: " + std::string(e.what()));
    }
    r.seq_id = ++seq;
    records.push_back(r);
  }
  if (records.empty()) throw PreconditionError("import: no frames");
  // Headerless frame files (e.g. straight from a recorder) are stamped now.
  if (!exp_time) exp_time = clock_();
  for (auto& r : records) r.reg_time_ms = *exp_time;
  std::unique_lock lock(mutex_);
  return archive(std::move(records), *exp_time);
}

}  // namespace dispmon
