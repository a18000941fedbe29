#include "dispmon/errors.hpp"
#include "dispmon/ingest.hpp"
#include "dispmon/store.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <chrono>
#include <fstream>
#include <thread>

using namespace dispmon;
using namespace std::chrono_literals;

namespace {

// Frames from a plain vector, delivered as fast as requested.
class ListSource : public FrameSource {
public:
  explicit ListSource(std::vector<std::string> frames, std::string name = "list")
      : frames_(std::move(frames)), name_(std::move(name)) {}
  std::optional<std::string> next(std::stop_token stop) override {
    if (pos_ >= frames_.size() || stop.stop_requested()) return std::nullopt;
    return frames_[pos_++];
  }
  std::string descriptor() const override { return name_; }

private:
  std::vector<std::string> frames_;
  std::string name_;
  std::size_t pos_ = 0;
};

// Never runs dry: one frame every millisecond until stopped.
class EndlessSource : public FrameSource {
public:
  std::optional<std::string> next(std::stop_token stop) override {
    if (stop.stop_requested()) return std::nullopt;
    std::this_thread::sleep_for(1ms);
    return format_frame(SensorRecord{0, 0.001 * static_cast<double>(n_++), 0.1, 0, 0, 0, 0, 0, 1, 0});
  }
  std::string descriptor() const override { return "endless"; }

private:
  std::int64_t n_ = 0;
};

}  // namespace

TEST_CASE("parse_frame maps fields directly") {
  const auto before = now_epoch_ms();
  const auto r = parse_frame("0.0033,0.0,0.0,9.81,0.0,0.0,0.0,1");
  CHECK(r.t == 0.0033);
  CHECK(r.az == 9.81);
  CHECK(r.ax == 0.0);
  CHECK(r.sensor_id == 1);
  CHECK(r.seq_id == 0);
  CHECK(r.reg_time_ms >= before);
  CHECK(r.reg_time_ms <= now_epoch_ms());

  const auto g = parse_frame("12.5,-1e-3,2,3,4.5,-5.25,6,42\r\n");
  CHECK(g.ay == 2.0);
  CHECK(g.gx == 4.5);
  CHECK(g.gy == -5.25);
  CHECK(g.gz == 6.0);
  CHECK(g.sensor_id == 42);
}

TEST_CASE("parse_frame rejects malformed frames") {
  for (const char* bad : {"bad,data", "", "1,2,3,4,5,6,7", "1,2,3,4,5,6,7,8,9", "x,0,0,0,0,0,0,1", "0,0,0,0,0,0,0,1.5",
                          "0,nan,0,0,0,0,0,1", "0,0,inf,0,0,0,0,1", "-1,0,0,0,0,0,0,1", "0,0,0,,0,0,0,1",
                          "0, 1,0,0,0,0,0,1", "0,0,0,0,0,0,0,"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_frame(bad), FrameError);
  }
}

TEST_CASE("frames round-trip through format_frame") {
  SensorRecord r{0, 1.0 / 3.0, -0.1, 9.80665, 1e-300, 0.5, -2.25, 123456.789, 7, 0};
  const auto back = parse_frame(format_frame(r));
  CHECK(back.t == r.t);
  CHECK(back.ax == r.ax);
  CHECK(back.ay == r.ay);
  CHECK(back.az == r.az);
  CHECK(back.gz == r.gz);
  CHECK(back.sensor_id == 7);
  CHECK(format_frame(SensorRecord{0, 0.5, 1, 0, 0, 0, 0, 0, 3, 0}) == "0.5,1,0,0,0,0,0,3");
}

TEST_CASE("iso8601 timestamps") {
  CHECK(format_iso8601_ms(0) == "1970-01-01T00:00:00.000Z");
  CHECK(format_iso8601_ms(1791973590123) == "2026-10-14T10:26:30.123Z");
  CHECK(parse_iso8601_ms("2026-10-14T10:26:30.123Z") == 1791973590123);
  const auto now = now_epoch_ms();
  CHECK(parse_iso8601_ms(format_iso8601_ms(now)) == now);
  CHECK_THROWS_AS(parse_iso8601_ms("yesterday"), UsageError);
}

TEST_CASE("source descriptors") {
  CHECK(open_source("sim:s1?speed=0")->descriptor() == "sim:s1?speed=0");
  CHECK_NOTHROW(open_source("sim:t2?seed=3&drop=0.1&jitter=0.01&speed=0&duration=2&noise=0.001"));
  for (const char* bad : {"s1", "sim:s9", "sim:s1?drop", "sim:s1?bogus=1", "sim:s1?drop=x", "sim:s1?drop=1.5",
                          "sim:s1?speed=-1", "file:/nonexistent/frames.csv", "tcp:localhost"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(open_source(bad), UsageError);
  }
}

TEST_CASE("simulated source replays the link stream") {
  auto src = open_source("sim:s1?duration=1&speed=0");
  std::stop_source stop;
  std::size_t n = 0;
  double last_t = -1.0;
  while (auto f = src->next(stop.get_token())) {
    const auto r = parse_frame(*f);
    CHECK(r.t > last_t);
    last_t = r.t;
    ++n;
  }
  CHECK(n == 300);
}

TEST_CASE("paced sources honour real time and stop promptly") {
  oracle::TempDir dir("pace");
  std::filesystem::create_directories(dir.path());
  const auto path = dir.path() / "frames.csv";
  {
    std::ofstream out(path);
    out << "# header lines are skipped\n";
    for (int i = 0; i <= 90; ++i) out << format_frame(SensorRecord{0, i / 300.0, 0, 0, 0, 0, 0, 0, 1, 0}) << '\n';
  }
  auto src = open_source("file:" + path.string());
  std::stop_source stop;
  const auto t0 = std::chrono::steady_clock::now();
  int n = 0;
  while (src->next(stop.get_token())) ++n;
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  CHECK(n == 91);
  CHECK(elapsed >= 290ms);
  CHECK(elapsed < 2s);

  // A stop request interrupts a long wait.
  auto slow = open_source("sim:s1?speed=0.01");
  std::stop_source stop2;
  slow->next(stop2.get_token());
  std::jthread stopper([&] {
    std::this_thread::sleep_for(50ms);
    stop2.request_stop();
  });
  const auto t1 = std::chrono::steady_clock::now();
  CHECK_FALSE(slow->next(stop2.get_token()).has_value());
  CHECK(std::chrono::steady_clock::now() - t1 < 1s);
}

TEST_CASE("acquisition lifecycle") {
  oracle::TempDir dir("acq");
  Store store(dir.path());
  Acquisition acq(store);

  CHECK(acq.state().status == AcquisitionStatus::idle);
  CHECK(acq.stop().status == AcquisitionStatus::idle);  // idle -> idle

  const auto started = acq.start(std::make_unique<EndlessSource>());
  CHECK(started.status == AcquisitionStatus::running);
  CHECK(started.records_ingested == 0);
  CHECK(started.source == "endless");
  CHECK(started.started_at_ms > 0);
  CHECK(acq.running());
  CHECK_THROWS_AS(acq.start(std::make_unique<EndlessSource>()), ConflictError);

  std::this_thread::sleep_for(50ms);
  const auto stopped = acq.stop();
  CHECK(stopped.status == AcquisitionStatus::idle);
  CHECK(stopped.records_ingested > 0);
  const auto k = store.live_size();
  CHECK(k == stopped.records_ingested);
  std::this_thread::sleep_for(50ms);
  CHECK(store.live_size() == k);  // nothing lands after stop returns
  CHECK_FALSE(acq.running());
}

TEST_CASE("loss accounting and order preservation") {
  oracle::TempDir dir("loss");
  Store store(dir.path());
  Acquisition acq(store);
  std::vector<std::string> frames;
  for (int i = 0; i < 200; ++i) {
    if (i % 17 == 5) frames.emplace_back("garbage");
    if (i % 23 == 7) frames.emplace_back("1,2,3");
    frames.push_back(format_frame(SensorRecord{0, i / 300.0, static_cast<double>(i), 0, 0, 0, 0, 0, 1, 0}));
  }
  acq.start(std::make_unique<ListSource>(frames));
  REQUIRE(acq.wait_exhausted(5s));
  const auto s = acq.stop();
  CHECK(s.source_exhausted);
  CHECK(s.frames_received == frames.size());
  CHECK(s.frames_received - s.frames_rejected == s.records_ingested);
  CHECK(s.records_ingested == 200);
  const auto live = store.fetch_live(0);
  REQUIRE(live.size() == 200);
  for (int i = 0; i < 200; ++i) {
    CHECK(live[i].ax == static_cast<double>(i));
    CHECK(live[i].seq_id == i + 1);
  }
}

TEST_CASE("two seconds of simulated S1 fill the live table") {
  oracle::TempDir dir("twosec");
  Store store(dir.path());
  Acquisition acq(store);

  acq.start(open_source("sim:s1?duration=2&speed=0"));
  REQUIRE(acq.wait_exhausted(5s));
  CHECK(acq.stop().records_ingested == 600);
  CHECK(store.live_size() == 600);

  // Real-time pace with 10% loss: 540 expected, sigma = sqrt(600 * 0.1 * 0.9) = 7.35.
  store.clear_live();
  const auto t0 = std::chrono::steady_clock::now();
  acq.start(open_source("sim:s1?duration=2&speed=1&drop=0.1&seed=11"));
  REQUIRE(acq.wait_exhausted(10s));
  CHECK(std::chrono::steady_clock::now() - t0 >= 1900ms);
  acq.stop();
  CHECK(std::abs(static_cast<double>(store.live_size()) - 540.0) <= 3.0 * 7.35);
}

TEST_CASE("restarting an acquisition never interleaves sources") {
  oracle::TempDir dir("restart");
  Store store(dir.path());
  Acquisition acq(store);
  acq.start(open_source("sim:s1?duration=1&speed=0"));
  REQUIRE(acq.wait_exhausted(5s));
  acq.stop();
  acq.start(open_source("sim:s2?duration=1&speed=0"));
  REQUIRE(acq.wait_exhausted(5s));
  const auto s = acq.stop();
  CHECK(s.records_ingested == 300);  // counters are per acquisition
  const auto live = store.fetch_live(0);
  REQUIRE(live.size() == 600);
  // t restarts at 0 exactly once, at the source boundary.
  for (std::size_t i = 1; i < live.size(); ++i) {
    if (i == 300) CHECK(live[i].t == 0.0);
    else CHECK(live[i].t > live[i - 1].t);
  }
}
