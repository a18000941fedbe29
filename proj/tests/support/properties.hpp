#pragma once

// Randomized property suites. Each returns how many cases ran and the first
// counterexample, so doctest and the acceptance binary can share them.

#include "dispmon/errors.hpp"
#include "dispmon/recon.hpp"
#include "dispmon/store.hpp"
#include "dispmon/validate.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace props {

struct Outcome {
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool ok() const { return failures == 0 && cases > 0; }
  void fail(std::string why) {
    if (failures++ == 0) first_failure = std::move(why);
  }
};

inline std::vector<double> uniform_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline std::size_t pick_window(std::mt19937_64& rng) {
  static const std::size_t sizes[] = {5, 6, 11, 51, 100, 101, 301};
  return sizes[std::uniform_int_distribution<std::size_t>(0, std::size(sizes) - 1)(rng)];
}

inline dispmon::DisplacementSeries run_batch(std::size_t n, dispmon::Weighting w, std::vector<double> a) {
  dispmon::ReconstructionConfig cfg;
  cfg.window_len = n;
  cfg.weighting = w;
  return dispmon::reconstruct_batch(*dispmon::coefficient_matrix(cfg), {std::move(a), cfg.sample_rate_hz, 0.0});
}

// reconstruct(alpha a1 + beta a2) == alpha reconstruct(a1) + beta reconstruct(a2)
inline Outcome linearity(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-10.0, 10.0);
  for (std::size_t c = 0; c < cases; ++c, ++out.cases) {
    const std::size_t n = pick_window(rng);
    const auto w = c % 2 ? dispmon::Weighting::hann : dispmon::Weighting::identity;
    const auto a1 = uniform_vec(rng, n, -1.0, 1.0);
    const auto a2 = uniform_vec(rng, n, -1.0, 1.0);
    const double alpha = coef(rng);
    const double beta = coef(rng);
    std::vector<double> mix(n);
    for (std::size_t i = 0; i < n; ++i) mix[i] = alpha * a1[i] + beta * a2[i];

    const auto d1 = run_batch(n, w, a1).samples;
    const auto d2 = run_batch(n, w, a2).samples;
    const auto dm = run_batch(n, w, mix).samples;
    std::vector<double> expect(n);
    std::vector<double> diff(n);
    std::vector<double> scale(n);
    for (std::size_t i = 0; i < n; ++i) {
      expect[i] = alpha * d1[i] + beta * d2[i];
      diff[i] = dm[i] - expect[i];
      scale[i] = std::abs(alpha * d1[i]) + std::abs(beta * d2[i]);
    }
    const double rel = inf_norm(diff) / std::max(inf_norm(scale), std::numeric_limits<double>::min());
    if (!(rel <= 1e-9)) out.fail("N=" + std::to_string(n) + " relative deviation " + std::to_string(rel));
  }
  return out;
}

// Zero acceleration gives identically zero displacement, through every route.
inline Outcome zero_in_zero_out(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++out.cases) {
    std::vector<double> d;
    std::size_t n = 0;
    if (c % 2 == 0) {
      n = pick_window(rng);
      d = run_batch(n, c % 4 ? dispmon::Weighting::hann : dispmon::Weighting::identity, std::vector<double>(n, 0.0)).samples;
    } else {
      n = std::uniform_int_distribution<std::size_t>(5, 2000)(rng);
      d = dispmon::reconstruct_record({std::vector<double>(n, 0.0), 300.0, 0.0}).samples;
    }
    if (d.size() != n) out.fail("length changed for N=" + std::to_string(n));
    else if (std::any_of(d.begin(), d.end(), [](double x) { return x != 0.0; }))
      out.fail("nonzero output for N=" + std::to_string(n));
  }
  return out;
}

// Identity weighting: reconstruct(reverse(a)) == reverse(reconstruct(a)).
inline Outcome time_reversal(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++out.cases) {
    const std::size_t n = pick_window(rng);
    auto a = uniform_vec(rng, n, -1.0, 1.0);
    const auto d = run_batch(n, dispmon::Weighting::identity, a).samples;
    std::reverse(a.begin(), a.end());
    auto dr = run_batch(n, dispmon::Weighting::identity, a).samples;
    std::reverse(dr.begin(), dr.end());
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = dr[i] - d[i];
    const double rel = inf_norm(diff) / std::max(inf_norm(d), std::numeric_limits<double>::min());
    if (!(rel <= 1e-9)) out.fail("N=" + std::to_string(n) + " relative deviation " + std::to_string(rel));
  }
  return out;
}

inline Outcome lambda_monotone(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(5, 1'000'000);
  for (std::size_t c = 0; c < cases; ++c, ++out.cases) {
    std::size_t n1 = pick(rng);
    // Every third case probes adjacent lengths.
    std::size_t n2 = c % 3 == 0 ? n1 + 1 : pick(rng);
    if (n1 == n2) ++n2;
    if (n1 > n2) std::swap(n1, n2);
    const double l1 = dispmon::regularization_factor(n1);
    const double l2 = dispmon::regularization_factor(n2);
    if (!(l2 > 0.0 && l1 > l2)) {
      out.fail("lambda(" + std::to_string(n1) + ")=" + std::to_string(l1) + " lambda(" + std::to_string(n2) +
               ")=" + std::to_string(l2));
    }
  }
  return out;
}

// rms_error(alpha est, alpha ref) == rms_error(est, ref) for alpha != 0.
inline Outcome rms_scale_invariance(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(2, 500);
  std::uniform_real_distribution<double> mag(-6.0, 6.0);
  std::bernoulli_distribution neg(0.5);
  for (std::size_t c = 0; c < cases; ++c, ++out.cases) {
    const std::size_t n = len(rng);
    const auto ref = uniform_vec(rng, n, -5.0, 5.0);
    auto est = ref;
    const auto noise = uniform_vec(rng, n, -1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) est[i] += noise[i];
    const double alpha = (neg(rng) ? -1.0 : 1.0) * std::pow(10.0, mag(rng));
    std::vector<double> es(n);
    std::vector<double> rs(n);
    for (std::size_t i = 0; i < n; ++i) {
      es[i] = alpha * est[i];
      rs[i] = alpha * ref[i];
    }
    const double e0 = dispmon::rms_error(est, ref);
    const double e1 = dispmon::rms_error(es, rs);
    if (!(std::abs(e0 - e1) <= 1e-9 * std::max(1.0, e0)))
      out.fail("alpha=" + std::to_string(alpha) + " " + std::to_string(e0) + " vs " + std::to_string(e1));
  }
  return out;
}

inline dispmon::SensorRecord random_record(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> val(-50.0, 50.0);
  std::uniform_real_distribution<double> expo(-12.0, 12.0);
  std::uniform_int_distribution<std::int64_t> sensor(0, 1'000'000);
  auto wild = [&] { return val(rng) * std::pow(10.0, expo(rng)); };
  dispmon::SensorRecord r;
  r.t = std::abs(wild());
  r.ax = wild();
  r.ay = wild();
  r.az = wild();
  r.gx = wild();
  r.gy = wild();
  r.gz = wild();
  r.sensor_id = sensor(rng);
  r.reg_time_ms = 1'700'000'000'000 + sensor(rng);
  return r;
}

inline std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Canonical encode/decode and append -> fetch preserve every field.
inline Outcome store_round_trip(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  std::mt19937_64 rng(seed);
  oracle::TempDir dir("roundtrip");
  dispmon::Store store(dir.path());
  for (std::size_t c = 0; c < cases; ++c, ++out.cases) {
    auto r = random_record(rng);
    r.seq_id = static_cast<std::int64_t>(c) + 1;
    if (dispmon::decode_record(dispmon::encode_record(r)) != r) {
      out.fail("encode/decode changed " + dispmon::encode_record(r));
      continue;
    }
    const auto seq = store.append_live(r);
    const auto back = store.fetch_live(seq - 1);
    if (back.size() != 1 || back[0] != r) out.fail("append/fetch changed " + dispmon::encode_record(r));
  }
  return out;
}

// Reopening a store preserves the live table, the archive listing and every
// experiment file byte for byte.
inline Outcome store_durability(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 12);
  std::int64_t clock_ms = 1'760'000'000'000;
  auto clock = [&clock_ms] { return clock_ms += 7; };
  for (std::size_t c = 0; c < cases; ++c, ++out.cases) {
    oracle::TempDir dir("durable");
    std::vector<dispmon::ExperimentInfo> listing;
    std::vector<std::vector<dispmon::SensorRecord>> contents;
    std::vector<std::string> bytes;
    std::vector<dispmon::SensorRecord> live;
    {
      dispmon::Store store(dir.path(), clock);
      const int saves = count(rng) % 3 + 1;
      for (int s = 0; s < saves; ++s) {
        const int k = count(rng);
        for (int i = 0; i < k; ++i) store.append_live(random_record(rng));
        store.save_experiment();
        if (count(rng) % 4 == 0) store.clear_live();
      }
      for (int i = count(rng) % 3; i > 0; --i) store.append_live(random_record(rng));
      listing = store.list_experiments();
      for (const auto& info : listing) {
        contents.push_back(store.fetch_experiment(info.id));
        bytes.push_back(file_bytes(dir.path() / "experiments" / (info.id.str() + ".log")));
      }
      live = store.fetch_live(0);
    }
    dispmon::Store reopened(dir.path(), clock);
    const auto relisted = reopened.list_experiments();
    bool same = relisted.size() == listing.size() && reopened.fetch_live(0) == live;
    for (std::size_t i = 0; same && i < listing.size(); ++i) {
      same = relisted[i].id == listing[i].id && relisted[i].record_count == listing[i].record_count &&
             reopened.fetch_experiment(relisted[i].id) == contents[i] &&
             file_bytes(dir.path() / "experiments" / (relisted[i].id.str() + ".log")) == bytes[i];
    }
    if (!same) out.fail("case " + std::to_string(c) + ": state differs after reopen");
  }
  return out;
}

// Random interleavings of append / fetch(since cursor) / clear never skip or
// duplicate a record relative to an in-memory reference.
inline Outcome interleaved_fetch(std::size_t cases, std::uint64_t seed) {
  Outcome out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> op(0, 99);
  std::uniform_int_distribution<int> burst(1, 8);
  oracle::TempDir dir("interleave");
  dispmon::Store store(dir.path());
  for (std::size_t c = 0; c < cases; ++c, ++out.cases) {
    store.clear_live();
    std::vector<dispmon::SensorRecord> reference;
    std::vector<dispmon::SensorRecord> seen;
    std::int64_t cursor = 0;
    bool good = true;
    for (int step = 0; step < 40 && good; ++step) {
      const int o = op(rng);
      if (o < 55) {
        for (int i = burst(rng); i > 0; --i) {
          auto r = random_record(rng);
          r.seq_id = store.append_live(r);
          reference.push_back(r);
        }
      } else if (o < 97) {
        const auto got = store.fetch_live(cursor);
        for (std::size_t i = 0; i < got.size(); ++i) {
          if (got[i].seq_id != cursor + static_cast<std::int64_t>(i) + 1) good = false;
        }
        seen.insert(seen.end(), got.begin(), got.end());
        if (!got.empty()) cursor = got.back().seq_id;
      } else {
        store.clear_live();
        reference.clear();
        seen.clear();
        cursor = 0;
      }
    }
    const auto rest = store.fetch_live(cursor);
    seen.insert(seen.end(), rest.begin(), rest.end());
    if (!good || seen != reference) out.fail("case " + std::to_string(c) + ": fetched sequence diverged");
  }
  return out;
}

}  // namespace props
