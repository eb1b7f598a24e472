#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "evseg/event.hpp"
#include "evseg/repr.hpp"

namespace evseg {

struct BenchConfig {
  SensorGeometry geometry{346, 260};
  std::uint64_t events = 1'000'000;
  std::int64_t window_us = 50'000;
  double event_rate_hz = 2'000'000.0;  // mean stream rate
  std::uint64_t seed = 0;
  ReprKind kind = ReprKind::HistMeanStd6;
};

struct BenchReport {
  std::uint64_t events = 0;
  std::uint64_t windows = 0;
  double checksum = 0.0;  // sum of all batch-encoded channel values
  double batch_seconds = 0.0;
  double streaming_seconds = 0.0;
  double streaming_f32_seconds = 0.0;

  double batch_events_per_second() const { return batch_seconds > 0 ? events / batch_seconds : 0.0; }
  double streaming_events_per_second() const { return streaming_seconds > 0 ? events / streaming_seconds : 0.0; }
  double streaming_f32_events_per_second() const {
    return streaming_f32_seconds > 0 ? events / streaming_f32_seconds : 0.0;
  }
};

// Uniform pixels and polarities, exponential inter-arrival times.
inline EventStream random_stream(const SensorGeometry& g, std::uint64_t n, double rate_hz, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Event> events;
  events.reserve(n);
  double t = 0.0;
  const double mean_gap_us = 1e6 / rate_hz;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    t += -std::log(u) * mean_gap_us;
    events.push_back(Event{static_cast<std::int64_t>(t), static_cast<std::uint16_t>(rng() % g.width),
                           static_cast<std::uint16_t>(rng() % g.height), (rng() & 1) ? std::int8_t{1} : std::int8_t{-1}});
  }
  return EventStream(g, std::move(events));
}

inline BenchReport run_bench(const BenchConfig& config) {
  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  const EventStream stream = random_stream(config.geometry, config.events, config.event_rate_hz, config.seed);
  BenchReport r;
  r.events = stream.size();
  if (stream.empty()) return r;
  const auto slices = slice_tiled(stream, config.window_us);
  r.windows = slices.size();

  auto t0 = clock::now();
  for (const auto& s : slices) {
    const auto tensor = encode_batch<double>(s.events, s.window, stream.geometry(), config.kind);
    for (const double v : tensor.data) r.checksum += v;
  }
  auto t1 = clock::now();
  for (const auto& s : slices) {
    StreamingAccumulator<double> acc(stream.geometry(), s.window);
    acc.accumulate(s.events);
    (void)acc.finalize(config.kind);
  }
  auto t2 = clock::now();
  for (const auto& s : slices) {
    StreamingAccumulator<float> acc(stream.geometry(), s.window);
    acc.accumulate(s.events);
    (void)acc.finalize(config.kind);
  }
  auto t3 = clock::now();
  r.batch_seconds = seconds(t0, t1);
  r.streaming_seconds = seconds(t1, t2);
  r.streaming_f32_seconds = seconds(t2, t3);
  return r;
}

}  // namespace evseg
