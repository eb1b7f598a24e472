#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "evseg/detail/binio.hpp"
#include "evseg/error.hpp"
#include "evseg/event.hpp"

namespace evseg {

// Dense window encodings. Channel layout per kind:
//   LastEvent1    [Last]                 Last in {0, -1, +1}
//   Hist2         [Hist-, Hist+]
//   HistRecent4   [Hist-, Hist+, Recent-, Recent+]
//   HistMeanStd6  [Hist-, Hist+, M-, M+, S-, S+]
// Hist holds raw counts; Recent, M and S are over normalized timestamps and are
// 0 on pixels without events of that polarity. S is 0 when the count is <= 1.
enum class ReprKind : std::uint8_t { LastEvent1 = 0, Hist2 = 1, HistRecent4 = 2, HistMeanStd6 = 3 };

constexpr std::uint32_t channel_count(ReprKind kind) {
  switch (kind) {
    case ReprKind::LastEvent1: return 1;
    case ReprKind::Hist2: return 2;
    case ReprKind::HistRecent4: return 4;
    case ReprKind::HistMeanStd6: return 6;
  }
  return 0;
}

inline std::string_view repr_name(ReprKind kind) {
  switch (kind) {
    case ReprKind::LastEvent1: return "last1";
    case ReprKind::Hist2: return "hist2";
    case ReprKind::HistRecent4: return "histrecent4";
    case ReprKind::HistMeanStd6: return "histmeanstd6";
  }
  return "?";
}

inline ReprKind parse_repr_kind(std::string_view name) {
  for (auto k : {ReprKind::LastEvent1, ReprKind::Hist2, ReprKind::HistRecent4, ReprKind::HistMeanStd6}) {
    if (repr_name(k) == name) return k;
  }
  throw Error(Errc::InvalidArgument, "unknown representation '" + std::string(name) + "'");
}

// H×W×C raster, row-major with channels interleaved: index (y*W + x)*C + c.
template <std::floating_point Real>
struct BasicReprTensor {
  SensorGeometry geometry;
  ReprKind kind = ReprKind::HistMeanStd6;
  Window window;
  std::vector<Real> data;

  BasicReprTensor() = default;
  BasicReprTensor(SensorGeometry g, ReprKind k, Window w)
      : geometry(g), kind(k), window(w), data(g.pixels() * channel_count(k), Real{0}) {}

  std::uint32_t channels() const noexcept { return channel_count(kind); }
  std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t c) const noexcept {
    return (std::size_t{y} * geometry.width + x) * channels() + c;
  }
  Real& at(std::uint32_t x, std::uint32_t y, std::uint32_t c) { return data[index(x, y, c)]; }
  Real at(std::uint32_t x, std::uint32_t y, std::uint32_t c) const { return data[index(x, y, c)]; }

  friend bool operator==(const BasicReprTensor&, const BasicReprTensor&) = default;
};

using ReprTensor = BasicReprTensor<double>;
using ReprTensorF = BasicReprTensor<float>;

// (t - start) / duration, in [0, 1) for events inside the window.
inline double normalize_timestamp(std::int64_t t_us, const Window& window) {
  if (window.duration_us <= 0) throw Error(Errc::InvalidArgument, "window duration must be positive");
  if (!window.contains(t_us)) throw Error(Errc::OutsideWindow, "timestamp " + std::to_string(t_us));
  return static_cast<double>(t_us - window.t_start_us) / static_cast<double>(window.duration_us);
}

namespace detail {

inline std::size_t pol_index(std::int8_t p) { return p > 0 ? 1 : 0; }

inline void check_event(const Event& e, const Window& w, const SensorGeometry& g) {
  if (!w.contains(e.timestamp_us)) throw Error(Errc::OutsideWindow, "event at " + std::to_string(e.timestamp_us));
  if (!g.contains(e.x, e.y)) throw Error(Errc::OutOfBounds, "event pixel outside sensor");
}

}  // namespace detail

// Reference path: per-pixel statistics computed directly from the event list.
// Mean is sum/count; S uses a second pass over deviations from that mean.
template <std::floating_point Real = double>
BasicReprTensor<Real> encode_batch(std::span<const Event> events, const Window& window,
                                   const SensorGeometry& geometry, ReprKind kind) {
  geometry.validate();
  if (window.duration_us <= 0) throw Error(Errc::InvalidArgument, "window duration must be positive");
  BasicReprTensor<Real> out(geometry, kind, window);
  const std::size_t px = geometry.pixels();
  const std::uint32_t C = out.channels();

  for (const Event& e : events) detail::check_event(e, window, geometry);

  if (kind == ReprKind::LastEvent1) {
    std::vector<Real> last_t(px, Real{-1});
    for (const Event& e : events) {
      const std::size_t i = std::size_t{e.y} * geometry.width + e.x;
      const auto t = static_cast<Real>(normalize_timestamp(e.timestamp_us, window));
      if (t >= last_t[i]) {
        last_t[i] = t;
        out.data[i] = static_cast<Real>(e.polarity);
      }
    }
    return out;
  }

  std::vector<std::uint64_t> count(px * 2, 0);
  std::vector<Real> sum(px * 2, Real{0});
  std::vector<Real> recent(px * 2, Real{0});
  for (const Event& e : events) {
    const std::size_t j = (std::size_t{e.y} * geometry.width + e.x) * 2 + detail::pol_index(e.polarity);
    const auto t = static_cast<Real>(normalize_timestamp(e.timestamp_us, window));
    ++count[j];
    sum[j] += t;
    recent[j] = std::max(recent[j], t);
  }
  for (std::size_t i = 0; i < px; ++i) {
    for (std::size_t p = 0; p < 2; ++p) out.data[i * C + p] = static_cast<Real>(count[i * 2 + p]);
  }
  if (kind == ReprKind::Hist2) return out;

  if (kind == ReprKind::HistRecent4) {
    for (std::size_t i = 0; i < px; ++i) {
      for (std::size_t p = 0; p < 2; ++p) out.data[i * C + 2 + p] = recent[i * 2 + p];
    }
    return out;
  }

  std::vector<Real> mean(px * 2, Real{0});
  for (std::size_t j = 0; j < px * 2; ++j) {
    if (count[j] > 0) mean[j] = sum[j] / static_cast<Real>(count[j]);
  }
  std::vector<Real> sq(px * 2, Real{0});
  for (const Event& e : events) {
    const std::size_t j = (std::size_t{e.y} * geometry.width + e.x) * 2 + detail::pol_index(e.polarity);
    const Real d = static_cast<Real>(normalize_timestamp(e.timestamp_us, window)) - mean[j];
    sq[j] += d * d;
  }
  for (std::size_t i = 0; i < px; ++i) {
    for (std::size_t p = 0; p < 2; ++p) {
      const std::size_t j = i * 2 + p;
      out.data[i * C + 2 + p] = mean[j];
      out.data[i * C + 4 + p] = count[j] >= 2 ? std::sqrt(sq[j] / static_cast<Real>(count[j] - 1)) : Real{0};
    }
  }
  return out;
}

// Single-pass accumulator over one window: per pixel and polarity it keeps the
// count, running mean, sum of squared deviations (M2) and max normalized time,
// plus the latest event per pixel for LastEvent1. Not thread-safe; combine
// per-thread accumulators with merge().
template <std::floating_point Real = double>
class StreamingAccumulator {
 public:
  StreamingAccumulator(SensorGeometry geometry, Window window)
      : geometry_(geometry), window_(window), cells_(geometry.pixels() * 2), last_(geometry.pixels()) {
    geometry_.validate();
    if (window_.duration_us <= 0) throw Error(Errc::InvalidArgument, "window duration must be positive");
  }

  const SensorGeometry& geometry() const noexcept { return geometry_; }
  const Window& window() const noexcept { return window_; }
  std::uint64_t total() const noexcept { return total_; }

  void accumulate(const Event& e) {
    detail::check_event(e, window_, geometry_);
    const std::size_t i = std::size_t{e.y} * geometry_.width + e.x;
    const auto t = static_cast<Real>(normalize_timestamp(e.timestamp_us, window_));
    Cell& c = cells_[i * 2 + detail::pol_index(e.polarity)];
    ++c.count;
    const Real delta = t - c.mean;
    c.mean += delta / static_cast<Real>(c.count);
    c.m2 += delta * (t - c.mean);
    c.max = std::max(c.max, t);
    Last& l = last_[i];
    if (l.polarity == 0 || t >= l.t) {
      l.t = t;
      l.polarity = e.polarity;
    }
    ++total_;
  }

  void accumulate(std::span<const Event> events) {
    for (const Event& e : events) accumulate(e);
  }

  // Folds in an accumulator over a disjoint event subset of the same window.
  // `other`'s events are treated as later in sequence when breaking LastEvent1 ties.
  void merge(const StreamingAccumulator& other) {
    if (other.geometry_ != geometry_ || other.window_ != window_) {
      throw Error(Errc::GeometryMismatch, "cannot merge accumulators over different windows");
    }
    for (std::size_t j = 0; j < cells_.size(); ++j) {
      Cell& a = cells_[j];
      const Cell& b = other.cells_[j];
      if (b.count == 0) continue;
      if (a.count == 0) {
        a = b;
        continue;
      }
      const auto na = static_cast<Real>(a.count);
      const auto nb = static_cast<Real>(b.count);
      const Real n = na + nb;
      const Real delta = b.mean - a.mean;
      a.mean += delta * nb / n;
      a.m2 += b.m2 + delta * delta * na * nb / n;
      a.count += b.count;
      a.max = std::max(a.max, b.max);
    }
    for (std::size_t i = 0; i < last_.size(); ++i) {
      const Last& b = other.last_[i];
      if (b.polarity != 0 && (last_[i].polarity == 0 || b.t >= last_[i].t)) last_[i] = b;
    }
    total_ += other.total_;
  }

  BasicReprTensor<Real> finalize(ReprKind kind) const {
    BasicReprTensor<Real> out(geometry_, kind, window_);
    const std::uint32_t C = out.channels();
    const std::size_t px = geometry_.pixels();
    for (std::size_t i = 0; i < px; ++i) {
      Real* dst = out.data.data() + i * C;
      if (kind == ReprKind::LastEvent1) {
        dst[0] = static_cast<Real>(last_[i].polarity);
        continue;
      }
      for (std::size_t p = 0; p < 2; ++p) {
        const Cell& c = cells_[i * 2 + p];
        dst[p] = static_cast<Real>(c.count);
        if (kind == ReprKind::HistRecent4) {
          dst[2 + p] = c.max;
        } else if (kind == ReprKind::HistMeanStd6) {
          dst[2 + p] = c.mean;
          dst[4 + p] = c.count >= 2 ? std::sqrt(c.m2 / static_cast<Real>(c.count - 1)) : Real{0};
        }
      }
    }
    return out;
  }

 private:
  struct Cell {
    std::uint64_t count = 0;
    Real mean = 0;
    Real m2 = 0;
    Real max = 0;
  };
  struct Last {
    Real t = 0;
    std::int8_t polarity = 0;
  };

  SensorGeometry geometry_;
  Window window_;
  std::vector<Cell> cells_;
  std::vector<Last> last_;
  std::uint64_t total_ = 0;
};

enum class ChannelScaling { MinMax, FixedUnit };

// Maps one channel to 0..255. MinMax stretches [min, max] (constant channel -> 0);
// FixedUnit maps [0, 1] with clamping. Both floor.
template <std::floating_point Real>
std::vector<std::uint8_t> visualize_channel(const BasicReprTensor<Real>& tensor, std::uint32_t channel,
                                            ChannelScaling scaling) {
  if (channel >= tensor.channels()) throw Error(Errc::BadChannel, "channel " + std::to_string(channel));
  const std::size_t px = tensor.geometry.pixels();
  const std::uint32_t C = tensor.channels();
  std::vector<std::uint8_t> out(px, 0);
  if (px == 0) return out;

  double lo = 0.0, scale = 255.0;
  if (scaling == ChannelScaling::MinMax) {
    double mn = tensor.data[channel], mx = mn;
    for (std::size_t i = 0; i < px; ++i) {
      const double v = tensor.data[i * C + channel];
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    if (!(mx > mn)) return out;
    lo = mn;
    scale = 255.0 / (mx - mn);
  }
  for (std::size_t i = 0; i < px; ++i) {
    const double v = std::clamp((static_cast<double>(tensor.data[i * C + channel]) - lo) * scale, 0.0, 255.0);
    out[i] = static_cast<std::uint8_t>(std::floor(v));
  }
  return out;
}

// RPT1 container (little-endian), 32-byte header:
//   "RPT1", u16 width, u16 height, u16 channels, u8 kind, u8 dtype,
//   u64 window start, u64 window duration, 4 zero bytes
// followed by H*W*C samples in tensor order. dtype: 1 = f32, 2 = f64.
// The window start is stored as the two's complement of a signed value.
enum class SampleType : std::uint8_t { F32 = 1, F64 = 2 };
inline constexpr std::size_t kRpt1HeaderBytes = 32;

template <std::floating_point Real>
std::size_t write_rpt1(std::ostream& out, const BasicReprTensor<Real>& tensor, SampleType dtype) {
  const auto& g = tensor.geometry;
  if (g.width > 0xFFFF || g.height > 0xFFFF) throw Error(Errc::InvalidArgument, "RPT1 geometry limited to 65535");
  if (tensor.data.size() != g.pixels() * tensor.channels()) throw Error(Errc::InvalidArgument, "tensor size mismatch");
  detail::put_bytes(out, "RPT1", 4);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(g.width));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(g.height));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(tensor.channels()));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.kind));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(tensor.window.t_start_us));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(tensor.window.duration_us));
  detail::put_bytes(out, "\0\0\0\0", 4);
  for (const Real v : tensor.data) {
    if (dtype == SampleType::F32) {
      detail::put_le<float>(out, static_cast<float>(v));
    } else {
      detail::put_le<double>(out, static_cast<double>(v));
    }
  }
  detail::check_sink(out, "RPT1");
  const std::size_t width = dtype == SampleType::F32 ? 4 : 8;
  return kRpt1HeaderBytes + tensor.data.size() * width;
}

struct Rpt1Header {
  SensorGeometry geometry;
  ReprKind kind = ReprKind::HistMeanStd6;
  SampleType dtype = SampleType::F64;
  Window window;
};

// Reads an RPT1 file into a 64-bit tensor (f32 samples are widened).
inline ReprTensor read_rpt1(std::istream& in, Rpt1Header* header_out = nullptr) {
  unsigned char h[kRpt1HeaderBytes];
  const auto got = detail::read_up_to(in, h, kRpt1HeaderBytes);
  if (got >= 4 && std::string_view(reinterpret_cast<const char*>(h), 4) != "RPT1") {
    throw Error(Errc::BadMagic, "expected RPT1");
  }
  if (got < kRpt1HeaderBytes) throw Error(Errc::TruncatedRecord, "short RPT1 header");

  Rpt1Header hdr;
  hdr.geometry = {detail::get_le<std::uint16_t>(h + 4), detail::get_le<std::uint16_t>(h + 6)};
  const auto channels = detail::get_le<std::uint16_t>(h + 8);
  const auto kind = h[10];
  const auto dtype = h[11];
  hdr.window.t_start_us = static_cast<std::int64_t>(detail::get_le<std::uint64_t>(h + 12));
  hdr.window.duration_us = static_cast<std::int64_t>(detail::get_le<std::uint64_t>(h + 20));
  if (kind > 3) throw Error(Errc::ParseError, "unknown representation kind");
  hdr.kind = static_cast<ReprKind>(kind);
  if (channels != channel_count(hdr.kind)) throw Error(Errc::ChannelMismatch, "channel count disagrees with kind");
  if (dtype != 1 && dtype != 2) throw Error(Errc::ParseError, "unknown sample type");
  hdr.dtype = static_cast<SampleType>(dtype);
  hdr.geometry.validate();
  if (hdr.window.duration_us <= 0) throw Error(Errc::ParseError, "non-positive window duration");

  ReprTensor t(hdr.geometry, hdr.kind, hdr.window);
  const std::size_t width = hdr.dtype == SampleType::F32 ? 4 : 8;
  std::vector<unsigned char> raw(t.data.size() * width);
  if (detail::read_up_to(in, raw.data(), raw.size()) != raw.size()) {
    throw Error(Errc::TruncatedRecord, "short RPT1 payload");
  }
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    t.data[i] = hdr.dtype == SampleType::F32 ? static_cast<double>(detail::get_le<float>(&raw[i * 4]))
                                             : detail::get_le<double>(&raw[i * 8]);
  }
  if (header_out) *header_out = hdr;
  return t;
}

}  // namespace evseg
