#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "evseg/detail/binio.hpp"
#include "evseg/error.hpp"

namespace evseg {

struct SensorGeometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  std::size_t pixels() const noexcept { return std::size_t{width} * height; }
  bool contains(std::int64_t x, std::int64_t y) const noexcept {
    return x >= 0 && y >= 0 && x < std::int64_t{width} && y < std::int64_t{height};
  }
  void validate() const {
    if (width < 1 || height < 1) {
      throw Error(Errc::InvalidArgument, "sensor geometry must be at least 1x1");
    }
  }
  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

// One brightness-change record. Polarity is always -1 or +1 once inside the library.
struct Event {
  std::int64_t timestamp_us = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t polarity = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

// Half-open interval [t_start_us, t_start_us + duration_us).
struct Window {
  std::int64_t t_start_us = 0;
  std::int64_t duration_us = 1;

  std::int64_t t_end_us() const noexcept { return t_start_us + duration_us; }
  bool contains(std::int64_t t) const noexcept { return t >= t_start_us && t < t_end_us(); }
  friend bool operator==(const Window&, const Window&) = default;
};

enum class PolarityMode { Signed, ZeroOne };

// A validated, time-ordered event sequence. Immutable after construction.
class EventStream {
 public:
  EventStream() = default;

  // Validates geometry, bounds, polarity and ordering. Error line numbers are
  // 1-based event positions.
  EventStream(SensorGeometry geometry, std::vector<Event> events)
      : geometry_(geometry), events_(std::move(events)) {
    geometry_.validate();
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const Event& e = events_[i];
      if (!geometry_.contains(e.x, e.y)) throw Error(Errc::OutOfBounds, "pixel outside sensor", i + 1);
      if (e.polarity != 1 && e.polarity != -1) throw Error(Errc::BadPolarity, "", i + 1);
      if (e.timestamp_us < 0) throw Error(Errc::MalformedLine, "negative timestamp", i + 1);
      if (i > 0 && e.timestamp_us < events_[i - 1].timestamp_us) {
        throw Error(Errc::NonMonotonicTimestamp, "", i + 1);
      }
    }
  }

  const SensorGeometry& geometry() const noexcept { return geometry_; }
  std::span<const Event> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  friend bool operator==(const EventStream&, const EventStream&) = default;

 private:
  SensorGeometry geometry_{1, 1};
  std::vector<Event> events_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace detail

// Parses `timestamp_us,x,y,p` lines. Lines starting with '#' and blank lines are
// skipped; error line numbers are physical 1-based line numbers.
inline EventStream parse_csv(std::istream& in, SensorGeometry geometry, PolarityMode mode) {
  geometry.validate();
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t last_t = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;

    std::string_view fields[4];
    std::size_t n = 0;
    std::size_t pos = 0;
    for (;;) {
      const auto comma = text.find(',', pos);
      if (n == 4) throw Error(Errc::MalformedLine, "expected 4 fields", line_no);
      fields[n++] = text.substr(pos, comma == std::string_view::npos ? comma : comma - pos);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (n != 4) throw Error(Errc::MalformedLine, "expected 4 fields", line_no);

    std::int64_t t = 0, x = 0, y = 0, p = 0;
    if (!detail::parse_int(fields[0], t) || !detail::parse_int(fields[1], x) ||
        !detail::parse_int(fields[2], y) || !detail::parse_int(fields[3], p) || t < 0) {
      throw Error(Errc::MalformedLine, "bad integer field", line_no);
    }
    if (!geometry.contains(x, y)) throw Error(Errc::OutOfBounds, "pixel outside sensor", line_no);

    std::int8_t polarity = 0;
    if (mode == PolarityMode::ZeroOne) {
      if (p != 0 && p != 1) throw Error(Errc::BadPolarity, "expected 0 or 1", line_no);
      polarity = p == 1 ? 1 : -1;
    } else {
      if (p != -1 && p != 1) throw Error(Errc::BadPolarity, "expected -1 or 1", line_no);
      polarity = static_cast<std::int8_t>(p);
    }
    if (t < last_t) throw Error(Errc::NonMonotonicTimestamp, "", line_no);
    last_t = t;
    events.push_back(Event{t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), polarity});
  }
  return EventStream(geometry, std::move(events));
}

// Writes the stream as CSV with signed polarity; parse_csv(Signed) reads it back.
inline void write_csv(const EventStream& stream, std::ostream& out) {
  out << "# timestamp_us,x,y,p width=" << stream.geometry().width
      << " height=" << stream.geometry().height << '\n';
  for (const Event& e : stream.events()) {
    out << e.timestamp_us << ',' << e.x << ',' << e.y << ',' << int{e.polarity} << '\n';
  }
  detail::check_sink(out, "csv");
}

// EVS1 layout (little-endian):
//   header  16 bytes: "EVS1", u16 width, u16 height, u64 event count
//   record  16 bytes: u64 timestamp_us, u16 x, u16 y, i8 polarity, 3 zero bytes
inline constexpr std::size_t kEvs1HeaderBytes = 16;
inline constexpr std::size_t kEvs1RecordBytes = 16;

inline std::size_t write_binary(const EventStream& stream, std::ostream& out) {
  const auto& g = stream.geometry();
  if (g.width > 0xFFFF || g.height > 0xFFFF) {
    throw Error(Errc::InvalidArgument, "EVS1 geometry limited to 65535");
  }
  detail::put_bytes(out, "EVS1", 4);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(g.width));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(g.height));
  detail::put_le<std::uint64_t>(out, stream.size());
  static constexpr char pad[3] = {0, 0, 0};
  for (const Event& e : stream.events()) {
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.timestamp_us));
    detail::put_le<std::uint16_t>(out, e.x);
    detail::put_le<std::uint16_t>(out, e.y);
    detail::put_le<std::int8_t>(out, e.polarity);
    detail::put_bytes(out, pad, 3);
  }
  detail::check_sink(out, "EVS1");
  return kEvs1HeaderBytes + kEvs1RecordBytes * stream.size();
}

// Reads an EVS1 stream using the geometry stored in its header.
inline EventStream parse_binary(std::istream& in) {
  unsigned char header[kEvs1HeaderBytes];
  const auto got = detail::read_up_to(in, header, kEvs1HeaderBytes);
  if (got >= 4 && std::string_view(reinterpret_cast<const char*>(header), 4) != "EVS1") {
    throw Error(Errc::BadMagic, "expected EVS1");
  }
  if (got < kEvs1HeaderBytes) throw Error(Errc::TruncatedRecord, "short header");

  const SensorGeometry geometry{detail::get_le<std::uint16_t>(header + 4),
                                detail::get_le<std::uint16_t>(header + 6)};
  const auto count = detail::get_le<std::uint64_t>(header + 8);

  std::vector<Event> events;
  unsigned char rec[kEvs1RecordBytes];
  std::uint64_t index = 0;
  for (;; ++index) {
    const auto n = detail::read_up_to(in, rec, kEvs1RecordBytes);
    if (n == 0) break;
    if (n < kEvs1RecordBytes) throw Error(Errc::TruncatedRecord, "partial record", index + 1);
    if (index >= count) throw Error(Errc::CountMismatch, "more records than header count");
    const auto t = detail::get_le<std::uint64_t>(rec);
    const auto p = detail::get_le<std::int8_t>(rec + 12);
    if (t > static_cast<std::uint64_t>(INT64_MAX)) {
      throw Error(Errc::MalformedLine, "timestamp out of range", index + 1);
    }
    if (p != 1 && p != -1) throw Error(Errc::BadPolarity, "expected -1 or +1", index + 1);
    if (rec[13] != 0 || rec[14] != 0 || rec[15] != 0) {
      throw Error(Errc::MalformedLine, "nonzero padding", index + 1);
    }
    events.push_back(Event{static_cast<std::int64_t>(t), detail::get_le<std::uint16_t>(rec + 8),
                           detail::get_le<std::uint16_t>(rec + 10), p});
  }
  if (index != count) throw Error(Errc::CountMismatch, "fewer records than header count");
  return EventStream(geometry, std::move(events));
}

// As above, additionally requiring the header geometry to equal `geometry`.
inline EventStream parse_binary(std::istream& in, SensorGeometry geometry) {
  EventStream stream = parse_binary(in);
  if (stream.geometry() != geometry) {
    throw Error(Errc::GeometryMismatch, "EVS1 header geometry differs from expected");
  }
  return stream;
}

struct WindowSlice {
  Window window;
  std::span<const Event> events;
};

// Tiled: contiguous windows of `duration_us` anchored at the first timestamp,
// covering every event exactly once (empty windows in gaps are kept).
inline std::vector<WindowSlice> slice_tiled(const EventStream& stream, std::int64_t duration_us) {
  if (duration_us <= 0) throw Error(Errc::InvalidArgument, "window duration must be positive");
  if (stream.empty()) throw Error(Errc::EmptyStream, "cannot tile an empty stream");
  const auto events = stream.events();
  const std::int64_t first = events.front().timestamp_us;
  const std::int64_t last = events.back().timestamp_us;
  const std::int64_t count = (last - first) / duration_us + 1;

  std::vector<WindowSlice> out;
  out.reserve(static_cast<std::size_t>(count));
  auto it = events.begin();
  for (std::int64_t k = 0; k < count; ++k) {
    const Window w{first + k * duration_us, duration_us};
    auto end = std::lower_bound(it, events.end(), w.t_end_us(),
                                [](const Event& e, std::int64_t t) { return e.timestamp_us < t; });
    out.push_back({w, std::span<const Event>(it, end)});
    it = end;
  }
  return out;
}

// Anchored: for each anchor a, the window [a - duration_us, a). The start may be
// negative for anchors earlier than one duration into the stream.
inline std::vector<WindowSlice> slice_anchored(const EventStream& stream, std::int64_t duration_us,
                                               std::span<const std::int64_t> anchors) {
  if (duration_us <= 0) throw Error(Errc::InvalidArgument, "window duration must be positive");
  const auto events = stream.events();
  const auto before = [](const Event& e, std::int64_t t) { return e.timestamp_us < t; };
  std::vector<WindowSlice> out;
  out.reserve(anchors.size());
  for (const std::int64_t a : anchors) {
    const Window w{a - duration_us, duration_us};
    auto b = std::lower_bound(events.begin(), events.end(), w.t_start_us, before);
    auto e = std::lower_bound(b, events.end(), w.t_end_us(), before);
    out.push_back({w, std::span<const Event>(b, e)});
  }
  return out;
}

}  // namespace evseg
