#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "evseg/event.hpp"
#include "support/oracles.hpp"

using namespace evseg;

namespace {

constexpr SensorGeometry k8x8{8, 8};

EventStream csv(const std::string& text, PolarityMode mode = PolarityMode::ZeroOne, SensorGeometry g = k8x8) {
  std::istringstream in(text);
  return parse_csv(in, g, mode);
}

Errc csv_error(const std::string& text, PolarityMode mode = PolarityMode::ZeroOne) {
  try {
    csv(text, mode);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for: " << text;
  return Errc::Io;
}

std::string to_bytes(const EventStream& s) {
  std::ostringstream out;
  write_binary(s, out);
  return out.str();
}

EventStream from_bytes(const std::string& b) {
  std::istringstream in(b);
  return parse_binary(in);
}

Errc binary_error(const std::string& b) {
  try {
    from_bytes(b);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::Io;
}

}  // namespace

TEST(ParseCsv, MapsZeroOnePolarity) {
  const auto s = csv("1000,3,2,1\n1000,3,2,0\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.events()[0], (Event{1000, 3, 2, 1}));
  EXPECT_EQ(s.events()[1], (Event{1000, 3, 2, -1}));
}

TEST(ParseCsv, SignedModeAndComments) {
  const auto s = csv("# header\n\n5,0,0,-1\n  7 , 1 , 1 , 1 \n", PolarityMode::Signed);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.events()[0].polarity, -1);
  EXPECT_EQ(s.events()[1], (Event{7, 1, 1, 1}));
}

TEST(ParseCsv, Errors) {
  EXPECT_EQ(csv_error("500,9,0,1\n"), Errc::OutOfBounds);
  EXPECT_EQ(csv_error("500,0,0,2\n"), Errc::BadPolarity);
  EXPECT_EQ(csv_error("500,0,0,0\n", PolarityMode::Signed), Errc::BadPolarity);
  EXPECT_EQ(csv_error("500,0,0\n"), Errc::MalformedLine);
  EXPECT_EQ(csv_error("500,0,0,1,4\n"), Errc::MalformedLine);
  EXPECT_EQ(csv_error("abc,0,0,1\n"), Errc::MalformedLine);
  EXPECT_EQ(csv_error("-5,0,0,1\n"), Errc::MalformedLine);
  EXPECT_EQ(csv_error("10,0,0,1\n9,0,0,1\n"), Errc::NonMonotonicTimestamp);
}

TEST(ParseCsv, ReportsPhysicalLineNumber) {
  try {
    csv("# c\n1,0,0,1\n\n2,8,0,1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::OutOfBounds);
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(ParseCsv, AcceptsEqualTimestamps) {
  EXPECT_EQ(csv("10,0,0,1\n10,1,0,1\n").size(), 2u);
}

TEST(Evs1, EmptyStreamIsHeaderOnly) {
  const EventStream s(k8x8, {});
  const auto b = to_bytes(s);
  EXPECT_EQ(b.size(), 16u);
  EXPECT_EQ(b.substr(0, 4), "EVS1");
  const auto back = from_bytes(b);
  EXPECT_TRUE(back.empty());
  EXPECT_EQ(back.geometry(), k8x8);
}

TEST(Evs1, TwoEventsIs48Bytes) {
  const EventStream s(k8x8, {{1, 0, 0, 1}, {2, 7, 7, -1}});
  std::ostringstream out;
  EXPECT_EQ(write_binary(s, out), 48u);
  EXPECT_EQ(out.str().size(), 48u);
}

TEST(Evs1, LayoutIsLittleEndian) {
  const EventStream s(SensorGeometry{0x302, 0x3}, {{0x0A0B0C0D, 0x0201, 0x0002, -1}});
  const auto b = to_bytes(s);
  const std::string expected_header("EVS1\x02\x03\x03\x00\x01\x00\x00\x00\x00\x00\x00\x00", 16);
  EXPECT_EQ(b.substr(0, 16), expected_header);
  const std::string expected_record("\x0D\x0C\x0B\x0A\x00\x00\x00\x00\x01\x02\x02\x00\xFF\x00\x00\x00", 16);
  EXPECT_EQ(b.substr(16), expected_record);
}

TEST(Evs1, Errors) {
  const EventStream s(k8x8, {{1, 0, 0, 1}, {2, 1, 1, -1}});
  auto b = to_bytes(s);

  auto bad_magic = b;
  bad_magic[0] = 'X';
  EXPECT_EQ(binary_error(bad_magic), Errc::BadMagic);
  EXPECT_EQ(binary_error(b.substr(0, 10)), Errc::TruncatedRecord);
  EXPECT_EQ(binary_error(b.substr(0, b.size() - 3)), Errc::TruncatedRecord);
  EXPECT_EQ(binary_error(b.substr(0, b.size() - 16)), Errc::CountMismatch);
  EXPECT_EQ(binary_error(b + b.substr(16, 16)), Errc::CountMismatch);

  auto bad_pol = b;
  bad_pol[16 + 12] = 0x02;
  EXPECT_EQ(binary_error(bad_pol), Errc::BadPolarity);

  auto oob = b;
  oob[16 + 8] = 9;
  EXPECT_EQ(binary_error(oob), Errc::OutOfBounds);

  auto backwards = b;
  backwards[32] = 0;  // second event now at t=0 < 1
  EXPECT_EQ(binary_error(backwards), Errc::NonMonotonicTimestamp);
}

TEST(Evs1, GeometryMustMatchWhenGiven) {
  const auto b = to_bytes(EventStream(k8x8, {}));
  std::istringstream in(b);
  EXPECT_THROW(parse_binary(in, SensorGeometry{4, 4}), Error);
}

TEST(Evs1, RoundTripRandomized) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const SensorGeometry g{1 + static_cast<std::uint32_t>(rng() % 400), 1 + static_cast<std::uint32_t>(rng() % 300)};
    const auto events = oracle::random_events(rng, g, Window{static_cast<std::int64_t>(rng() % 1000000), 1 << 20}, rng() % 500);
    const EventStream s(g, events);
    const auto b = to_bytes(s);
    const auto back = from_bytes(b);
    EXPECT_EQ(back, s);
    EXPECT_EQ(to_bytes(back), b);
  }
}

TEST(Csv, CsvBinaryCsvPreservesFields) {
  std::mt19937_64 rng(3);
  const SensorGeometry g{32, 16};
  const EventStream s(g, oracle::random_events(rng, g, Window{0, 100000}, 200));
  std::ostringstream c1;
  write_csv(s, c1);
  std::istringstream in(c1.str());
  const auto parsed = parse_csv(in, g, PolarityMode::Signed);
  const auto via_binary = from_bytes(to_bytes(parsed));
  std::ostringstream c2;
  write_csv(via_binary, c2);
  EXPECT_EQ(c1.str(), c2.str());
  EXPECT_EQ(via_binary, s);
}

TEST(SliceWindows, TiledHalfOpenBoundary) {
  const EventStream s(k8x8, {{0, 0, 0, 1}, {49'999, 0, 0, 1}, {50'000, 0, 0, 1}});
  const auto w = slice_tiled(s, 50'000);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].window, (Window{0, 50'000}));
  EXPECT_EQ(w[0].events.size(), 2u);
  EXPECT_EQ(w[1].window, (Window{50'000, 50'000}));
  EXPECT_EQ(w[1].events.size(), 1u);
}

TEST(SliceWindows, AnchoredExcludesAnchorInstant) {
  const EventStream s(k8x8, {{0, 0, 0, 1}, {49'999, 0, 0, 1}, {50'000, 0, 0, 1}});
  const std::vector<std::int64_t> anchors = {50'000};
  const auto w = slice_anchored(s, 50'000, anchors);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].window, (Window{0, 50'000}));
  EXPECT_EQ(w[0].events.size(), 2u);
}

TEST(SliceWindows, AnchorBeforeOneDurationHasNegativeStart) {
  const EventStream s(k8x8, {{10, 0, 0, 1}, {20, 0, 0, 1}});
  const std::vector<std::int64_t> anchors = {15};
  const auto w = slice_anchored(s, 100, anchors);
  EXPECT_EQ(w[0].window.t_start_us, -85);
  EXPECT_EQ(w[0].events.size(), 1u);
}

TEST(SliceWindows, Errors) {
  EXPECT_THROW(slice_tiled(EventStream(k8x8, {}), 10), Error);
  const EventStream s(k8x8, {{0, 0, 0, 1}});
  EXPECT_THROW(slice_tiled(s, 0), Error);
  try {
    slice_tiled(EventStream(k8x8, {}), 10);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyStream);
  }
}

TEST(SliceWindows, TiledPartitionMatchesMembershipOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng() % 2000;
    const std::int64_t T = 1 + static_cast<std::int64_t>(rng() % 20000);
    const auto events = oracle::random_events(rng, k8x8, Window{static_cast<std::int64_t>(rng() % 5000), 200000}, n);
    const EventStream s(k8x8, events);
    const auto windows = slice_tiled(s, T);

    std::size_t total = 0;
    for (std::size_t k = 0; k < windows.size(); ++k) {
      total += windows[k].events.size();
      if (k > 0) {
        EXPECT_EQ(windows[k].window.t_start_us, windows[k - 1].window.t_end_us());
      }
    }
    EXPECT_EQ(total, s.size());
    // Each event belongs to exactly one window by direct membership test.
    for (const auto& e : s.events()) {
      int owners = 0;
      for (const auto& w : windows) owners += w.window.contains(e.timestamp_us) ? 1 : 0;
      ASSERT_EQ(owners, 1);
    }
    for (const auto& w : windows) {
      std::size_t members = 0;
      for (const auto& e : s.events()) members += w.window.contains(e.timestamp_us) ? 1 : 0;
      ASSERT_EQ(members, w.events.size());
    }
  }
}
