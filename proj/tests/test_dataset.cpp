#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "evseg/dataset.hpp"
#include "support/oracles.hpp"

#ifndef EVSEG_DATA_DIR
#error "EVSEG_DATA_DIR must point at the repository data directory"
#endif

using namespace evseg;

namespace {

Sample coordinate_sample(SensorGeometry g) {
  // Every tensor channel and the label encode the pixel position, so any
  // transform can be checked by decoding where each output pixel came from.
  Sample s{ReprTensor(g, ReprKind::HistMeanStd6, Window{0, 50'000}), LabelMap(g), "grid"};
  for (std::uint32_t y = 0; y < g.height; ++y) {
    for (std::uint32_t x = 0; x < g.width; ++x) {
      for (std::uint32_t c = 0; c < 6; ++c) s.tensor.at(x, y, c) = 1 + x + 100.0 * y + 10000.0 * c;
      s.labels.at(x, y) = static_cast<std::uint8_t>((x + 3 * y) % kNumClasses);
    }
  }
  return s;
}

std::vector<SequenceManifest> manifest(const std::string& text) {
  std::istringstream in(text);
  return load_manifest(in);
}

}  // namespace

TEST(CropBottom, HeightsAndErrors) {
  const ReprTensor t(SensorGeometry{346, 260}, ReprKind::HistMeanStd6, Window{0, 50'000});
  EXPECT_EQ(crop_bottom(t, 60).geometry.height, 200u);
  EXPECT_EQ(crop_bottom(t, 0), t);
  try {
    crop_bottom(t, 260);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CropTooLarge);
  }
  const LabelMap l(SensorGeometry{4, 3}, 2);
  EXPECT_EQ(crop_bottom(l, 2).geometry, (SensorGeometry{4, 1}));
  EXPECT_THROW(crop_bottom(l, 3), Error);
}

TEST(CropBottom, KeepsTopRows) {
  const auto s = coordinate_sample(SensorGeometry{5, 4});
  const auto t = crop_bottom(s.tensor, 1);
  const auto l = crop_bottom(s.labels, 1);
  for (std::uint32_t y = 0; y < 3; ++y) {
    for (std::uint32_t x = 0; x < 5; ++x) {
      EXPECT_EQ(t.at(x, y, 3), s.tensor.at(x, y, 3));
      EXPECT_EQ(l.at(x, y), s.labels.at(x, y));
    }
  }
}

TEST(Manifest, ShippedFixtureTotals) {
  std::ifstream in(std::filesystem::path(EVSEG_DATA_DIR) / "ev_seg_manifest.txt");
  ASSERT_TRUE(in);
  const auto m = load_manifest(in);
  EXPECT_EQ(m.size(), 6u);
  EXPECT_EQ(total_frames(m, SplitRole::Train), 15950);
  EXPECT_EQ(total_frames(m, SplitRole::Test), 3890);
  EXPECT_EQ(total_frames(m), 15950 + 3890);
}

TEST(Manifest, SingleInterval) {
  const auto m = manifest("train seq [0, 10)\n");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(total_frames(m), 10);
  EXPECT_EQ(m[0].name, "seq");
}

TEST(Manifest, SortsDisjointIntervals) {
  const auto m = manifest("test s [20, 30), [0, 5)\n");
  ASSERT_EQ(m[0].intervals.size(), 2u);
  EXPECT_EQ(m[0].intervals[0], (FrameInterval{0, 5}));
  EXPECT_EQ(total_frames(m), 15);
}

TEST(Manifest, Errors) {
  auto code = [](const std::string& text) {
    try {
      manifest(text);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  EXPECT_EQ(code("train s [0, 10), [5, 12)\n"), Errc::OverlappingIntervals);
  EXPECT_EQ(code("valid s [0, 10)\n"), Errc::ParseError);
  EXPECT_EQ(code("train s\n"), Errc::ParseError);
  EXPECT_EQ(code("train s [0, 10]\n"), Errc::ParseError);
  EXPECT_EQ(code("train s [10, 10)\n"), Errc::ParseError);
  EXPECT_EQ(code("train s [0, 1) [2, 3)\n"), Errc::ParseError);
  EXPECT_EQ(code("train s [a, 3)\n"), Errc::ParseError);
}

TEST(Augment, HFlipIsInvolution) {
  const auto s = coordinate_sample(SensorGeometry{7, 5});
  const auto once = augment(s, HFlip{});
  EXPECT_EQ(once.tensor.at(0, 2, 0), s.tensor.at(6, 2, 0));
  EXPECT_EQ(once.labels.at(0, 2), s.labels.at(6, 2));
  const auto twice = augment(once, HFlip{});
  EXPECT_EQ(twice.tensor, s.tensor);
  EXPECT_EQ(twice.labels, s.labels);
}

TEST(Augment, RotateZeroIsIdentity) {
  const auto s = coordinate_sample(SensorGeometry{8, 6});
  const auto r = augment(s, Rotate{0.0});
  EXPECT_EQ(r.tensor, s.tensor);
  EXPECT_EQ(r.labels, s.labels);
}

TEST(Augment, ShiftMovesLonePixel) {
  const SensorGeometry g{10, 8};
  Sample s{ReprTensor(g, ReprKind::Hist2, Window{0, 10}), LabelMap(g, 0), "one"};
  s.tensor.at(3, 4, 1) = 5;
  s.labels.at(3, 4) = 5;
  const auto r = augment(s, Shift{2, 0});
  EXPECT_EQ(r.tensor.at(5, 4, 1), 5.0);
  EXPECT_EQ(r.tensor.at(3, 4, 1), 0.0);
  EXPECT_EQ(r.labels.at(5, 4), 5);
  EXPECT_EQ(r.labels.at(3, 4), 0);
  // Vacated columns are out of frame.
  EXPECT_EQ(r.labels.at(0, 0), kIgnoreId);
  EXPECT_EQ(r.labels.at(1, 7), kIgnoreId);
  EXPECT_EQ(r.tensor.at(0, 0, 0), 0.0);
}

TEST(Augment, CropAndErrors) {
  const auto s = coordinate_sample(SensorGeometry{8, 6});
  const auto c = augment(s, Crop{2, 1, 4, 3});
  EXPECT_EQ(c.tensor.geometry, (SensorGeometry{4, 3}));
  EXPECT_EQ(c.tensor.at(0, 0, 2), s.tensor.at(2, 1, 2));
  EXPECT_EQ(c.labels.at(3, 2), s.labels.at(5, 3));
  try {
    augment(s, Crop{6, 0, 4, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateCrop);
  }
  EXPECT_THROW(augment(s, Crop{0, 0, 0, 2}), Error);
  EXPECT_THROW(augment(s, Rotate{20.0}), Error);
  EXPECT_THROW(augment(s, Shift{3, 0}), Error);  // > 25% of 8
  Sample mismatched = s;
  mismatched.labels = LabelMap(SensorGeometry{3, 3});
  EXPECT_THROW(augment(mismatched, HFlip{}), Error);
}

TEST(Augment, TensorAndLabelsReceiveSameTransform) {
  const SensorGeometry g{23, 17};
  const auto s = coordinate_sample(g);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto op = sample_augmentation(g, rng);
    const auto r = augment(s, op);
    for (std::uint32_t y = 0; y < r.labels.geometry.height; ++y) {
      for (std::uint32_t x = 0; x < r.labels.geometry.width; ++x) {
        const double code = r.tensor.at(x, y, 0);
        if (code == 0) {
          ASSERT_EQ(r.labels.at(x, y), kIgnoreId);
          for (std::uint32_t c = 1; c < 6; ++c) ASSERT_EQ(r.tensor.at(x, y, c), 0.0);
          continue;
        }
        const auto sx = static_cast<std::uint32_t>(static_cast<long>(code - 1) % 100);
        const auto sy = static_cast<std::uint32_t>(static_cast<long>(code - 1) / 100);
        ASSERT_EQ(r.labels.at(x, y), s.labels.at(sx, sy));
        for (std::uint32_t c = 1; c < 6; ++c) ASSERT_EQ(r.tensor.at(x, y, c), s.tensor.at(sx, sy, c));
      }
    }
  }
}

TEST(Augment, PreservesRepresentationInvariants) {
  std::mt19937_64 rng(5);
  const SensorGeometry g{20, 16};
  const Window w{0, 50'000};
  const auto ev = oracle::random_events(rng, g, w, 1500);
  Sample s{encode_batch(ev, w, g, ReprKind::HistMeanStd6), LabelMap(g, 1), "ev"};
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = augment(s, static_cast<std::uint64_t>(trial));
    for (std::size_t i = 0; i < r.tensor.geometry.pixels(); ++i) {
      for (int p = 0; p < 2; ++p) {
        const double hist = r.tensor.data[i * 6 + p];
        ASSERT_EQ(hist, std::floor(hist));
        ASSERT_GE(r.tensor.data[i * 6 + 2 + p], 0.0);
        ASSERT_LT(r.tensor.data[i * 6 + 2 + p], 1.0);
        if (hist <= 1) {
          ASSERT_EQ(r.tensor.data[i * 6 + 4 + p], 0.0);
        }
      }
    }
  }
}

TEST(Augment, SeededBySampleId) {
  const auto s = coordinate_sample(SensorGeometry{12, 12});
  EXPECT_EQ(augment(s, 3).tensor, augment(s, 3).tensor);
  auto other = s;
  other.id = "different";
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 10 && !differs; ++seed) {
    differs = augment(s, seed).tensor != augment(other, seed).tensor;
  }
  EXPECT_TRUE(differs);
}

TEST(Samples, LoadsPairsByStem) {
  const auto dir = std::filesystem::temp_directory_path() / "evseg_samples_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto s = coordinate_sample(SensorGeometry{4, 3});
  {
    std::ofstream t(dir / "a.rpt1", std::ios::binary);
    write_rpt1(t, s.tensor, SampleType::F64);
    std::ofstream l(dir / "a.pgm", std::ios::binary);
    write_label_pgm(l, s.labels);
    std::ofstream orphan(dir / "b.rpt1", std::ios::binary);
    write_rpt1(orphan, s.tensor, SampleType::F64);
  }
  const auto loaded = load_samples(dir);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].id, "a");
  EXPECT_EQ(loaded[0].tensor, s.tensor);
  EXPECT_EQ(loaded[0].labels, s.labels);
  std::filesystem::remove_all(dir);
}

TEST(LabelPgm, RoundTripWithComments) {
  LabelMap l(SensorGeometry{3, 2});
  l.data = {0, 1, 2, 3, 5, kIgnoreId};
  std::ostringstream out;
  write_label_pgm(out, l);
  EXPECT_EQ(out.str().substr(0, 11), "P5\n3 2\n255\n");
  std::istringstream in(out.str());
  EXPECT_EQ(read_label_pgm(in), l);

  std::istringstream commented(std::string("P5\n# made by hand\n3 2\n255\n") + std::string(6, '\x01'));
  EXPECT_EQ(read_label_pgm(commented).data, std::vector<std::uint8_t>(6, 1));
  l.data[0] = 9;
  EXPECT_THROW(l.validate(kNumClasses), Error);
}
