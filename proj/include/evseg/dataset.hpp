#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "evseg/error.hpp"
#include "evseg/label_map.hpp"
#include "evseg/repr.hpp"

namespace evseg {

// ---------------------------------------------------------------------------
// Bottom-row cropping (dashboard removal).

template <std::floating_point Real>
BasicReprTensor<Real> crop_bottom(const BasicReprTensor<Real>& tensor, std::uint32_t rows) {
  if (rows >= tensor.geometry.height) throw Error(Errc::CropTooLarge, "crop leaves no rows");
  BasicReprTensor<Real> out(SensorGeometry{tensor.geometry.width, tensor.geometry.height - rows}, tensor.kind,
                            tensor.window);
  std::copy_n(tensor.data.begin(), out.data.size(), out.data.begin());
  return out;
}

inline LabelMap crop_bottom(const LabelMap& labels, std::uint32_t rows) {
  if (rows >= labels.geometry.height) throw Error(Errc::CropTooLarge, "crop leaves no rows");
  LabelMap out(SensorGeometry{labels.geometry.width, labels.geometry.height - rows});
  std::copy_n(labels.data.begin(), out.data.size(), out.data.begin());
  return out;
}

// ---------------------------------------------------------------------------
// Sequence manifests. One sequence per line:
//
//   <role> <name> [a, b), [c, d), ...
//
// where role is `train` or `test`. Blank lines and lines starting with '#' are
// ignored. Disjoint intervals are stored sorted; overlapping ones are rejected.

enum class SplitRole { Train, Test };

struct FrameInterval {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t frames() const noexcept { return end - begin; }
  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

struct SequenceManifest {
  std::string name;
  SplitRole role = SplitRole::Train;
  std::vector<FrameInterval> intervals;

  std::int64_t frames() const noexcept {
    std::int64_t n = 0;
    for (const auto& iv : intervals) n += iv.frames();
    return n;
  }
};

inline std::vector<SequenceManifest> load_manifest(std::istream& in) {
  std::vector<SequenceManifest> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;

    std::istringstream ls{std::string(text)};
    std::string role, name;
    if (!(ls >> role >> name)) throw Error(Errc::ParseError, "expected '<role> <name> intervals'", line_no);
    SequenceManifest m;
    m.name = name;
    if (role == "train") {
      m.role = SplitRole::Train;
    } else if (role == "test") {
      m.role = SplitRole::Test;
    } else {
      throw Error(Errc::ParseError, "unknown role '" + role + "'", line_no);
    }

    std::string rest;
    std::getline(ls, rest);
    std::string_view sv = rest;
    for (;;) {
      sv = detail::trim(sv);
      if (sv.empty()) break;
      if (!m.intervals.empty()) {
        if (sv.front() != ',') throw Error(Errc::ParseError, "expected ',' between intervals", line_no);
        sv = detail::trim(sv.substr(1));
      }
      if (sv.empty() || sv.front() != '[') throw Error(Errc::ParseError, "expected '['", line_no);
      const auto comma = sv.find(',');
      const auto close = sv.find(')');
      if (comma == std::string_view::npos || close == std::string_view::npos || close < comma) {
        throw Error(Errc::ParseError, "expected '[a, b)'", line_no);
      }
      FrameInterval iv;
      if (!detail::parse_int(sv.substr(1, comma - 1), iv.begin) ||
          !detail::parse_int(sv.substr(comma + 1, close - comma - 1), iv.end)) {
        throw Error(Errc::ParseError, "bad interval bound", line_no);
      }
      if (iv.begin < 0 || iv.end <= iv.begin) throw Error(Errc::ParseError, "empty or negative interval", line_no);
      m.intervals.push_back(iv);
      sv = sv.substr(close + 1);
    }
    if (m.intervals.empty()) throw Error(Errc::ParseError, "sequence without intervals", line_no);

    std::sort(m.intervals.begin(), m.intervals.end(),
              [](const FrameInterval& a, const FrameInterval& b) { return a.begin < b.begin; });
    for (std::size_t i = 1; i < m.intervals.size(); ++i) {
      if (m.intervals[i].begin < m.intervals[i - 1].end) {
        throw Error(Errc::OverlappingIntervals, "in sequence " + m.name, line_no);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline std::int64_t total_frames(const std::vector<SequenceManifest>& manifests) {
  std::int64_t n = 0;
  for (const auto& m : manifests) n += m.frames();
  return n;
}

inline std::int64_t total_frames(const std::vector<SequenceManifest>& manifests, SplitRole role) {
  std::int64_t n = 0;
  for (const auto& m : manifests) {
    if (m.role == role) n += m.frames();
  }
  return n;
}

// ---------------------------------------------------------------------------
// Samples and augmentation.

struct Sample {
  ReprTensor tensor;
  LabelMap labels;
  std::string id;
};

inline void check_sample(const Sample& s) {
  if (s.tensor.geometry != s.labels.geometry) {
    throw Error(Errc::GeometryMismatch, "sample '" + s.id + "' tensor and labels differ in size");
  }
}

struct HFlip {};
struct Rotate {
  double degrees = 0.0;  // [-15, 15]
};
struct Shift {
  std::int32_t dx = 0;  // |dx| <= width/4
  std::int32_t dy = 0;  // |dy| <= height/4
};
struct Crop {
  std::uint32_t x = 0, y = 0, width = 0, height = 0;
};
using AugmentOp = std::variant<HFlip, Rotate, Shift, Crop>;

namespace detail {

// Resamples tensor and labels with one nearest-neighbor source map; a source of
// (-1, -1) marks out-of-frame pixels.
template <typename SourceFn>
Sample remap(const Sample& in, SensorGeometry out_geometry, SourceFn&& source) {
  Sample out{ReprTensor(out_geometry, in.tensor.kind, in.tensor.window), LabelMap(out_geometry, kIgnoreId), in.id};
  const std::uint32_t C = in.tensor.channels();
  for (std::uint32_t y = 0; y < out_geometry.height; ++y) {
    for (std::uint32_t x = 0; x < out_geometry.width; ++x) {
      const auto [sx, sy] = source(x, y);
      if (!in.labels.geometry.contains(sx, sy)) continue;
      const auto ux = static_cast<std::uint32_t>(sx), uy = static_cast<std::uint32_t>(sy);
      out.labels.at(x, y) = in.labels.at(ux, uy);
      for (std::uint32_t c = 0; c < C; ++c) out.tensor.at(x, y, c) = in.tensor.at(ux, uy, c);
    }
  }
  return out;
}

}  // namespace detail

// Applies one geometric transform identically to every tensor channel and the
// label map. Out-of-frame pixels become 0 in the tensor and kIgnoreId in labels.
inline Sample augment(const Sample& sample, const AugmentOp& op) {
  check_sample(sample);
  const SensorGeometry g = sample.tensor.geometry;
  using Src = std::pair<std::int64_t, std::int64_t>;

  if (std::holds_alternative<HFlip>(op)) {
    return detail::remap(sample, g, [&](std::uint32_t x, std::uint32_t y) {
      return Src{std::int64_t{g.width} - 1 - x, y};
    });
  }
  if (const auto* r = std::get_if<Rotate>(&op)) {
    if (!(r->degrees >= -15.0 && r->degrees <= 15.0)) throw Error(Errc::InvalidArgument, "rotation outside [-15, 15]");
    const double rad = r->degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cx = (g.width - 1) / 2.0, cy = (g.height - 1) / 2.0;
    // Output pixel p takes the source at R(-theta) (p - center) + center.
    return detail::remap(sample, g, [&](std::uint32_t x, std::uint32_t y) {
      const double dx = x - cx, dy = y - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      return Src{std::llround(sx), std::llround(sy)};
    });
  }
  if (const auto* sh = std::get_if<Shift>(&op)) {
    if (4 * std::abs(std::int64_t{sh->dx}) > g.width || 4 * std::abs(std::int64_t{sh->dy}) > g.height) {
      throw Error(Errc::InvalidArgument, "shift exceeds 25% of the frame");
    }
    return detail::remap(sample, g, [&](std::uint32_t x, std::uint32_t y) {
      return Src{std::int64_t{x} - sh->dx, std::int64_t{y} - sh->dy};
    });
  }
  const auto& cr = std::get<Crop>(op);
  if (cr.width == 0 || cr.height == 0 || std::uint64_t{cr.x} + cr.width > g.width ||
      std::uint64_t{cr.y} + cr.height > g.height) {
    throw Error(Errc::DegenerateCrop, "crop rectangle empty or outside the frame");
  }
  return detail::remap(sample, SensorGeometry{cr.width, cr.height}, [&](std::uint32_t x, std::uint32_t y) {
    return Src{std::int64_t{x} + cr.x, std::int64_t{y} + cr.y};
  });
}

// Draws one transform from the standard set: horizontal flip, rotation in
// [-15, 15] degrees, shifts within +-25% of each axis, or a crop keeping at
// least 75% of each side.
inline AugmentOp sample_augmentation(SensorGeometry g, std::mt19937_64& rng) {
  auto uniform_int = [&](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  auto uniform_real = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  switch (rng() % 4) {
    case 0: return HFlip{};
    case 1: return Rotate{uniform_real(-15.0, 15.0)};
    case 2: {
      const std::int64_t mx = g.width / 4, my = g.height / 4;
      return Shift{static_cast<std::int32_t>(uniform_int(-mx, mx)), static_cast<std::int32_t>(uniform_int(-my, my))};
    }
    default: {
      const auto w = static_cast<std::uint32_t>(uniform_int((3 * std::int64_t{g.width} + 3) / 4, g.width));
      const auto h = static_cast<std::uint32_t>(uniform_int((3 * std::int64_t{g.height} + 3) / 4, g.height));
      return Crop{static_cast<std::uint32_t>(uniform_int(0, g.width - w)),
                  static_cast<std::uint32_t>(uniform_int(0, g.height - h)), w, h};
    }
  }
}

// Per-sample RNG seeded from (global seed, sample id), so samples can be
// augmented independently in any order.
inline std::mt19937_64 sample_rng(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const unsigned char ch : id) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

inline Sample augment(const Sample& sample, std::uint64_t seed) {
  auto rng = sample_rng(seed, sample.id);
  return augment(sample, sample_augmentation(sample.tensor.geometry, rng));
}

// Pairs `<id>.rpt1` with `<id>.pgm` in one directory (or two, for predictions
// vs ground truth). Ids without a partner are skipped; output sorted by id.
inline std::vector<std::string> paired_ids(const std::filesystem::path& tensor_dir,
                                           const std::filesystem::path& label_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> ids;
  if (!fs::is_directory(tensor_dir)) throw Error(Errc::Io, "not a directory: " + tensor_dir.string());
  for (const auto& entry : fs::directory_iterator(tensor_dir)) {
    if (entry.path().extension() != ".rpt1") continue;
    const auto stem = entry.path().stem().string();
    if (fs::exists(label_dir / (stem + ".pgm"))) ids.push_back(stem);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline ReprTensor load_rpt1_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_rpt1(in);
}

inline LabelMap load_label_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_label_pgm(in);
}

inline std::vector<Sample> load_samples(const std::filesystem::path& dir) {
  std::vector<Sample> out;
  for (const auto& id : paired_ids(dir, dir)) {
    Sample s{load_rpt1_file(dir / (id + ".rpt1")), load_label_file(dir / (id + ".pgm")), id};
    check_sample(s);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace evseg
