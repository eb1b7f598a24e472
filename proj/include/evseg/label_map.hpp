#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "evseg/event.hpp"
#include "evseg/pgm.hpp"

namespace evseg {

inline constexpr std::uint8_t kIgnoreId = 255;

// The six label categories, ids 0..5 in this order.
inline constexpr std::array<std::string_view, 6> kClassNames = {
    "flat", "background", "object", "vegetation", "human", "vehicle"};
inline constexpr std::uint8_t kNumClasses = 6;
inline constexpr std::uint8_t kClassHuman = 4;
inline constexpr std::uint8_t kClassVehicle = 5;

// H×W class ids; kIgnoreId marks unlabeled pixels.
struct LabelMap {
  SensorGeometry geometry;
  std::vector<std::uint8_t> data;

  LabelMap() = default;
  explicit LabelMap(SensorGeometry g, std::uint8_t fill = 0) : geometry(g), data(g.pixels(), fill) {}

  std::uint8_t& at(std::uint32_t x, std::uint32_t y) { return data[std::size_t{y} * geometry.width + x]; }
  std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return data[std::size_t{y} * geometry.width + x]; }

  // Every non-ignore value must be < num_classes.
  void validate(std::uint32_t num_classes) const {
    for (const auto v : data) {
      if (v != kIgnoreId && v >= num_classes) throw Error(Errc::BadClassId, std::to_string(v));
    }
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

inline void write_label_pgm(std::ostream& out, const LabelMap& labels) {
  write_pgm(out, labels.geometry, labels.data);
}

inline LabelMap read_label_pgm(std::istream& in) {
  GrayImage img = read_pgm(in);
  LabelMap labels;
  labels.geometry = img.geometry;
  labels.data = std::move(img.pixels);
  return labels;
}

}  // namespace evseg
