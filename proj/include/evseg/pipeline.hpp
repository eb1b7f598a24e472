#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evseg/dataset.hpp"
#include "evseg/repr.hpp"
#include "evseg/synth.hpp"

namespace evseg {

// Zero-padded window id shared by encoded tensors and their label maps.
inline std::string window_id(std::size_t index) {
  std::string digits = std::to_string(index);
  return "w" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

// Encodes every tiled window of a synthetic stream and pairs it with the
// ground-truth labels at the window's end (the frame the window integrates up to).
inline std::vector<Sample> synth_samples(const SynthResult& synth, std::int64_t duration_us, ReprKind kind,
                                         std::uint32_t crop_rows = 0) {
  std::vector<Sample> out;
  if (synth.stream.empty()) return out;
  const auto slices = slice_tiled(synth.stream, duration_us);
  out.reserve(slices.size());
  for (std::size_t k = 0; k < slices.size(); ++k) {
    const auto& s = slices[k];
    Sample sample{encode_batch(s.events, s.window, synth.stream.geometry(), kind), synth.labels(s.window.t_end_us()),
                  window_id(k)};
    if (crop_rows > 0) {
      sample.tensor = crop_bottom(sample.tensor, crop_rows);
      sample.labels = crop_bottom(sample.labels, crop_rows);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace evseg
