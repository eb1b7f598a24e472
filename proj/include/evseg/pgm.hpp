#pragma once

#include <cctype>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "evseg/error.hpp"
#include "evseg/event.hpp"

namespace evseg {

// 8-bit grayscale raster, row-major.
struct GrayImage {
  SensorGeometry geometry;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(std::uint32_t x, std::uint32_t y) { return pixels[std::size_t{y} * geometry.width + x]; }
  std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return pixels[std::size_t{y} * geometry.width + x]; }
};

// Binary PGM (P5), maxval 255.
inline void write_pgm(std::ostream& out, SensorGeometry geometry, const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != geometry.pixels()) throw Error(Errc::InvalidArgument, "pixel count mismatch");
  out << "P5\n" << geometry.width << ' ' << geometry.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  detail::check_sink(out, "pgm");
}

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline std::uint32_t read_pnm_uint(std::istream& in) {
  skip_pnm_space(in);
  std::uint32_t v = 0;
  if (!(in >> v)) throw Error(Errc::ParseError, "bad PGM header");
  return v;
}

}  // namespace detail

inline GrayImage read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5') throw Error(Errc::BadMagic, "expected P5");
  GrayImage img;
  img.geometry.width = detail::read_pnm_uint(in);
  img.geometry.height = detail::read_pnm_uint(in);
  const auto maxval = detail::read_pnm_uint(in);
  if (maxval == 0 || maxval > 255) throw Error(Errc::ParseError, "only 8-bit PGM supported");
  img.geometry.validate();
  if (!std::isspace(in.get())) throw Error(Errc::ParseError, "bad PGM header");
  img.pixels.resize(img.geometry.pixels());
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw Error(Errc::TruncatedRecord, "short PGM raster");
  }
  return img;
}

}  // namespace evseg
