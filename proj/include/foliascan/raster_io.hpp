#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>

#include "foliascan/image.hpp"
#include "foliascan/structured_light.hpp"

namespace foliascan::io {

/// 8-bit binary PGM (P5). Intensities in [0, 1] are scaled to 0..255.
void write_pgm(std::ostream& out, const Image<float>& image);
Image<float> read_pgm(std::istream& in);

void save_pgm(const std::filesystem::path& path, const Image<float>& image);
Image<float> load_pgm(const std::filesystem::path& path);

/// Float raster: 4-byte magic "FSR1", little-endian uint32 width and height,
/// then width*height little-endian float32 values row by row. Invalid pixels
/// are stored as NaN.
inline constexpr std::array<char, 4> kRasterMagic{'F', 'S', 'R', '1'};

void write_raster(std::ostream& out, const light::ScalarMap& map);
light::ScalarMap read_raster(std::istream& in);

void save_raster(const std::filesystem::path& path, const light::ScalarMap& map);
light::ScalarMap load_raster(const std::filesystem::path& path);

/// CSV `x,y,value` over valid pixels.
void write_scalar_csv(std::ostream& out, const light::ScalarMap& map, const char* value_name);

}  // namespace foliascan::io
