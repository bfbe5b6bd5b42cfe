#include "foliascan/raster_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "foliascan/error.hpp"

namespace foliascan::io {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw Error(ErrorCode::IoFailure, "truncated raster");
  return std::uint32_t{bytes[0]} | (std::uint32_t{bytes[1]} << 8) | (std::uint32_t{bytes[2]} << 16) |
         (std::uint32_t{bytes[3]} << 24);
}

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

int read_pnm_int(std::istream& in) {
  skip_pnm_space(in);
  int v = 0;
  if (!(in >> v)) throw Error(ErrorCode::IoFailure, "malformed PGM header");
  return v;
}

}  // namespace

void write_pgm(std::ostream& out, const Image<float>& image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (float v : image.data) {
    const auto byte = static_cast<unsigned char>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0));
    out.put(static_cast<char>(byte));
  }
}

Image<float> read_pgm(std::istream& in) {
  char magic[2];
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') throw Error(ErrorCode::IoFailure, "not a P5 PGM");
  const int w = read_pnm_int(in);
  const int h = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw Error(ErrorCode::IoFailure, "unsupported PGM dimensions");
  in.get();  // single whitespace before the raster
  Image<float> image(w, h, 0.0f);
  for (float& v : image.data) {
    const int c = in.get();
    if (c == EOF) throw Error(ErrorCode::IoFailure, "truncated PGM raster");
    v = static_cast<float>(c) / static_cast<float>(maxval);
  }
  return image;
}

void save_pgm(const std::filesystem::path& path, const Image<float>& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_pgm(out, image);
}

Image<float> load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_pgm(in);
}

void write_raster(std::ostream& out, const light::ScalarMap& map) {
  out.write(kRasterMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const float v = map.valid.data[i] ? static_cast<float>(map.values.data[i]) : std::numeric_limits<float>::quiet_NaN();
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
}

light::ScalarMap read_raster(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kRasterMagic.data(), 4) != 0) {
    throw Error(ErrorCode::IoFailure, "bad raster magic");
  }
  const auto w = static_cast<int>(get_u32(in));
  const auto h = static_cast<int>(get_u32(in));
  light::ScalarMap map{Image<double>(w, h, 0.0), Mask(w, h, 0)};
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const float v = std::bit_cast<float>(get_u32(in));
    if (std::isfinite(v)) {
      map.values.data[i] = v;
      map.valid.data[i] = 1;
    }
  }
  return map;
}

void save_raster(const std::filesystem::path& path, const light::ScalarMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_raster(out, map);
}

light::ScalarMap load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_raster(in);
}

void write_scalar_csv(std::ostream& out, const light::ScalarMap& map, const char* value_name) {
  out << "x,y," << value_name << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (map.valid(x, y)) out << x << ',' << y << ',' << map.values(x, y) << '\n';
    }
  }
}

}  // namespace foliascan::io
