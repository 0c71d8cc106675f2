#pragma once

// 8-bit grayscale raster and binary PGM ("P5") interchange.

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ule/error.hpp"

namespace ule {

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major

  RasterImage() = default;
  RasterImage(int w, int h, uint8_t fill = 255) : width(w), height(h), pixels(size_t(w) * h, fill) {}

  uint8_t at(int x, int y) const { return pixels[size_t(y) * width + x]; }
  void set(int x, int y, uint8_t v) { pixels[size_t(y) * width + x] = v; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  size_t size() const { return pixels.size(); }

  bool operator==(const RasterImage&) const = default;
};

inline void write_pgm(const RasterImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), Errc::io_error, "cannot open for writing: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
  require(bool(out), Errc::io_error, "short write: " + path);
}

inline RasterImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), Errc::io_error, "cannot open: " + path);

  auto next_token = [&in, &path]() {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {  // comment runs to end of line
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(char(c));
    }
    require(!tok.empty(), Errc::format_error, "pgm: truncated header: " + path);
    return tok;
  };

  require(next_token() == "P5", Errc::format_error, "pgm: not a P5 file: " + path);
  int w = std::stoi(next_token());
  int h = std::stoi(next_token());
  int maxval = std::stoi(next_token());
  require(w > 0 && h > 0, Errc::format_error, "pgm: bad dimensions: " + path);
  require(maxval == 255, Errc::format_error, "pgm: maxval must be 255: " + path);

  RasterImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
  require(size_t(in.gcount()) == img.pixels.size(), Errc::format_error,
          "pgm: truncated pixel data: " + path);
  return img;
}

}  // namespace ule
