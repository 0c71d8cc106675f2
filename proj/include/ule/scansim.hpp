#pragma once

// Synthetic scan degradation standing in for write/scan hardware: affine
// placement error, optical blur, exposure drift, dust, and sensor noise.
// Every stage draws from its own seeded stream, so outputs are reproducible
// and raising one severity knob leaves the other stages' randomness intact.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ule/error.hpp"
#include "ule/image.hpp"

namespace ule::scansim {

struct DistortionParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
  double blur_sigma = 0.0;       // px
  double noise_std = 0.0;        // gray levels
  double dust_coverage = 0.0;    // fraction of area, dark blobs
  double dust_radius_min = 2.0;  // px
  double dust_radius_max = 8.0;
  double brightness = 0.0;  // offset
  double contrast = 1.0;    // gain
  uint64_t seed = 0;

  void validate() const {
    require(scale > 0, Errc::usage_error, "distort: scale must be positive");
    require(dust_coverage >= 0 && dust_coverage <= 0.05, Errc::usage_error,
            "distort: dust_coverage must be in [0, 0.05]");
    require(dust_radius_min > 0 && dust_radius_max >= dust_radius_min, Errc::usage_error,
            "distort: bad dust radius range");
  }
};

namespace detail {

// Box-Muller on a dedicated engine; avoids library distributions so the
// byte stream is identical everywhere.
class GaussStream {
 public:
  explicit GaussStream(uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    double u1 = double((rng_() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = double(rng_() >> 11) * 0x1.0p-53;        // [0,1)
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 rng_;
  bool have_ = false;
  double cached_ = 0;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (double(rng() >> 11) * 0x1.0p-53);
}

}  // namespace detail

inline RasterImage distort(const RasterImage& src, const DistortionParams& p) {
  p.validate();

  // 1. affine: rotate about the center, scale, translate; canvas padded to
  //    contain the result, background white.
  const double th = p.rotation_deg * 3.14159265358979323846 / 180.0;
  const double ca = std::cos(th), sa = std::sin(th);
  const double cx = src.width / 2.0, cy = src.height / 2.0;
  auto fwd = [&](double x, double y) {
    double dx = x - cx, dy = y - cy;
    return std::pair<double, double>{p.scale * (ca * dx - sa * dy) + cx + p.translate_x,
                                     p.scale * (sa * dx + ca * dy) + cy + p.translate_y};
  };
  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  for (auto [x, y] : {fwd(0, 0), fwd(src.width, 0), fwd(src.width, src.height),
                      fwd(0, src.height)}) {
    minx = std::min(minx, x);
    miny = std::min(miny, y);
    maxx = std::max(maxx, x);
    maxy = std::max(maxy, y);
  }
  const int ow = int(std::ceil(maxx - minx)), oh = int(std::ceil(maxy - miny));
  RasterImage out(ow, oh, 255);
  const double inv_scale = 1.0 / p.scale;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      // inverse map to source coordinates
      double px = x + 0.5 + minx - cx - p.translate_x;
      double py = y + 0.5 + miny - cy - p.translate_y;
      double sx = inv_scale * (ca * px + sa * py) + cx - 0.5;
      double sy = inv_scale * (-sa * px + ca * py) + cy - 0.5;
      int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
      double fx = sx - x0, fy = sy - y0;
      auto at = [&](int xx, int yy) -> double {
        return src.in_bounds(xx, yy) ? src.at(xx, yy) : 255.0;
      };
      double v = (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
                 (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
      out.set(x, y, uint8_t(std::clamp(v + 0.5, 0.0, 255.0)));
    }

  // 2. Gaussian blur, separable
  if (p.blur_sigma > 0) {
    const int radius = std::max(1, int(std::ceil(3 * p.blur_sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i)
      sum += kernel[i + radius] = std::exp(-0.5 * (i * i) / (p.blur_sigma * p.blur_sigma));
    for (auto& k : kernel) k /= sum;

    std::vector<double> tmp(out.pixels.size());
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * out.at(std::clamp(x + i, 0, ow - 1), y);
        tmp[size_t(y) * ow + x] = acc;
      }
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * tmp[size_t(std::clamp(y + i, 0, oh - 1)) * ow + x];
        out.set(x, y, uint8_t(std::clamp(acc + 0.5, 0.0, 255.0)));
      }
  }

  // 3. contrast and brightness
  if (p.contrast != 1.0 || p.brightness != 0.0) {
    for (auto& v : out.pixels)
      v = uint8_t(std::clamp(p.contrast * (v - 128.0) + 128.0 + p.brightness + 0.5, 0.0, 255.0));
  }

  // 4. dust: dark elliptical blobs until the requested coverage, then bright
  //    blobs (dust on dark areas) at half that coverage. Separate streams so
  //    raising coverage only appends blobs.
  auto splat = [&](std::mt19937_64& rng, double target_fraction, bool dark) {
    if (target_fraction <= 0) return;
    const size_t target = size_t(target_fraction * out.pixels.size());
    std::vector<uint8_t> painted(out.pixels.size(), 0);
    size_t covered = 0;
    while (covered < target) {
      double bx = detail::uniform(rng, 0, ow), by = detail::uniform(rng, 0, oh);
      double rx = detail::uniform(rng, p.dust_radius_min, p.dust_radius_max);
      double ry = detail::uniform(rng, p.dust_radius_min, p.dust_radius_max);
      double shade = dark ? detail::uniform(rng, 0, 60) : detail::uniform(rng, 200, 255);
      int x0 = std::max(0, int(bx - rx)), x1 = std::min(ow - 1, int(bx + rx));
      int y0 = std::max(0, int(by - ry)), y1 = std::min(oh - 1, int(by + ry));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          double nx = (x + 0.5 - bx) / rx, ny = (y + 0.5 - by) / ry;
          if (nx * nx + ny * ny > 1.0) continue;
          out.set(x, y, uint8_t(shade));
          uint8_t& flag = painted[size_t(y) * ow + x];
          if (!flag) {
            flag = 1;
            ++covered;
          }
        }
    }
  };
  std::mt19937_64 rng_dark(p.seed ^ 0xD057D057D057D057ull);
  std::mt19937_64 rng_bright(p.seed ^ 0xB516B516B516B516ull);
  splat(rng_dark, p.dust_coverage, true);
  splat(rng_bright, p.dust_coverage / 2, false);

  // 5. additive Gaussian noise
  if (p.noise_std > 0) {
    detail::GaussStream noise(p.seed ^ 0x9035E9035E9035E9ull);
    for (auto& v : out.pixels)
      v = uint8_t(std::clamp(v + noise.next() * p.noise_std + 0.5, 0.0, 255.0));
  }
  return out;
}

}  // namespace ule::scansim
