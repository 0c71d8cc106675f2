#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ule/mocoder.hpp"
#include "ule/scansim.hpp"

using namespace ule;
using scansim::DistortionParams;

namespace {

RasterImage noise_image(int w, int h, uint32_t seed) {
  std::mt19937 rng(seed);
  RasterImage img(w, h);
  for (auto& p : img.pixels) p = uint8_t(rng());
  return img;
}

RasterImage sample_emblem(uint32_t seed) {
  auto g = mocoder::test_profile();
  std::mt19937 rng(seed);
  Bytes payload(1500);
  for (auto& b : payload) b = uint8_t(rng());
  mocoder::EmblemHeader h;
  h.payload_length = uint16_t(payload.size());
  return mocoder::emblem_render(mocoder::emblem_encode(payload, h, g), g);
}

}  // namespace

TEST_CASE("identity params are a no-op", "[scansim]") {
  RasterImage img = noise_image(200, 150, 5);
  DistortionParams p;
  RasterImage out = scansim::distort(img, p);
  CHECK(out == img);
}

TEST_CASE("same seed gives identical rasters", "[scansim]") {
  RasterImage img = noise_image(300, 300, 6);
  DistortionParams p;
  p.rotation_deg = 1.0;
  p.scale = 0.95;
  p.blur_sigma = 1.2;
  p.noise_std = 6;
  p.dust_coverage = 0.002;
  p.seed = 999;
  CHECK(scansim::distort(img, p) == scansim::distort(img, p));

  DistortionParams p2 = p;
  p2.seed = 1000;
  CHECK(scansim::distort(img, p2) != scansim::distort(img, p));
}

TEST_CASE("rotation by 90 degrees still decodes", "[scansim]") {
  auto g = mocoder::test_profile();
  RasterImage img = sample_emblem(42);
  auto reference = mocoder::decode_image(img, g);

  DistortionParams p;
  p.rotation_deg = 90;
  p.seed = 3;
  RasterImage rotated = scansim::distort(img, p);
  auto out = mocoder::decode_image(rotated, g);
  CHECK(out.payload == reference.payload);
}

TEST_CASE("dust severity is monotone in corrected symbols", "[scansim]") {
  auto g = mocoder::test_profile();
  RasterImage img = sample_emblem(77);
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    int prev = -1;
    for (double coverage : {0.0, 0.001, 0.002, 0.003}) {
      DistortionParams p;
      p.blur_sigma = 0.8;
      p.noise_std = 4;
      p.dust_coverage = coverage;
      p.seed = seed;
      auto out = mocoder::decode_image(scansim::distort(img, p), g);
      int work = out.stats.corrected_symbols + out.stats.erased_symbols;
      CHECK(work >= prev);
      prev = work;
    }
  }
}
