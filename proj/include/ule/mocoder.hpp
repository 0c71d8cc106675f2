#pragma once

// Media layout codec: payload bytes <-> emblem cell matrices <-> rasters.
// An emblem is, from the outside in: a quiet zone (Q white cells, outside the
// grid), a solid black frame (F cells), a sync ring of 8x8-cell blocks
// alternating black/white along each side (with one orientation-mark block),
// and the data interior, modulated with a self-clocking differential scheme
// along a serpentine path. Payload bytes are RS(255,223) protected and
// column-interleaved across codewords; the 16-octet header rides in front,
// repeated five times.

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ule/bitcore.hpp"
#include "ule/ecc.hpp"
#include "ule/error.hpp"
#include "ule/image.hpp"

namespace ule::mocoder {

inline constexpr int kHeaderBytes = 16;
inline constexpr int kHeaderCopies = 5;
inline constexpr int kHeaderBlockBytes = kHeaderBytes * kHeaderCopies;  // 80
inline constexpr float kConfidenceFloor = 0.15f;

// ---------------------------------------------------------------------------
// Geometry

struct EmblemGeometry {
  std::string profile;
  int grid_side = 0;        // G, cells
  int frame_thickness = 6;  // F
  int sync_ring = 8;        // S
  int quiet_zone = 8;       // Q, outside the grid
  int cell_px = 4;

  int interior() const { return grid_side - 2 * frame_thickness - 2 * sync_ring; }
  int data_cells() const { return interior() * interior(); }
  int raw_bytes() const { return data_cells() / 2 / 8; }
  int coded_bytes() const { return raw_bytes() - kHeaderBlockBytes; }
  int n_codewords() const { return coded_bytes() / ecc::kInnerCodeword; }
  int user_capacity() const { return ecc::kInnerData * n_codewords(); }
  int stream_bytes() const { return kHeaderBlockBytes + ecc::kInnerCodeword * n_codewords(); }
  int raster_side() const { return (grid_side + 2 * quiet_zone) * cell_px; }

  void validate() const {
    require(interior() > 0 && interior() % 2 == 0, Errc::length_error,
            "geometry: interior must be positive and even");
    require(n_codewords() >= 1, Errc::length_error, "geometry: no room for codewords");
    require(cell_px >= 2, Errc::length_error, "geometry: cell_px must be >= 2");
  }
};

inline EmblemGeometry test_profile() { return {"test", 256, 6, 8, 8, 4}; }
inline EmblemGeometry a4_profile() { return {"a4", 1024, 6, 8, 8, 4}; }

inline const std::vector<EmblemGeometry>& known_profiles() {
  static const std::vector<EmblemGeometry> profiles{test_profile(), a4_profile()};
  return profiles;
}

inline EmblemGeometry profile_by_name(const std::string& name) {
  for (const auto& p : known_profiles())
    if (p.profile == name) return p;
  fail(Errc::usage_error, "unknown profile: " + name);
}

// ---------------------------------------------------------------------------
// Header

enum class EmblemType : uint8_t { data = 0, system = 1, parity = 2 };

struct EmblemHeader {
  uint8_t version = 1;
  EmblemType emblem_type = EmblemType::data;
  uint16_t group_id = 0;
  uint8_t index_in_group = 0;
  uint8_t group_data_count = 0;  // k
  uint16_t total_emblems = 0;
  uint16_t payload_length = 0;

  std::array<uint8_t, kHeaderBytes> to_bytes() const {
    std::array<uint8_t, kHeaderBytes> out{};
    out[0] = version;
    out[1] = uint8_t(emblem_type);
    out[2] = uint8_t(group_id);
    out[3] = uint8_t(group_id >> 8);
    out[4] = index_in_group;
    out[5] = group_data_count;
    out[6] = uint8_t(total_emblems);
    out[7] = uint8_t(total_emblems >> 8);
    out[8] = uint8_t(payload_length);
    out[9] = uint8_t(payload_length >> 8);
    // out[10], out[11] reserved, zero
    uint32_t crc = bitcore::crc32(std::span<const uint8_t>(out.data(), 12));
    for (int i = 0; i < 4; ++i) out[12 + i] = uint8_t(crc >> (8 * i));
    return out;
  }

  static EmblemHeader from_bytes(std::span<const uint8_t> raw) {
    require(raw.size() == kHeaderBytes, Errc::header_error, "header: wrong size");
    uint32_t stored = 0;
    for (int i = 3; i >= 0; --i) stored = (stored << 8) | raw[12 + i];
    require(stored == bitcore::crc32(raw.subspan(0, 12)), Errc::header_error,
            "header: crc mismatch");
    EmblemHeader h;
    h.version = raw[0];
    require(raw[1] <= 2, Errc::header_error, "header: bad emblem type");
    h.emblem_type = EmblemType(raw[1]);
    h.group_id = uint16_t(raw[2] | (raw[3] << 8));
    h.index_in_group = raw[4];
    h.group_data_count = raw[5];
    h.total_emblems = uint16_t(raw[6] | (raw[7] << 8));
    h.payload_length = uint16_t(raw[8] | (raw[9] << 8));
    return h;
  }

  bool operator==(const EmblemHeader&) const = default;
};

// ---------------------------------------------------------------------------
// Cells

struct CellMatrix {
  int side = 0;
  std::vector<uint8_t> cells;  // 1 black, 0 white
  std::vector<float> conf;     // optional, per cell, in [0,1]

  CellMatrix() = default;
  explicit CellMatrix(int s) : side(s), cells(size_t(s) * s, 0) {}

  uint8_t at(int x, int y) const { return cells[size_t(y) * side + x]; }
  void set(int x, int y, uint8_t v) { cells[size_t(y) * side + x] = v; }
  float conf_at(int x, int y) const {
    return conf.empty() ? 1.0f : conf[size_t(y) * side + x];
  }
};

// Template color for frame/ring/mark cells; nullopt inside the data interior
// (and outside the grid). Ring bands alternate 8x8 blocks starting black at
// each band origin; the second top-edge block is the orientation mark, a 2x2
// checker of 4x4 sub-blocks.
inline std::optional<bool> template_cell(const EmblemGeometry& g, int x, int y) {
  const int G = g.grid_side, F = g.frame_thickness, S = g.sync_ring;
  if (x < 0 || y < 0 || x >= G || y >= G) return std::nullopt;
  if (x < F || y < F || x >= G - F || y >= G - F) return true;  // frame
  const bool in_interior =
      x >= F + S && x < G - F - S && y >= F + S && y < G - F - S;
  if (in_interior) return std::nullopt;
  // sync ring: top/bottom bands span the full width, left/right the remainder
  int index;
  if (y < F + S) {
    index = (x - F) / S;
    if (index == 1) {  // orientation mark
      int sx = (x - F - S) / (S / 2), sy = (y - F) / (S / 2);
      return (sx + sy) % 2 == 0;
    }
  } else if (y >= G - F - S) {
    index = (x - F) / S;
  } else if (x < F + S) {
    index = (y - F - S) / S;
  } else {
    index = (y - F - S) / S;
  }
  return index % 2 == 0;
}

// Serpentine path over the interior: top row left-to-right, next row
// right-to-left, and so on. Coordinates are grid cells.
inline std::vector<std::pair<int, int>> serpentine_path(const EmblemGeometry& g) {
  const int base = g.frame_thickness + g.sync_ring;
  const int I = g.interior();
  std::vector<std::pair<int, int>> path;
  path.reserve(size_t(I) * I);
  for (int row = 0; row < I; ++row) {
    if (row % 2 == 0)
      for (int col = 0; col < I; ++col) path.emplace_back(base + col, base + row);
    else
      for (int col = I - 1; col >= 0; --col) path.emplace_back(base + col, base + row);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Differential Manchester over cells: each bit occupies two cells; a
// transition always occurs at mid-bit (the clock); a transition at the bit
// start encodes 0, its absence encodes 1. The virtual level before the first
// cell is black.

inline std::vector<uint8_t> dm2d_encode(const bitcore::BitSequence& bits,
                                        uint8_t initial_level = 1) {
  std::vector<uint8_t> cells;
  cells.reserve(bits.size() * 2);
  uint8_t level = initial_level;
  for (auto bit : bits) {
    if (bit == 0) level ^= 1;  // start transition encodes 0
    cells.push_back(level);
    level ^= 1;  // mid-bit clock transition, always
    cells.push_back(level);
  }
  return cells;
}

struct DmDecodeResult {
  bitcore::BitSequence bits;
  std::vector<uint8_t> erasure;  // per bit
};

inline DmDecodeResult dm2d_decode(std::span<const uint8_t> cells, std::span<const float> conf,
                                  uint8_t initial_level = 1) {
  require(cells.size() % 2 == 0, Errc::length_error, "dm2d_decode: odd cell count");
  DmDecodeResult out;
  const size_t nbits = cells.size() / 2;
  out.bits.resize(nbits);
  out.erasure.resize(nbits, 0);
  uint8_t prev = initial_level;
  for (size_t i = 0; i < nbits; ++i) {
    uint8_t c0 = cells[2 * i], c1 = cells[2 * i + 1];
    out.bits[i] = (c0 == prev) ? 1 : 0;  // start transition -> 0
    bool clock_missing = (c0 == c1);
    bool low_conf = !conf.empty() && (conf[2 * i] < kConfidenceFloor ||
                                      conf[2 * i + 1] < kConfidenceFloor);
    if (clock_missing || low_conf) out.erasure[i] = 1;
    prev = c1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

inline Bytes build_stream(std::span<const uint8_t> payload, const EmblemHeader& header,
                          const EmblemGeometry& g) {
  require(int(payload.size()) <= g.user_capacity(), Errc::capacity_error,
          "emblem: payload exceeds capacity");
  require(header.payload_length == payload.size(), Errc::length_error,
          "emblem: header payload_length mismatch");
  const int n = g.n_codewords();

  Bytes padded(payload.begin(), payload.end());
  padded.resize(size_t(ecc::kInnerData) * n, 0);

  std::vector<Bytes> codewords(n);
  for (int j = 0; j < n; ++j)
    codewords[j] = ecc::rs_encode(
        std::span<const uint8_t>(padded.data() + size_t(j) * ecc::kInnerData, ecc::kInnerData));

  Bytes stream(g.stream_bytes());
  auto hdr = header.to_bytes();
  for (int c = 0; c < kHeaderCopies; ++c)
    std::copy(hdr.begin(), hdr.end(), stream.begin() + c * kHeaderBytes);
  // column interleave: position i*n + j holds byte i of codeword j
  for (int i = 0; i < ecc::kInnerCodeword; ++i)
    for (int j = 0; j < n; ++j)
      stream[kHeaderBlockBytes + size_t(i) * n + j] = codewords[j][i];
  return stream;
}

inline CellMatrix emblem_encode(std::span<const uint8_t> payload, const EmblemHeader& header,
                                const EmblemGeometry& g) {
  g.validate();
  Bytes stream = build_stream(payload, header, g);

  bitcore::BitSequence bits = bitcore::unpack_bits(stream, stream.size() * 8);
  const size_t total_bits = size_t(g.data_cells()) / 2;
  size_t i = bits.size();
  bits.resize(total_bits);
  for (uint8_t pad = 1; i < total_bits; ++i, pad ^= 1) bits[i] = pad;  // 1,0,1,0,...

  std::vector<uint8_t> dm_cells = dm2d_encode(bits, 1);

  CellMatrix m(g.grid_side);
  for (int y = 0; y < g.grid_side; ++y)
    for (int x = 0; x < g.grid_side; ++x)
      if (auto t = template_cell(g, x, y)) m.set(x, y, *t ? 1 : 0);
  auto path = serpentine_path(g);
  for (size_t c = 0; c < path.size(); ++c) m.set(path[c].first, path[c].second, dm_cells[c]);
  return m;
}

inline RasterImage emblem_render(const CellMatrix& m, const EmblemGeometry& g) {
  g.validate();
  require(m.side == g.grid_side, Errc::length_error, "render: matrix side mismatch");
  const int Q = g.quiet_zone, cp = g.cell_px;
  RasterImage img(g.raster_side(), g.raster_side(), 255);
  for (int cy = 0; cy < m.side; ++cy)
    for (int cx = 0; cx < m.side; ++cx) {
      if (!m.at(cx, cy)) continue;
      int px0 = (cx + Q) * cp, py0 = (cy + Q) * cp;
      for (int dy = 0; dy < cp; ++dy)
        for (int dx = 0; dx < cp; ++dx) img.set(px0 + dx, py0 + dy, 0);
    }
  return img;
}

// ---------------------------------------------------------------------------
// Binarization: local mean over a 33x33 window minus a bias of 4; a pixel at
// or below the (clamped) threshold is black. Confidence measures the margin
// from the unclamped threshold.

struct BinarizedImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> black;  // 1 black, 0 white
  std::vector<uint8_t> conf;   // 0..255 == 0..1

  bool black_at(int x, int y) const { return black[size_t(y) * width + x] != 0; }
  float conf_at(int x, int y) const { return conf[size_t(y) * width + x] / 255.0f; }
};

inline BinarizedImage binarize(const RasterImage& img) {
  constexpr int kRadius = 16;  // 33x33 window
  constexpr double kBias = 4.0;
  const int w = img.width, h = img.height;
  BinarizedImage out;
  out.width = w;
  out.height = h;
  out.black.assign(size_t(w) * h, 0);
  out.conf.assign(size_t(w) * h, 0);

  std::vector<uint32_t> ring(size_t(33) * w);
  std::vector<uint64_t> colsum(w, 0);
  std::vector<int> xcount(w);
  for (int x = 0; x < w; ++x)
    xcount[x] = std::min(x + kRadius, w - 1) - std::max(x - kRadius, 0) + 1;

  auto compute_row = [&](int y, uint32_t* dst) {
    // horizontal box sums of row y
    uint32_t acc = 0;
    for (int x = 0; x <= std::min(kRadius, w - 1); ++x) acc += img.at(x, y);
    for (int x = 0; x < w; ++x) {
      dst[x] = acc;
      int enter = x + kRadius + 1, leave = x - kRadius;
      if (enter < w) acc += img.at(enter, y);
      if (leave >= 0) acc -= img.at(leave, y);
    }
  };

  int lo = 0, hi = -1;
  for (int y = 0; y < h; ++y) {
    int want_hi = std::min(y + kRadius, h - 1), want_lo = std::max(y - kRadius, 0);
    while (lo < want_lo) {  // retire rows before their ring slot is reused
      uint32_t* slot = ring.data() + size_t(lo % 33) * w;
      for (int x = 0; x < w; ++x) colsum[x] -= slot[x];
      ++lo;
    }
    while (hi < want_hi) {
      ++hi;
      uint32_t* slot = ring.data() + size_t(hi % 33) * w;
      compute_row(hi, slot);
      for (int x = 0; x < w; ++x) colsum[x] += slot[x];
    }
    const int ycount = hi - lo + 1;
    for (int x = 0; x < w; ++x) {
      double mean = double(colsum[x]) / (double(xcount[x]) * ycount);
      double thr = mean - kBias;
      double margin = std::abs(double(img.at(x, y)) - thr) / 128.0;
      size_t idx = size_t(y) * w + x;
      out.black[idx] = (img.at(x, y) <= std::max(thr, 0.0)) ? 1 : 0;
      out.conf[idx] = uint8_t(std::min(margin, 1.0) * 255.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Homography: 3x3 map from cell coordinates to pixel coordinates, bottom
// right entry fixed to 1.

struct Homography {
  std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

  std::pair<double, double> apply(double u, double v) const {
    double d = h[6] * u + h[7] * v + h[8];
    return {(h[0] * u + h[1] * v + h[2]) / d, (h[3] * u + h[4] * v + h[5]) / d};
  }

  // Exact solve from four correspondences (u,v) -> (x,y).
  static Homography from_quad(const std::array<std::pair<double, double>, 4>& src,
                              const std::array<std::pair<double, double>, 4>& dst) {
    double a[8][9] = {};
    for (int i = 0; i < 4; ++i) {
      double u = src[i].first, v = src[i].second;
      double x = dst[i].first, y = dst[i].second;
      double r0[9] = {u, v, 1, 0, 0, 0, -u * x, -v * x, x};
      double r1[9] = {0, 0, 0, u, v, 1, -u * y, -v * y, y};
      std::copy(r0, r0 + 9, a[2 * i]);
      std::copy(r1, r1 + 9, a[2 * i + 1]);
    }
    // Gaussian elimination with partial pivoting
    for (int col = 0; col < 8; ++col) {
      int pivot = col;
      for (int r = col + 1; r < 8; ++r)
        if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
      require(std::abs(a[pivot][col]) > 1e-12, Errc::locate_error,
              "homography: degenerate correspondences");
      std::swap(a[col], a[pivot]);
      for (int r = 0; r < 8; ++r) {
        if (r == col) continue;
        double f = a[r][col] / a[col][col];
        for (int c = col; c < 9; ++c) a[r][c] -= f * a[col][c];
      }
    }
    Homography res;
    for (int i = 0; i < 8; ++i) res.h[i] = a[i][8] / a[i][i];
    res.h[8] = 1.0;
    return res;
  }
};

// ---------------------------------------------------------------------------
// Locate: find the frame, fit its outer corners, resolve orientation via the
// sync ring and the orientation mark.

namespace detail {

struct Quad {
  std::array<std::pair<double, double>, 4> corners;  // cyclic order
};

inline double segment_distance(double px, double py, std::pair<double, double> a,
                               std::pair<double, double> b) {
  double vx = b.first - a.first, vy = b.second - a.second;
  double wx = px - a.first, wy = py - a.second;
  double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
  double dx = px - (a.first + t * vx), dy = py - (a.second + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

struct Line {  // unit normal (nx, ny), offset c: nx*x + ny*y = c
  double nx = 0, ny = 0, c = 0;
};

inline Line fit_line(const std::vector<std::pair<double, double>>& pts) {
  // total least squares through the centroid
  double mx = 0, my = 0;
  for (auto& p : pts) {
    mx += p.first;
    my += p.second;
  }
  mx /= double(pts.size());
  my /= double(pts.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (auto& p : pts) {
    double dx = p.first - mx, dy = p.second - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  // normal = eigenvector of smaller eigenvalue of [[sxx,sxy],[sxy,syy]]
  double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  double lam = tr / 2 - std::sqrt(std::max(tr * tr / 4 - det, 0.0));
  double nx, ny;
  if (std::abs(sxy) > 1e-12) {
    nx = lam - syy;
    ny = sxy;
  } else if (sxx >= syy) {
    nx = 0;
    ny = 1;
  } else {
    nx = 1;
    ny = 0;
  }
  double norm = std::sqrt(nx * nx + ny * ny);
  Line l{nx / norm, ny / norm, 0};
  l.c = l.nx * mx + l.ny * my;
  return l;
}

inline std::pair<double, double> intersect(const Line& a, const Line& b) {
  double det = a.nx * b.ny - a.ny * b.nx;
  require(std::abs(det) > 1e-12, Errc::locate_error, "locate: parallel frame edges");
  return {(a.c * b.ny - a.ny * b.c) / det, (a.nx * b.c - a.c * b.nx) / det};
}

}  // namespace detail

struct LocateResult {
  Homography homography;
  double ring_score = 0;  // fraction of ring blocks matching the template
};

inline LocateResult emblem_locate_impl(const BinarizedImage& bin, const EmblemGeometry& g) {
  const int w = bin.width, h = bin.height;
  const size_t npx = size_t(w) * h;

  // largest dark 8-connected component
  std::vector<uint8_t> visited(npx, 0), mask(npx, 0);
  std::vector<size_t> stack;
  size_t best_size = 0;
  std::pair<size_t, size_t> best_seed{0, 0};
  for (size_t start = 0; start < npx; ++start) {
    if (visited[start] || !bin.black[start]) continue;
    size_t count = 0;
    stack.assign(1, start);
    visited[start] = 1;
    while (!stack.empty()) {
      size_t p = stack.back();
      stack.pop_back();
      ++count;
      int x = int(p % w), y = int(p / w);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          size_t q = size_t(ny) * w + nx;
          if (!visited[q] && bin.black[q]) {
            visited[q] = 1;
            stack.push_back(q);
          }
        }
    }
    if (count > best_size) {
      best_size = count;
      best_seed = {start, count};
    }
  }
  require(best_size > size_t(g.frame_thickness) * g.frame_thickness, Errc::locate_error,
          "locate: no frame candidate (no-frame)");

  // re-flood the winning component into mask, tracking diagonal extremes
  long best_pp = LONG_MIN, best_mm = LONG_MAX, best_pm = LONG_MIN, best_mp = LONG_MAX;
  std::pair<double, double> c_pp, c_mm, c_pm, c_mp;
  double cx_sum = 0, cy_sum = 0;
  stack.assign(1, best_seed.first);
  mask[best_seed.first] = 1;
  while (!stack.empty()) {
    size_t p = stack.back();
    stack.pop_back();
    int x = int(p % w), y = int(p / w);
    cx_sum += x;
    cy_sum += y;
    long sp = long(x) + y, sm = long(x) - y;
    if (sp > best_pp) {
      best_pp = sp;
      c_pp = {x + 0.5, y + 0.5};
    }
    if (sp < best_mm) {
      best_mm = sp;
      c_mm = {x + 0.5, y + 0.5};
    }
    if (sm > best_pm) {
      best_pm = sm;
      c_pm = {x + 0.5, y + 0.5};
    }
    if (sm < best_mp) {
      best_mp = sm;
      c_mp = {x + 0.5, y + 0.5};
    }
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        size_t q = size_t(ny) * w + nx;
        if (!mask[q] && bin.black[q]) {
          mask[q] = 1;
          stack.push_back(q);
        }
      }
  }
  double cx = cx_sum / double(best_size), cy = cy_sum / double(best_size);

  // hole requirement: some light pixel must be enclosed (not border-connected)
  {
    std::vector<uint8_t> border(npx, 0);
    std::vector<size_t> bfs;
    auto push_light = [&](size_t q) {
      if (!border[q] && !bin.black[q]) {
        border[q] = 1;
        bfs.push_back(q);
      }
    };
    for (int x = 0; x < w; ++x) {
      push_light(size_t(x));
      push_light(size_t(h - 1) * w + x);
    }
    for (int y = 0; y < h; ++y) {
      push_light(size_t(y) * w);
      push_light(size_t(y) * w + (w - 1));
    }
    while (!bfs.empty()) {
      size_t p = bfs.back();
      bfs.pop_back();
      int x = int(p % w), y = int(p / w);
      if (x > 0) push_light(p - 1);
      if (x < w - 1) push_light(p + 1);
      if (y > 0) push_light(p - w);
      if (y < h - 1) push_light(p + w);
    }
    bool has_hole = false;
    for (size_t p = 0; p < npx && !has_hole; ++p)
      if (!bin.black[p] && !border[p]) has_hole = true;
    require(has_hole, Errc::locate_error, "locate: frame candidate has no hole (no-hole)");
  }

  std::array<std::pair<double, double>, 4> rough{c_mm, c_pm, c_pp, c_mp};  // cyclic

  // collect outer boundary points near each rough edge and fit lines
  std::array<std::vector<std::pair<double, double>>, 4> edge_pts;
  for (size_t p = 0; p < npx; ++p) {
    if (!mask[p]) continue;
    int x = int(p % w), y = int(p / w);
    bool boundary = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !mask[p - 1] ||
                    !mask[p + 1] || !mask[p - w] || !mask[p + w];
    if (!boundary) continue;
    double px = x + 0.5, py = y + 0.5;
    for (int side = 0; side < 4; ++side) {
      const auto& a = rough[side];
      const auto& b = rough[(side + 1) % 4];
      if (detail::segment_distance(px, py, a, b) <= 3.0) edge_pts[side].emplace_back(px, py);
    }
  }

  std::array<detail::Line, 4> lines;
  for (int side = 0; side < 4; ++side) {
    auto& pts = edge_pts[side];
    require(pts.size() >= 8, Errc::locate_error, "locate: frame edge too sparse (no-frame)");
    // trim 10% near the corners to avoid rounding bias
    const auto& a = rough[side];
    const auto& b = rough[(side + 1) % 4];
    double len = std::hypot(b.first - a.first, b.second - a.second);
    std::vector<std::pair<double, double>> kept;
    for (auto& p : pts) {
      double t = ((p.first - a.first) * (b.first - a.first) +
                  (p.second - a.second) * (b.second - a.second)) /
                 (len * len);
      if (t > 0.1 && t < 0.9) kept.push_back(p);
    }
    if (kept.size() >= 8) pts = std::move(kept);
    lines[side] = detail::fit_line(pts);
    // boundary pixel centers sit half a pixel inside the true edge
    double toward_centroid = lines[side].nx * cx + lines[side].ny * cy - lines[side].c;
    lines[side].c += (toward_centroid > 0) ? -0.5 : 0.5;
  }

  detail::Quad quad;
  for (int i = 0; i < 4; ++i) quad.corners[i] = detail::intersect(lines[(i + 3) % 4], lines[i]);

  // try the 8 corner assignments (4 rotations x 2 directions)
  const double G = g.grid_side;
  const std::array<std::pair<double, double>, 4> cell_corners{
      std::pair<double, double>{0, 0}, {G, 0}, {G, G}, {0, G}};

  auto sample_black = [&](const Homography& H, double u, double v) -> int {
    auto [x, y] = H.apply(u, v);
    int px = int(std::floor(x)), py = int(std::floor(y));
    if (px < 0 || py < 0 || px >= w || py >= h) return -1;
    return bin.black_at(px, py) ? 1 : 0;
  };

  const int F = g.frame_thickness, S = g.sync_ring, Gi = g.grid_side;
  const int top_full = (Gi - 2 * F) / S;
  const int side_full = (Gi - 2 * F - 2 * S) / S;

  LocateResult best;
  int candidates_ok = 0;
  for (int rot = 0; rot < 4; ++rot) {
    for (int dir = 0; dir < 2; ++dir) {
      std::array<std::pair<double, double>, 4> dst;
      for (int i = 0; i < 4; ++i) {
        int idx = dir == 0 ? (rot + i) % 4 : (rot + 4 - i) % 4;
        dst[i] = quad.corners[idx];
      }
      Homography H;
      try {
        H = Homography::from_quad(cell_corners, dst);
      } catch (const Error&) {
        continue;
      }

      int match = 0, total = 0;
      bool off_image = false;
      auto check_block = [&](double cellx, double celly, bool expect) {
        int s = sample_black(H, cellx, celly);
        if (s < 0) {
          off_image = true;
          return;
        }
        ++total;
        if ((s == 1) == expect) ++match;
      };
      for (int i = 0; i < top_full && !off_image; ++i) {
        bool expect = i % 2 == 0;
        if (i != 1) check_block(F + S * i + S / 2.0, F + S / 2.0, expect);  // top (mark at 1)
        check_block(F + S * i + S / 2.0, Gi - F - S / 2.0, expect);         // bottom
      }
      for (int i = 0; i < side_full && !off_image; ++i) {
        bool expect = i % 2 == 0;
        check_block(F + S / 2.0, F + S + S * i + S / 2.0, expect);           // left
        check_block(Gi - F - S / 2.0, F + S + S * i + S / 2.0, expect);      // right
      }
      if (off_image || total == 0) continue;
      double score = double(match) / total;
      if (score < 0.90) continue;

      // orientation mark: 2x2 checker of 4x4 sub-blocks in top block 1
      bool mark_ok = true;
      for (int sy = 0; sy < 2 && mark_ok; ++sy)
        for (int sx = 0; sx < 2 && mark_ok; ++sx) {
          int s = sample_black(H, F + S + (S / 2.0) * sx + S / 4.0,
                               F + (S / 2.0) * sy + S / 4.0);
          if (s < 0 || (s == 1) != ((sx + sy) % 2 == 0)) mark_ok = false;
        }
      if (!mark_ok) continue;

      ++candidates_ok;
      if (score > best.ring_score) {
        best.ring_score = score;
        best.homography = H;
      }
    }
  }
  require(candidates_ok > 0, Errc::locate_error,
          "locate: ring validation failed for all orientations (ring-validation)");
  require(candidates_ok == 1, Errc::locate_error,
          "locate: orientation ambiguous (orientation-ambiguous)");
  return best;
}

inline Homography emblem_locate(const RasterImage& img, const EmblemGeometry& g) {
  return emblem_locate_impl(binarize(img), g).homography;
}

// ---------------------------------------------------------------------------
// Sampling: 3x3 sub-positions per cell, majority vote, confidence scaled by
// agreement. Off-image samples contribute zero confidence.

inline CellMatrix emblem_sample(const BinarizedImage& bin, const Homography& H,
                                const EmblemGeometry& g) {
  CellMatrix m(g.grid_side);
  m.conf.assign(size_t(g.grid_side) * g.grid_side, 0.0f);
  constexpr double kOff[3] = {-0.3, 0.0, 0.3};
  for (int cy = 0; cy < g.grid_side; ++cy)
    for (int cx = 0; cx < g.grid_side; ++cx) {
      int votes_black = 0, in_image = 0;
      float conf_sum = 0;
      for (double oy : kOff)
        for (double ox : kOff) {
          auto [x, y] = H.apply(cx + 0.5 + ox, cy + 0.5 + oy);
          int px = int(std::floor(x)), py = int(std::floor(y));
          if (px < 0 || py < 0 || px >= bin.width || py >= bin.height) continue;
          ++in_image;
          votes_black += bin.black_at(px, py) ? 1 : 0;
          conf_sum += bin.conf_at(px, py);
        }
      size_t idx = size_t(cy) * g.grid_side + cx;
      if (in_image == 0) {
        m.cells[idx] = 0;
        m.conf[idx] = 0.0f;
        continue;
      }
      bool black = votes_black * 2 > in_image;
      int agree = black ? votes_black : in_image - votes_black;
      m.cells[idx] = black ? 1 : 0;
      m.conf[idx] = (conf_sum / 9.0f) * (float(agree) / in_image);
    }
  return m;
}

// ---------------------------------------------------------------------------
// Decoding

struct DecodeStats {
  int corrected_symbols = 0;
  int erased_symbols = 0;
  std::vector<int> failed_codewords;
};

struct EmblemDecodeOutcome {
  EmblemHeader header;
  Bytes payload;
  DecodeStats stats;
};

inline EmblemDecodeOutcome emblem_decode(const CellMatrix& m, const EmblemGeometry& g) {
  g.validate();
  require(m.side == g.grid_side, Errc::length_error, "decode: matrix side mismatch");

  auto path = serpentine_path(g);
  std::vector<uint8_t> cells(path.size());
  std::vector<float> conf(path.size());
  for (size_t i = 0; i < path.size(); ++i) {
    cells[i] = m.at(path[i].first, path[i].second);
    conf[i] = m.conf_at(path[i].first, path[i].second);
  }
  auto dm = dm2d_decode(cells, conf, 1);

  const int n = g.n_codewords();
  const size_t nstream = size_t(g.stream_bytes());
  Bytes stream(nstream);
  std::vector<uint8_t> byte_erased(nstream, 0);
  for (size_t b = 0; b < nstream; ++b) {
    uint8_t v = 0;
    bool erased = false;
    for (int k = 0; k < 8; ++k) {
      size_t bit = b * 8 + k;
      v = uint8_t((v << 1) | dm.bits[bit]);
      if (dm.erasure[bit]) erased = true;
    }
    stream[b] = v;
    byte_erased[b] = erased ? 1 : 0;
  }

  // header: per-octet majority over the five copies, then CRC
  std::array<uint8_t, kHeaderBytes> hdr_bytes{};
  for (int i = 0; i < kHeaderBytes; ++i) {
    std::array<int, 256> votes{};
    for (int c = 0; c < kHeaderCopies; ++c) votes[stream[c * kHeaderBytes + i]]++;
    int best = 0;
    for (int v = 1; v < 256; ++v)
      if (votes[v] > votes[best]) best = v;
    hdr_bytes[i] = uint8_t(best);
  }
  EmblemHeader header = EmblemHeader::from_bytes(hdr_bytes);  // throws header_error on CRC
  require(int(header.payload_length) <= g.user_capacity(), Errc::header_error,
          "decode: header payload_length exceeds capacity");

  EmblemDecodeOutcome out;
  out.header = header;
  Bytes data(size_t(ecc::kInnerData) * n);
  for (int j = 0; j < n; ++j) {
    Bytes cw(ecc::kInnerCodeword);
    std::vector<int> erasures;
    for (int i = 0; i < ecc::kInnerCodeword; ++i) {
      size_t pos = kHeaderBlockBytes + size_t(i) * n + j;
      cw[i] = stream[pos];
      if (byte_erased[pos]) erasures.push_back(i);
    }
    out.stats.erased_symbols += int(erasures.size());
    if (int(erasures.size()) > ecc::kInnerParity) {
      out.stats.failed_codewords.push_back(j);
      continue;
    }
    try {
      auto dec = ecc::rs_decode(cw, erasures);
      out.stats.corrected_symbols += dec.corrected;
      std::copy(dec.data.begin(), dec.data.end(), data.begin() + size_t(j) * ecc::kInnerData);
    } catch (const Error&) {
      out.stats.failed_codewords.push_back(j);
    }
  }
  if (!out.stats.failed_codewords.empty()) {
    std::string idx;
    for (int j : out.stats.failed_codewords) idx += (idx.empty() ? "" : ",") + std::to_string(j);
    fail(Errc::emblem_decode_error, "decode: unrecoverable codewords [" + idx + "]");
  }
  out.payload.assign(data.begin(), data.begin() + header.payload_length);
  return out;
}

// Full image path: binarize, locate, sample, decode.
inline EmblemDecodeOutcome decode_image(const RasterImage& img, const EmblemGeometry& g) {
  BinarizedImage bin = binarize(img);
  LocateResult loc = emblem_locate_impl(bin, g);
  CellMatrix cells = emblem_sample(bin, loc.homography, g);
  return emblem_decode(cells, g);
}

// Tries each known profile; returns the first that locates and decodes.
struct ProfiledDecode {
  EmblemGeometry geometry;
  EmblemDecodeOutcome outcome;
};

inline ProfiledDecode decode_image_any(const RasterImage& img,
                                       const std::vector<EmblemGeometry>& profiles) {
  std::string last_err = "no profiles";
  BinarizedImage bin = binarize(img);
  for (const auto& g : profiles) {
    try {
      LocateResult loc = emblem_locate_impl(bin, g);
      CellMatrix cells = emblem_sample(bin, loc.homography, g);
      return {g, emblem_decode(cells, g)};
    } catch (const Error& e) {
      last_err = e.what();
    }
  }
  fail(Errc::emblem_decode_error, "decode: no profile matched: " + last_err);
}

}  // namespace ule::mocoder
