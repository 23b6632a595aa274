#pragma once

// Row kernels shared by the serial and OpenMP raster paths so both produce
// byte-identical output.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "zoomtrace/raster.hpp"

namespace zt::raster::detail {

inline void check_region(const IRect& region, long long w, long long h, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("output raster must be at least 1x1");
  if (region.w < 1 || region.h < 1 || region.x < 0 || region.y < 0 || region.x2() > w || region.y2() > h) {
    throw std::invalid_argument("source region leaves the raster");
  }
}

inline std::vector<long long> nearest_axis(long long origin, long long extent, int out) {
  std::vector<long long> s(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) s[static_cast<std::size_t>(i)] = origin + nearest_index(i, extent, out);
  return s;
}

inline void render_row(const Canvas& c, const std::vector<long long>& sx, long long sy, std::uint8_t* row) {
  const int n = static_cast<int>(sx.size());
  for (int i = 0; i < n; ++i) {
    const Rgb bg = c.background(sx[static_cast<std::size_t>(i)], sy);
    row[3 * i] = bg.r;
    row[3 * i + 1] = bg.g;
    row[3 * i + 2] = bg.b;
  }
  for (const auto& r : c.rects) {
    if (sy < r.y1 || sy >= r.y2) continue;
    const auto lo = std::lower_bound(sx.begin(), sx.end(), r.x1) - sx.begin();
    const auto hi = std::lower_bound(sx.begin(), sx.end(), r.x2) - sx.begin();
    for (auto i = lo; i < hi; ++i) {
      row[3 * i] = r.color.r;
      row[3 * i + 1] = r.color.g;
      row[3 * i + 2] = r.color.b;
    }
  }
}

inline void nearest_row(const Image& src, const std::vector<long long>& sx, long long sy, std::uint8_t* row) {
  const int n = static_cast<int>(sx.size());
  for (int i = 0; i < n; ++i) {
    const auto o = src.offset(static_cast<int>(sx[static_cast<std::size_t>(i)]), static_cast<int>(sy));
    row[3 * i] = src.data[o];
    row[3 * i + 1] = src.data[o + 1];
    row[3 * i + 2] = src.data[o + 2];
  }
}

struct Tap {
  int index;
  double weight;
};

// Source pixels (with fractional coverage) under each output pixel.
inline std::vector<std::vector<Tap>> area_axis(long long origin, long long extent, int out) {
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out));
  const double step = static_cast<double>(extent) / out;
  for (int i = 0; i < out; ++i) {
    const double a = origin + i * step;
    const double b = origin + (i + 1) * step;
    for (long long s = static_cast<long long>(std::floor(a)); s < b; ++s) {
      const double w = std::min<double>(b, s + 1) - std::max<double>(a, s);
      if (w > 1e-12) taps[static_cast<std::size_t>(i)].push_back(Tap{static_cast<int>(s), w});
    }
  }
  return taps;
}

inline void area_row(const Image& src, const std::vector<std::vector<Tap>>& xs, const std::vector<Tap>& ys,
                     std::uint8_t* row) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double acc[3] = {0, 0, 0};
    double total = 0;
    for (const auto& ty : ys) {
      for (const auto& tx : xs[i]) {
        const double w = ty.weight * tx.weight;
        const auto o = src.offset(tx.index, ty.index);
        acc[0] += w * src.data[o];
        acc[1] += w * src.data[o + 1];
        acc[2] += w * src.data[o + 2];
        total += w;
      }
    }
    for (int k = 0; k < 3; ++k) {
      row[3 * i + k] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[k] / total), 0L, 255L));
    }
  }
}

inline bool in_set(const std::vector<Rgb>& colors, Rgb c) {
  return std::find(colors.begin(), colors.end(), c) != colors.end();
}

}  // namespace zt::raster::detail
