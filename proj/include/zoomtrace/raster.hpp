#pragma once

// RGB rasters and the pixel kernels behind views: synthetic rendering,
// nearest and area resampling, and exact-colour connected components.
// Every kernel has a serial reference and an OpenMP version with identical
// output; the unqualified functions use the OpenMP version.

#include <compare>
#include <cstdint>
#include <vector>

namespace zt::raster {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  auto operator<=>(const Rgb&) const = default;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }
  Rgb at(int x, int y) const {
    const auto o = offset(x, y);
    return Rgb{data[o], data[o + 1], data[o + 2]};
  }
  void set(int x, int y, Rgb c) {
    const auto o = offset(x, y);
    data[o] = c.r;
    data[o + 1] = c.g;
    data[o + 2] = c.b;
  }
  bool operator==(const Image&) const = default;
};

// Integer pixel region (x, y, w, h).
struct IRect {
  long long x = 0, y = 0, w = 0, h = 0;
  long long x2() const { return x + w; }
  long long y2() const { return y + h; }
  bool operator==(const IRect&) const = default;
};

// Filled rectangle on a synthetic canvas, half-open pixel corners.
struct Rect {
  long long x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  Rgb color;
  bool operator==(const Rect&) const = default;
};

struct Canvas {
  long long width = 0;
  long long height = 0;
  std::uint64_t seed = 0;
  std::vector<Rect> rects;  // later rects paint over earlier ones

  // Gray block noise; never saturated, so it never equals a label colour.
  Rgb background(long long x, long long y) const;
  Rgb sample(long long x, long long y) const;
};

bool is_gray(Rgb c);

// Source coordinate sampled by output index i when `extent` source pixels map
// onto `out` output pixels.
inline long long nearest_index(long long i, long long extent, long long out) { return (2 * i + 1) * extent / (2 * out); }

struct Component {
  Rgb color;
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // half-open bounds in image pixels
  long long pixels = 0;
  auto operator<=>(const Component&) const = default;
};

namespace serial {
Image render(const Canvas& c, const IRect& region, int out_w, int out_h);
Image resample_nearest(const Image& src, const IRect& region, int out_w, int out_h);
Image resample_area(const Image& src, const IRect& region, int out_w, int out_h);
// 4-connected components of pixels whose colour is in `colors`, sorted.
std::vector<Component> components(const Image& img, const std::vector<Rgb>& colors);
}  // namespace serial

namespace parallel {
Image render(const Canvas& c, const IRect& region, int out_w, int out_h);
Image resample_nearest(const Image& src, const IRect& region, int out_w, int out_h);
Image resample_area(const Image& src, const IRect& region, int out_w, int out_h);
std::vector<Component> components(const Image& img, const std::vector<Rgb>& colors);
}  // namespace parallel

using parallel::components;
using parallel::render;
using parallel::resample_area;
using parallel::resample_nearest;

// Outline drawing for overlays; clipped to the image.
void draw_rect(Image& img, int x1, int y1, int x2, int y2, Rgb color, int thickness = 1);

}  // namespace zt::raster
