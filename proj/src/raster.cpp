#include "zoomtrace/raster.hpp"

#include <algorithm>

#include "raster_kernels.hpp"

namespace zt::raster {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rgb Canvas::background(long long x, long long y) const {
  const auto h = mix(seed ^ mix(static_cast<std::uint64_t>(x >> 3) * 0x100000001b3ULL ^
                                static_cast<std::uint64_t>(y >> 3)));
  const auto v = static_cast<std::uint8_t>(40 + h % 60);
  return Rgb{v, v, v};
}

Rgb Canvas::sample(long long x, long long y) const {
  for (auto it = rects.rbegin(); it != rects.rend(); ++it) {
    if (x >= it->x1 && x < it->x2 && y >= it->y1 && y < it->y2) return it->color;
  }
  return background(x, y);
}

bool is_gray(Rgb c) { return c.r == c.g && c.g == c.b; }

namespace serial {

Image render(const Canvas& c, const IRect& region, int out_w, int out_h) {
  detail::check_region(region, c.width, c.height, out_w, out_h);
  Image img(out_w, out_h);
  const auto sx = detail::nearest_axis(region.x, region.w, out_w);
  for (int j = 0; j < out_h; ++j) {
    detail::render_row(c, sx, region.y + nearest_index(j, region.h, out_h), &img.data[img.offset(0, j)]);
  }
  return img;
}

Image resample_nearest(const Image& src, const IRect& region, int out_w, int out_h) {
  detail::check_region(region, src.width, src.height, out_w, out_h);
  Image img(out_w, out_h);
  const auto sx = detail::nearest_axis(region.x, region.w, out_w);
  for (int j = 0; j < out_h; ++j) {
    detail::nearest_row(src, sx, region.y + nearest_index(j, region.h, out_h), &img.data[img.offset(0, j)]);
  }
  return img;
}

Image resample_area(const Image& src, const IRect& region, int out_w, int out_h) {
  detail::check_region(region, src.width, src.height, out_w, out_h);
  Image img(out_w, out_h);
  const auto xs = detail::area_axis(region.x, region.w, out_w);
  const auto ys = detail::area_axis(region.y, region.h, out_h);
  for (int j = 0; j < out_h; ++j) detail::area_row(src, xs, ys[static_cast<std::size_t>(j)], &img.data[img.offset(0, j)]);
  return img;
}

// Reference flood fill.
std::vector<Component> components(const Image& img, const std::vector<Rgb>& colors) {
  std::vector<Component> out;
  std::vector<char> seen(static_cast<std::size_t>(img.width) * img.height, 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto idx = static_cast<std::size_t>(y) * img.width + x;
      if (seen[idx]) continue;
      const Rgb c = img.at(x, y);
      if (!detail::in_set(colors, c)) continue;
      Component comp{c, x, y, x + 1, y + 1, 0};
      seen[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        auto [px, py] = stack.back();
        stack.pop_back();
        ++comp.pixels;
        comp.x1 = std::min(comp.x1, px);
        comp.y1 = std::min(comp.y1, py);
        comp.x2 = std::max(comp.x2, px + 1);
        comp.y2 = std::max(comp.y2, py + 1);
        const int nx[4] = {px - 1, px + 1, px, px};
        const int ny[4] = {py, py, py - 1, py + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= img.width || ny[k] >= img.height) continue;
          const auto n = static_cast<std::size_t>(ny[k]) * img.width + nx[k];
          if (seen[n] || img.at(nx[k], ny[k]) != c) continue;
          seen[n] = 1;
          stack.push_back({nx[k], ny[k]});
        }
      }
      out.push_back(comp);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace serial

void draw_rect(Image& img, int x1, int y1, int x2, int y2, Rgb color, int thickness) {
  auto put = [&](int x, int y) {
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, color);
  };
  for (int t = 0; t < thickness; ++t) {
    for (int x = x1; x < x2; ++x) {
      put(x, y1 + t);
      put(x, y2 - 1 - t);
    }
    for (int y = y1; y < y2; ++y) {
      put(x1 + t, y);
      put(x2 - 1 - t, y);
    }
  }
}

}  // namespace zt::raster
