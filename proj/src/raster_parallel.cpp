#include <algorithm>
#include <numeric>

#include "raster_kernels.hpp"
#include "zoomtrace/raster.hpp"

namespace zt::raster::parallel {

Image render(const Canvas& c, const IRect& region, int out_w, int out_h) {
  detail::check_region(region, c.width, c.height, out_w, out_h);
  Image img(out_w, out_h);
  const auto sx = detail::nearest_axis(region.x, region.w, out_w);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < out_h; ++j) {
    detail::render_row(c, sx, region.y + nearest_index(j, region.h, out_h), &img.data[img.offset(0, j)]);
  }
  return img;
}

Image resample_nearest(const Image& src, const IRect& region, int out_w, int out_h) {
  detail::check_region(region, src.width, src.height, out_w, out_h);
  Image img(out_w, out_h);
  const auto sx = detail::nearest_axis(region.x, region.w, out_w);
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
  for (int j = 0; j < out_h; ++j) detail::area_row(src, xs, ys[static_cast<std::size_t>(j)], &img.data[img.offset(0, j)]);
  return img;
}

namespace {

struct Run {
  int y, x1, x2;  // half-open
  Rgb color;
};

int find(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

// Row runs are found in parallel, then joined with union-find.
std::vector<Component> components(const Image& img, const std::vector<Rgb>& colors) {
  std::vector<std::vector<Run>> rows(static_cast<std::size_t>(img.height));
#pragma omp parallel for schedule(static)
  for (int y = 0; y < img.height; ++y) {
    auto& out = rows[static_cast<std::size_t>(y)];
    int x = 0;
    while (x < img.width) {
      const Rgb c = img.at(x, y);
      if (!detail::in_set(colors, c)) {
        ++x;
        continue;
      }
      int e = x + 1;
      while (e < img.width && img.at(e, y) == c) ++e;
      out.push_back(Run{y, x, e, c});
      x = e;
    }
  }

  std::vector<std::size_t> first(rows.size() + 1, 0);
  for (std::size_t y = 0; y < rows.size(); ++y) first[y + 1] = first[y] + rows[y].size();
  std::vector<int> parent(first.back());
  std::iota(parent.begin(), parent.end(), 0);

  for (std::size_t y = 1; y < rows.size(); ++y) {
    const auto& up = rows[y - 1];
    const auto& cur = rows[y];
    std::size_t a = 0;
    for (std::size_t b = 0; b < cur.size(); ++b) {
      while (a < up.size() && up[a].x2 <= cur[b].x1) ++a;
      for (std::size_t k = a; k < up.size() && up[k].x1 < cur[b].x2; ++k) {
        if (up[k].color != cur[b].color) continue;
        const int ra = find(parent, static_cast<int>(first[y - 1] + k));
        const int rb = find(parent, static_cast<int>(first[y] + b));
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }

  std::vector<int> slot(parent.size(), -1);
  std::vector<Component> out;
  for (std::size_t y = 0; y < rows.size(); ++y) {
    for (std::size_t b = 0; b < rows[y].size(); ++b) {
      const auto& r = rows[y][b];
      const int root = find(parent, static_cast<int>(first[y] + b));
      if (slot[root] < 0) {
        slot[root] = static_cast<int>(out.size());
        out.push_back(Component{r.color, r.x1, r.y, r.x2, r.y + 1, 0});
      }
      auto& c = out[static_cast<std::size_t>(slot[root])];
      c.x1 = std::min(c.x1, r.x1);
      c.x2 = std::max(c.x2, r.x2);
      c.y1 = std::min(c.y1, r.y);
      c.y2 = std::max(c.y2, r.y + 1);
      c.pixels += r.x2 - r.x1;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace zt::raster::parallel
