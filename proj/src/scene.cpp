#include "zoomtrace/scene.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace zt::scene {

namespace {

bool overlaps_with_gap(const Primitive& a, const Primitive& b, long long gap) {
  return a.x1 < b.x2 + gap && b.x1 < a.x2 + gap && a.y1 < b.y2 + gap && b.y1 < a.y2 + gap;
}

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string e = path.substr(dot + 1);
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

const std::map<std::string, raster::Rgb>& default_palette() {
  static const std::map<std::string, raster::Rgb> p{
      {"ship", {220, 40, 40}},     {"plane", {40, 200, 60}},  {"vehicle", {40, 80, 230}},
      {"tank", {230, 200, 30}},    {"building", {200, 40, 200}}, {"court", {30, 210, 210}},
  };
  return p;
}

std::string to_text(const SyntheticSpec& spec) {
  std::ostringstream os;
  os << "canvas " << spec.width << ' ' << spec.height << '\n' << "seed " << spec.seed << '\n';
  for (const auto& [label, c] : spec.palette) {
    os << "color " << label << ' ' << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b) << '\n';
  }
  for (const auto& p : spec.primitives) {
    os << "rect " << p.label << ' ' << p.x1 << ' ' << p.y1 << ' ' << p.x2 << ' ' << p.y2 << '\n';
  }
  return os.str();
}

SyntheticSpec parse_spec(const std::string& text) {
  SyntheticSpec spec;
  spec.palette.clear();
  bool have_canvas = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto fail = [&](const std::string& why) {
      return SceneError("scene spec line " + std::to_string(line_no) + ": " + why);
    };
    if (key == "canvas") {
      if (!(ls >> spec.width >> spec.height)) throw fail("canvas needs width and height");
      have_canvas = true;
    } else if (key == "seed") {
      if (!(ls >> spec.seed)) throw fail("seed needs an integer");
    } else if (key == "color") {
      std::string label;
      int r, g, b;
      if (!(ls >> label >> r >> g >> b) || r < 0 || g < 0 || b < 0 || r > 255 || g > 255 || b > 255) {
        throw fail("color needs a label and three values in 0..255");
      }
      const raster::Rgb c{std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)};
      if (raster::is_gray(c)) throw fail("label colours must not be gray");
      spec.palette[label] = c;
    } else if (key == "rect") {
      Primitive p;
      if (!(ls >> p.label >> p.x1 >> p.y1 >> p.x2 >> p.y2)) throw fail("rect needs a label and four corners");
      spec.primitives.push_back(p);
    } else {
      throw fail("unknown key '" + key + "'");
    }
  }
  if (!have_canvas) throw SceneError("scene spec has no canvas line");
  return spec;
}

SyntheticSpec gen_scene(const GenParams& p) {
  if (p.width < 1 || p.height < 1) throw SceneError("zero-sized canvas");
  if (p.labels.empty()) throw SceneError("scene needs at least one label");
  if (p.min_size < 1 || p.max_size < p.min_size || p.max_size > std::min(p.width, p.height)) {
    throw SceneError("object size range does not fit the canvas");
  }
  SyntheticSpec spec;
  spec.width = p.width;
  spec.height = p.height;
  spec.seed = p.seed;
  for (const auto& l : p.labels) {
    auto f = default_palette().find(l);
    if (f == default_palette().end()) throw SceneError("no default colour for label '" + l + "'");
    spec.palette[l] = f->second;
  }

  std::mt19937_64 rng(p.seed);
  auto uniform = [&](long long lo, long long hi) { return std::uniform_int_distribution<long long>(lo, hi)(rng); };
  auto fits = [&](const Primitive& c) {
    return std::none_of(spec.primitives.begin(), spec.primitives.end(),
                        [&](const Primitive& o) { return overlaps_with_gap(c, o, p.min_gap); });
  };
  auto place = [&](bool straddle) {
    for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
      Primitive c;
      c.label = p.labels[static_cast<std::size_t>(uniform(0, static_cast<long long>(p.labels.size()) - 1))];
      const long long w = uniform(p.min_size, p.max_size);
      const long long h = uniform(p.min_size, p.max_size);
      if (straddle) {
        // Crosses x = W/2 with at least a quarter of its width on each side.
        const long long mid = p.width / 2;
        c.x1 = mid - w + uniform(w / 4, w - w / 4);
      } else {
        c.x1 = uniform(0, p.width - w);
      }
      c.y1 = uniform(0, p.height - h);
      c.x2 = c.x1 + w;
      c.y2 = c.y1 + h;
      if (c.x1 < 0 || c.x2 > p.width) continue;
      if (fits(c)) {
        spec.primitives.push_back(c);
        return;
      }
    }
    throw SceneError("could not place object " + std::to_string(spec.primitives.size() + 1) + " after " +
                     std::to_string(p.max_attempts) + " attempts");
  };
  for (int i = 0; i < p.straddle; ++i) place(true);
  for (int i = 0; i < p.count; ++i) place(false);
  return spec;
}

Scene Scene::synthetic(SyntheticSpec spec, std::string source) {
  if (spec.width < 1 || spec.height < 1) throw SceneError("zero-sized canvas");
  Scene s;
  s.source_ = std::move(source);
  s.width_ = spec.width;
  s.height_ = spec.height;
  auto canvas = std::make_shared<raster::Canvas>();
  canvas->width = spec.width;
  canvas->height = spec.height;
  canvas->seed = spec.seed;
  for (const auto& pr : spec.primitives) {
    if (pr.x1 < 0 || pr.y1 < 0 || pr.x2 > spec.width || pr.y2 > spec.height || pr.x2 <= pr.x1 || pr.y2 <= pr.y1) {
      throw SceneError("primitive '" + pr.label + "' leaves the canvas or is empty");
    }
    auto c = spec.palette.find(pr.label);
    if (c == spec.palette.end()) {
      auto d = default_palette().find(pr.label);
      if (d == default_palette().end()) throw SceneError("no colour for label '" + pr.label + "'");
      spec.palette[pr.label] = d->second;
      c = spec.palette.find(pr.label);
    }
    canvas->rects.push_back(raster::Rect{pr.x1, pr.y1, pr.x2, pr.y2, c->second});
    s.truth_.push_back(LabeledBox{pr.label, geo::PixelBox{double(pr.x1), double(pr.y1), double(pr.x2), double(pr.y2)}});
  }
  s.palette_ = spec.palette;
  s.canvas_ = std::move(canvas);
  s.spec_ = std::make_shared<const SyntheticSpec>(std::move(spec));
  return s;
}

Scene Scene::from_raster(raster::Image image, std::string source) {
  if (image.width < 1 || image.height < 1) throw SceneError("zero-sized raster");
  Scene s;
  s.source_ = std::move(source);
  s.width_ = image.width;
  s.height_ = image.height;
  s.image_ = std::make_shared<const raster::Image>(std::move(image));
  return s;
}

Scene Scene::open(const std::string& path) {
  const auto ext = lower_ext(path);
  if (ext == "scene" || ext == "txt") {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot read scene spec '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return synthetic(parse_spec(ss.str()), path);
  }
  return from_raster(read_image(path), path);
}

raster::Image Scene::render(const raster::IRect& region, int out_w, int out_h) const {
  if (canvas_) return raster::render(*canvas_, region, out_w, out_h);
  return raster::resample_area(*image_, region, out_w, out_h);
}

Annotation Scene::annotation(traj::TaskKind task, const std::string& target_label, const std::string& id) const {
  Annotation a;
  a.id = id.empty() ? source_ : id;
  a.task = task;
  a.width = static_cast<double>(width_);
  a.height = static_cast<double>(height_);
  a.boxes = truth_;
  a.target_label = target_label;
  return a;
}

raster::Image read_image(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  if (m.empty()) throw SceneError("cannot read raster '" + path + "'");
  raster::Image img(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < m.cols; ++x) img.set(x, y, raster::Rgb{row[x][2], row[x][1], row[x][0]});
  }
  return img;
}

namespace {

cv::Mat to_mat(const raster::Image& img) {
  cv::Mat m(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) {
      const auto c = img.at(x, y);
      row[x] = cv::Vec3b(c.b, c.g, c.r);
    }
  }
  return m;
}

}  // namespace

void write_png(const raster::Image& img, const std::string& path) {
  if (!cv::imwrite(path, to_mat(img))) throw SceneError("cannot write '" + path + "'");
}

std::vector<unsigned char> encode_png(const raster::Image& img) {
  std::vector<unsigned char> buf;
  if (!cv::imencode(".png", to_mat(img), buf)) throw SceneError("png encoding failed");
  return buf;
}

}  // namespace zt::scene
