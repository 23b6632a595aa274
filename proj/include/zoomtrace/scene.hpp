#pragma once

// Scenes: a raster loaded from disk or a synthetic canvas of labeled
// rectangles, plus the seeded synthetic generator and its text format.

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "zoomtrace/annotation.hpp"
#include "zoomtrace/raster.hpp"

namespace zt::scene {

struct SceneError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Primitive {
  std::string label;
  long long x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // half-open canvas pixels
  bool operator==(const Primitive&) const = default;
};

struct SyntheticSpec {
  long long width = 8192;
  long long height = 8192;
  std::uint64_t seed = 0;
  std::map<std::string, raster::Rgb> palette;
  std::vector<Primitive> primitives;
  bool operator==(const SyntheticSpec&) const = default;
};

// Built-in label colours; all saturated, never gray.
const std::map<std::string, raster::Rgb>& default_palette();

// Line format:
//   canvas <width> <height>
//   seed <n>
//   color <label> <r> <g> <b>
//   rect <label> <x1> <y1> <x2> <y2>
// Blank lines and '#' comments are ignored.
std::string to_text(const SyntheticSpec& spec);
SyntheticSpec parse_spec(const std::string& text);

struct GenParams {
  long long width = 8192;
  long long height = 8192;
  std::uint64_t seed = 1;
  int count = 12;  // disjoint objects, straddlers excluded
  int straddle = 0;  // objects placed across the vertical midline
  long long min_size = 200;
  long long max_size = 480;
  long long min_gap = 32;
  std::vector<std::string> labels{"ship"};
  int max_attempts = 20000;
};

// Deterministic per params; throws SceneError when packing fails.
SyntheticSpec gen_scene(const GenParams& p);

class Scene {
 public:
  static Scene synthetic(SyntheticSpec spec, std::string source = "synthetic");
  static Scene from_raster(raster::Image image, std::string source);
  // Reads a synthetic spec (.scene/.txt) or a PNG/JPEG/TIFF raster.
  static Scene open(const std::string& path);

  long long width() const { return width_; }
  long long height() const { return height_; }
  bool is_synthetic() const { return spec_ != nullptr; }
  const std::string& source() const { return source_; }
  const SyntheticSpec* spec() const { return spec_.get(); }
  const std::vector<LabeledBox>& ground_truth() const { return truth_; }
  const std::map<std::string, raster::Rgb>& palette() const { return palette_; }

  // Nearest-neighbour for synthetic scenes, area averaging for rasters.
  raster::Image render(const raster::IRect& region, int out_w, int out_h) const;

  Annotation annotation(traj::TaskKind task, const std::string& target_label = "", const std::string& id = "") const;

 private:
  std::string source_;
  long long width_ = 0, height_ = 0;
  std::shared_ptr<const SyntheticSpec> spec_;
  std::shared_ptr<const raster::Canvas> canvas_;
  std::shared_ptr<const raster::Image> image_;
  std::vector<LabeledBox> truth_;
  std::map<std::string, raster::Rgb> palette_;
};

// Raster file I/O through the image codec library.
raster::Image read_image(const std::string& path);
void write_png(const raster::Image& img, const std::string& path);
std::vector<unsigned char> encode_png(const raster::Image& img);

}  // namespace zt::scene
