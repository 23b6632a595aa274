#include <doctest.h>

#include "support.hpp"
#include "zoomtrace/geometry.hpp"

using namespace zt;
using namespace zt::geo;

TEST_CASE("to_relative maps roi corners and midpoints") {
  CHECK(to_relative({300, 400}, {"g", 100, 200, 400, 400}) == NormPoint{500, 500});
  CHECK(to_relative({0, 0}, {"g", 0, 0, 8000, 8000}) == NormPoint{0, 0});
  CHECK(to_relative({8000, 8000}, {"g", 0, 0, 8000, 8000}) == NormPoint{1000, 1000});
  CHECK_THROWS_AS(to_relative({8001, 5}, {"g", 0, 0, 8000, 8000}), GeometryError);
}

TEST_CASE("to_relative rounds half away from zero") {
  // 0.5 units exactly: 1/2000 of a 2000 px frame.
  CHECK(to_relative({1, 1}, {"g", 0, 0, 2000, 2000}) == NormPoint{1, 1});
  CHECK(to_relative({3, 0}, {"g", 0, 0, 2000, 2000}).u == 2);
}

TEST_CASE("box_to_relative examples") {
  CHECK(box_to_relative({0, 0, 1000, 1000}, {"g", 0, 0, 1000, 1000}) == NormBox{0, 0, 1000, 1000});
  CHECK(box_to_relative({1500, 1500, 2500, 2500}, {"g", 1000, 1000, 2000, 2000}) == NormBox{250, 250, 750, 750});
  CHECK(box_to_relative({1500, 1500, 2500, 2500}, {"g", 0, 0, 10000, 10000}) == NormBox{150, 150, 250, 250});
}

TEST_CASE("collapsed boxes widen by one unit") {
  const auto b = box_to_relative({10, 10, 10.2, 10.2}, {"g", 0, 0, 10000, 10000});
  CHECK(b.x2 == b.x1 + 1);
  CHECK(b.y2 == b.y1 + 1);
  const auto edge = box_to_relative({9999.9, 0, 10000, 5000}, {"g", 0, 0, 10000, 10000});
  CHECK(edge.x2 == 1000);
  CHECK(edge.x1 < edge.x2);
}

TEST_CASE("to_pixels inverse examples") {
  CHECK(to_pixels(NormPoint{500, 500}, {"g", 0, 0, 8000, 8000}) == PixelPoint{4000, 4000});
  CHECK(to_pixels(NormPoint{500, 500}, {"g", 100, 200, 400, 400}) == PixelPoint{300, 400});
  CHECK(to_pixels(NormPoint{1000, 1000}, {"g", 0, 0, 1, 1}) == PixelPoint{1, 1});
}

TEST_CASE("compose_to_global examples") {
  const auto g = FrameChain::global(10000, 10000);
  CHECK(compose_to_global({150, 150, 250, 250}, g) == NormBox{150, 150, 250, 250});
  const auto c = g.child({"", 1000, 1000, 2000, 2000}, "v1");
  CHECK(compose_to_global({250, 250, 750, 750}, c) == NormBox{150, 150, 250, 250});
}

TEST_CASE("broken chains are rejected") {
  auto c = FrameChain::global(1000, 1000).child({"", 0, 0, 500, 500}, "v1");
  c.links[1].region.frame_id = "v7";
  CHECK_THROWS_AS(c.check(), GeometryError);
  CHECK_THROWS_AS(compose_to_global({0, 0, 10, 10}, c), GeometryError);
}

TEST_CASE("iou examples") {
  CHECK(iou(NormBox{0, 0, 100, 100}, NormBox{0, 0, 100, 100}) == 1.0);
  CHECK(iou(NormBox{0, 0, 10, 10}, NormBox{20, 20, 30, 30}) == 0.0);
  CHECK(iou(NormBox{0, 0, 10, 10}, NormBox{5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(iou(NormBox{5, 5, 5, 9}, NormBox{0, 0, 10, 10}) == 0.0);
}

TEST_CASE("NormBox validation") {
  CHECK(NormBox::try_make({0, 0, 1000, 1000}).has_value());
  CHECK_FALSE(NormBox::try_make({0, 0, 1200, 900}).has_value());
  CHECK_FALSE(NormBox::try_make({10, 0, 5, 900}).has_value());
  CHECK_THROWS_AS(NormBox::make(-1, 0, 5, 5), GeometryError);
}

TEST_CASE("property: round-trip bound on random rois") {
  testing::Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double w = testing::uniform_real(rng, 1, 50000), h = testing::uniform_real(rng, 1, 50000);
    const FrameBox roi{"g", testing::uniform_real(rng, 0, 1e5), testing::uniform_real(rng, 0, 1e5), w, h};
    const PixelPoint p{roi.x_min + testing::uniform_real(rng, 0, w), roi.y_min + testing::uniform_real(rng, 0, h)};
    const auto back = to_pixels(to_relative(p, roi), roi);
    CHECK(std::abs(back.x - p.x) <= w / 2000 + 1e-9);
    CHECK(std::abs(back.y - p.y) <= h / 2000 + 1e-9);
  }
}

TEST_CASE("property: scale invariance on grid-multiple boxes") {
  testing::Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const double unit = static_cast<double>(testing::uniform(rng, 1, 20));
    const FrameBox roi{"g", 0, 0, 1000 * unit, 1000 * unit};
    const auto n = testing::random_box(rng);
    const PixelBox b{n.x1 * unit, n.y1 * unit, n.x2 * unit, n.y2 * unit};
    const double s = static_cast<double>(testing::uniform(rng, 1, 9));
    const FrameBox sroi{"g", 0, 0, roi.width * s, roi.height * s};
    const PixelBox sb{b.x1 * s, b.y1 * s, b.x2 * s, b.y2 * s};
    CHECK(box_to_relative(sb, sroi) == box_to_relative(b, roi));
    CHECK(box_to_relative(b, roi) == n);
  }
}

TEST_CASE("property: iou symmetry and self-iou") {
  testing::Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const auto a = testing::random_box(rng), b = testing::random_box(rng);
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, b) >= 0.0);
    CHECK(iou(a, b) <= 1.0);
  }
}

TEST_CASE("property: depth-1 composition equals the two-step transform") {
  testing::Rng rng(14);
  for (int i = 0; i < 1000; ++i) {
    const double W = static_cast<double>(testing::uniform(rng, 100, 20000));
    const double H = static_cast<double>(testing::uniform(rng, 100, 20000));
    const FrameBox global{kGlobalFrameId, 0, 0, W, H};
    const double x = testing::uniform_real(rng, 0, W - 10), y = testing::uniform_real(rng, 0, H - 10);
    const FrameBox crop{"", x, y, testing::uniform_real(rng, 5, W - x), testing::uniform_real(rng, 5, H - y)};
    const auto chain = FrameChain::global(W, H).child(crop, "v1");
    const auto n = testing::random_box(rng);
    auto p = to_pixels(n, crop);
    CHECK(compose_to_global(n, chain) == box_to_relative(p, global));
  }
}

TEST_CASE("property: compose_real matches the pixel oracle") {
  testing::Rng rng(15);
  for (int i = 0; i < 500; ++i) {
    const auto parent = testing::random_box(rng, 5);
    const auto local = testing::random_box(rng);
    const auto got = compose_real(to_real(local), to_real(parent));
    const auto want = testing::brute_compose(1000, 1000,
                                             {{double(parent.x1), double(parent.y1), double(parent.x2),
                                               double(parent.y2)}},
                                             {double(local.x1), double(local.y1), double(local.x2), double(local.y2)});
    CHECK(got.x1 == doctest::Approx(want[0]).epsilon(1e-12));
    CHECK(got.y2 == doctest::Approx(want[3]).epsilon(1e-12));
  }
}

TEST_CASE("contains with tolerance") {
  CHECK(contains(RealBox{0, 0, 100, 100}, RealBox{10, 10, 20, 20}));
  CHECK_FALSE(contains(RealBox{0, 0, 100, 100}, RealBox{10, 10, 100.5, 20}));
  CHECK(contains(RealBox{0, 0, 100, 100}, RealBox{10, 10, 100.5, 20}, 1.0));
}
