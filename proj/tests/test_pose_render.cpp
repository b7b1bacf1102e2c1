#include <doctest.h>

#include <cstdlib>
#include <set>

#include "mad/error.hpp"
#include "mad/pose_render.hpp"
#include "mad/raster.hpp"
#include "mad/rng.hpp"
#include "test_util.hpp"

using namespace mad;
using mad::test::count_color;
using mad::test::kp;
using mad::test::non_black;

namespace {

// Two-keypoint, one-edge schema for the pedestrian class.
SkeletonSchema two_point_schema() {
  SkeletonSchema s;
  s.classes[AgentClass::kPedestrian] = {{"a", "b"}, {{0, 1}}, {0, 255, 0}, {0, 200, 100}};
  s.classes[AgentClass::kCar] = {{"a", "b"}, {{0, 1}}, {255, 0, 0}, {255, 128, 0}};
  return s;
}

PoseVideo one_frame(std::vector<AgentSkeleton> agents, int w = 32, int h = 32) {
  return PoseVideo{w, h, 24.0, {{0, std::move(agents)}}};
}

const RenderConfig kThin{1, 0, 0.3};

}  // namespace

TEST_CASE("empty video renders black frames") {
  PoseVideo v{16, 8, 24.0, {{0, {}}, {1, {}}}};
  const auto frames = rasterize_pose_video(v, SkeletonSchema::make_default(), RenderConfig{});
  REQUIRE(frames.size() == 2);
  for (const auto& f : frames) CHECK(non_black(f) == 0);
}

TEST_CASE("vertical edge of one pixel width covers exactly 11 pixels") {
  const auto schema = two_point_schema();
  const auto frames = rasterize_pose_video(
      one_frame({{1, AgentClass::kPedestrian, {kp(10, 10), kp(10, 20)}}}), schema, kThin);
  const FrameImage& img = frames.at(0);
  CHECK(non_black(img) == 11);
  for (int y = 10; y <= 20; ++y) CHECK_FALSE(img.at(10, y).is_black());
  // Joints (radius 0) overdraw the edge endpoints in the joint color.
  CHECK(img.at(10, 10) == Rgb{0, 255, 0});
  CHECK(img.at(10, 20) == Rgb{0, 255, 0});
  for (int y = 11; y <= 19; ++y) CHECK(img.at(10, y) == Rgb{0, 200, 100});

  const ForegroundMask m = foreground_mask(frames);
  CHECK(m.count() == 11);
}

TEST_CASE("invisible or low-confidence keypoints drop their edges") {
  const auto schema = two_point_schema();
  const auto hidden = rasterize_pose_video(
      one_frame({{1, AgentClass::kPedestrian, {kp(10, 10), kp(10, 20, 1.0, false)}}}), schema, kThin);
  const auto absent = rasterize_pose_video(
      one_frame({{1, AgentClass::kPedestrian, {kp(10, 10), kp(10, 20, 0.0, false)}}}), schema, kThin);
  const auto weak = rasterize_pose_video(
      one_frame({{1, AgentClass::kPedestrian, {kp(10, 10), kp(10, 20, 0.29)}}}), schema, kThin);
  CHECK(hidden == absent);
  CHECK(weak == absent);
  CHECK(non_black(hidden.at(0)) == 1);
}

TEST_CASE("drawn pixels use exactly the schema colors") {
  const auto schema = SkeletonSchema::make_default();
  const auto& ped = *schema.find(AgentClass::kPedestrian);
  AgentSkeleton a{1, AgentClass::kPedestrian, {}};
  for (std::size_t i = 0; i < ped.keypoint_names.size(); ++i) {
    a.keypoints.push_back(kp(20 + 3.3 * (i % 5), 10 + 4.1 * i, 0.9));
  }
  const auto img = rasterize_pose_video(one_frame({a}, 64, 96), schema, RenderConfig{}).at(0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Rgb c = img.at(x, y);
      CHECK((c.is_black() || c == ped.joint_color || c == ped.edge_color));
    }
  }
  CHECK(count_color(img, ped.joint_color) > 0);
  CHECK(count_color(img, ped.edge_color) > 0);
}

TEST_CASE("later agents overdraw earlier ones and never erase pixels") {
  const auto schema = two_point_schema();
  const AgentSkeleton car{1, AgentClass::kCar, {kp(5, 16), kp(26, 16)}};
  const AgentSkeleton ped{2, AgentClass::kPedestrian, {kp(16, 5), kp(16, 26)}};
  const auto only_car = rasterize_pose_video(one_frame({car}), schema, RenderConfig{}).at(0);
  const auto both = rasterize_pose_video(one_frame({car, ped}), schema, RenderConfig{}).at(0);
  CHECK(both.at(16, 16) == Rgb{0, 200, 100});
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      if (!only_car.at(x, y).is_black()) CHECK_FALSE(both.at(x, y).is_black());
    }
  }
}

TEST_CASE("keypoints far outside the canvas are clipped safely") {
  const auto schema = two_point_schema();
  const auto frames = rasterize_pose_video(
      one_frame({{1, AgentClass::kPedestrian, {kp(-1e7, 16), kp(1e7, 16)}}}), schema, RenderConfig{2, 3, 0.3});
  const FrameImage& img = frames.at(0);
  // The in-canvas portion is a full-width two-pixel band.
  CHECK(non_black(img) == 2 * 32);
  const auto none = rasterize_pose_video(
      one_frame({{1, AgentClass::kPedestrian, {kp(-500, -500), kp(-400, -300)}}}), schema, RenderConfig{});
  CHECK(non_black(none.at(0)) == 0);
}

TEST_CASE("rasterization is deterministic across job counts") {
  const auto schema = SkeletonSchema::make_default();
  const auto& lane = *schema.find(AgentClass::kLaneLine);
  PoseVideo v{48, 32, 24.0, {}};
  const CounterRng rng(3);
  std::uint64_t c = 0;
  for (int f = 0; f < 12; ++f) {
    AgentSkeleton a{1, AgentClass::kLaneLine, {}};
    for (std::size_t i = 0; i < lane.keypoint_names.size(); ++i) {
      a.keypoints.push_back(kp(-10 + 70 * rng.uniform(c++), -10 + 50 * rng.uniform(c++), rng.uniform(c++)));
    }
    v.frames.push_back({f, {a}});
  }
  const auto one = rasterize_pose_video(v, schema, RenderConfig{}, 1);
  const auto four = rasterize_pose_video(v, schema, RenderConfig{}, 4);
  CHECK(one == four);
  CHECK(rasterize_pose_video(v, schema, RenderConfig{}, 1) == one);
}

TEST_CASE("rasterize errors") {
  const auto schema = two_point_schema();
  CHECK_THROWS_AS(rasterize_pose_video(one_frame({{1, AgentClass::kLaneLine, {kp(0, 0), kp(1, 1)}}}), schema,
                                       RenderConfig{}),
                  Error);
  try {
    rasterize_pose_video(one_frame({{1, AgentClass::kLaneLine, {kp(0, 0), kp(1, 1)}}}), schema, RenderConfig{});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSchemaMissing);
  }
  try {
    rasterize_pose_video(one_frame({{1, AgentClass::kCar, {kp(0, 0)}}}), schema, RenderConfig{});
    FAIL("expected keypoint count error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidInput);
  }
  PoseVideo gap{8, 8, 24.0, {{0, {}}, {2, {}}}};
  CHECK_THROWS_AS(rasterize_pose_video(gap, schema, RenderConfig{}), Error);
}

TEST_CASE("foreground mask: empty input, shape mismatch, union, idempotence") {
  CHECK_THROWS_AS(foreground_mask({}), Error);
  std::vector<FrameImage> mixed = {FrameImage(4, 4), FrameImage(5, 4)};
  CHECK_THROWS_AS(foreground_mask(mixed), Error);

  const auto schema = two_point_schema();
  const AgentSkeleton a{1, AgentClass::kCar, {kp(2, 2), kp(20, 9)}};
  const AgentSkeleton b{2, AgentClass::kPedestrian, {kp(30, 1), kp(4, 28)}};
  const auto ra = rasterize_pose_video(one_frame({a}), schema, RenderConfig{});
  const auto rb = rasterize_pose_video(one_frame({b}), schema, RenderConfig{});
  const auto rab = rasterize_pose_video(one_frame({a, b}), schema, RenderConfig{});
  const auto ma = foreground_mask(ra), mb = foreground_mask(rb), mab = foreground_mask(rab);
  for (std::size_t i = 0; i < mab.bits.size(); ++i) {
    CHECK(mab.bits[i] == (ma.bits[i] | mb.bits[i]));
  }
  CHECK(foreground_mask(rab) == mab);
  const std::vector<FrameImage> black = {FrameImage(6, 6)};
  CHECK(foreground_mask(black).count() == 0);
}

TEST_CASE("bresenham covers max(|dx|,|dy|)+1 connected pixels") {
  const CounterRng rng(11);
  std::uint64_t c = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int x0 = static_cast<int>(rng.below(40, c)) - 20, y0 = static_cast<int>(rng.below(40, c)) - 20;
    const int x1 = static_cast<int>(rng.below(40, c)) - 20, y1 = static_cast<int>(rng.below(40, c)) - 20;
    std::vector<std::pair<int, int>> pts;
    raster::bresenham(x0, y0, x1, y1, [&](int x, int y) { pts.emplace_back(x, y); });
    REQUIRE(pts.size() == static_cast<std::size_t>(std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1));
    CHECK(pts.front() == std::pair(x0, y0));
    CHECK(pts.back() == std::pair(x1, y1));
    for (std::size_t i = 1; i < pts.size(); ++i) {
      CHECK(std::abs(pts[i].first - pts[i - 1].first) <= 1);
      CHECK(std::abs(pts[i].second - pts[i - 1].second) <= 1);
    }
  }
}

TEST_CASE("square stamp and disc footprints") {
  FrameImage img(20, 20);
  raster::stamp_square(img, 10, 10, 2, {1, 1, 1});
  CHECK(non_black(img) == 4);
  CHECK_FALSE(img.at(11, 11).is_black());
  FrameImage disc(20, 20);
  raster::fill_disc(disc, 10, 10, 3, {1, 1, 1});
  std::size_t expect = 0;
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) expect += dx * dx + dy * dy <= 9;
  }
  CHECK(non_black(disc) == expect);
  FrameImage corner(4, 4);
  raster::fill_disc(corner, 0, 0, 5, {1, 1, 1});
  CHECK(non_black(corner) > 0);
}
