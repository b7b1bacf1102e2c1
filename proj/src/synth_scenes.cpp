#include "mad/synth_scenes.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mad/camera.hpp"
#include "mad/error.hpp"
#include "mad/object_control.hpp"
#include "mad/rng.hpp"

namespace mad {

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kStraightRoad: return "straight";
    case ScenarioKind::kLeftTurn: return "left-turn";
    case ScenarioKind::kPedestrianCrossing: return "crossing";
  }
  return "unknown";
}

std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s) {
  if (s == "straight") return ScenarioKind::kStraightRoad;
  if (s == "left-turn") return ScenarioKind::kLeftTurn;
  if (s == "crossing") return ScenarioKind::kPedestrianCrossing;
  return std::nullopt;
}

const std::array<Eigen::Vector3d, 24>& car_template() {
  static const std::array<Eigen::Vector3d, 24> pts = {{
      {-0.9, -0.3, 2.25},  {0.9, -0.3, 2.25},   {0.9, -0.3, -2.25},  {-0.9, -0.3, -2.25},
      {-0.9, -1.0, 2.25},  {0.9, -1.0, 2.25},   {0.9, -1.0, -2.25},  {-0.9, -1.0, -2.25},
      {-0.75, -1.5, 0.8},  {0.75, -1.5, 0.8},   {0.75, -1.5, -1.2},  {-0.75, -1.5, -1.2},
      {-0.9, -0.35, 1.4},  {0.9, -0.35, 1.4},   {0.9, -0.35, -1.4},  {-0.9, -0.35, -1.4},
      {-0.6, -0.7, 2.25},  {0.6, -0.7, 2.25},   {-0.6, -0.8, -2.25}, {0.6, -0.8, -2.25},
      {0.0, -0.5, 2.25},   {0.0, -0.55, -2.25}, {-1.0, -1.05, 0.9},  {1.0, -1.05, 0.9},
  }};
  return pts;
}

const std::array<Eigen::Vector3d, 17>& pedestrian_template() {
  static const std::array<Eigen::Vector3d, 17> pts = {{
      {0.0, -1.60, 0.08},                                           // nose
      {-0.03, -1.64, 0.06},  {0.03, -1.64, 0.06},                   // eyes
      {-0.07, -1.62, 0.0},   {0.07, -1.62, 0.0},                    // ears
      {-0.20, -1.42, 0.0},   {0.20, -1.42, 0.0},                    // shoulders
      {-0.25, -1.12, 0.0},   {0.25, -1.12, 0.0},                    // elbows
      {-0.27, -0.85, 0.0},   {0.27, -0.85, 0.0},                    // wrists
      {-0.12, -0.95, 0.0},   {0.12, -0.95, 0.0},                    // hips
      {-0.12, -0.50, 0.0},   {0.12, -0.50, 0.0},                    // knees
      {-0.12, -0.08, 0.0},   {0.12, -0.08, 0.0},                    // ankles
  }};
  return pts;
}

int scenario_frame_count(const Scenario& s) {
  return static_cast<int>(std::llround(s.duration * s.fps)) + 1;
}

namespace {

constexpr int kLanePoints = SkeletonSchema::kDefaultLanePoints;
constexpr int kLaneIdBase = 1000;
constexpr double kMinYawRate = 1e-12;

// Road centreline shared by the ego and every agent: straight along +z, or
// for LeftTurn a circular arc with curvature yaw_rate / ego_speed.
struct Road {
  double curvature = 0.0;

  Eigen::Vector3d point(double s, double lateral) const {
    const double heading = curvature * s;
    Eigen::Vector3d centre;
    if (std::abs(curvature) < kMinYawRate) {
      centre = {0.0, 0.0, s};
    } else {
      centre = {-(1.0 - std::cos(heading)) / curvature, 0.0, std::sin(heading) / curvature};
    }
    const Eigen::Vector3d right(std::cos(heading), 0.0, std::sin(heading));
    return centre + lateral * right;
  }
  double heading(double s) const { return curvature * s; }
};

Road road_for(const Scenario& s) {
  Road road;
  if (s.kind == ScenarioKind::kLeftTurn && s.ego_speed > 0.0) road.curvature = s.yaw_rate / s.ego_speed;
  return road;
}

struct MovingAgent {
  int id = 0;
  AgentClass cls = AgentClass::kCar;
  double s0 = 0.0;       // arc length at t = 0
  double speed = 0.0;    // along the road
  double lateral = 0.0;  // offset from the centreline, + = right
};

Keypoint project_point(const CameraPose& cam, const CameraIntrinsics& k, const Eigen::Vector3d& w,
                       const std::string& name) {
  Keypoint kp;
  kp.name = name;
  if (auto px = camera::project(cam, k, w)) {
    kp.x = px->x();
    kp.y = px->y();
    kp.confidence = 1.0;
    kp.visible = true;
  } else {
    kp.x = -1.0;
    kp.y = -1.0;
    kp.confidence = 0.0;
    kp.visible = false;
  }
  return kp;
}

bool any_in_canvas(const AgentSkeleton& a, const CameraIntrinsics& k) {
  for (const Keypoint& kp : a.keypoints) {
    if (kp.visible && kp.x >= 0.0 && kp.y >= 0.0 && kp.x < k.width && kp.y < k.height) return true;
  }
  return false;
}

template <std::size_t N>
AgentSkeleton place_template(int id, AgentClass cls, const std::array<Eigen::Vector3d, N>& local,
                             const Eigen::Vector3d& ground_pos, double heading,
                             const CameraPose& cam, const CameraIntrinsics& k,
                             const ClassSchema& schema, double swing_phase = 0.0) {
  AgentSkeleton a{id, cls, {}};
  const Eigen::Quaterniond rot = camera::from_heading(heading);
  for (std::size_t i = 0; i < N; ++i) {
    Eigen::Vector3d p = local[i];
    if (cls == AgentClass::kPedestrian && i >= 13) {
      // Knees and ankles swing opposite per leg.
      const double side = (i % 2 == 1) ? 1.0 : -1.0;
      p.z() += side * (i >= 15 ? 0.25 : 0.12) * std::sin(swing_phase);
    }
    const Eigen::Vector3d world = ground_pos + rot * p;
    a.keypoints.push_back(project_point(cam, k, world, schema.keypoint_names[i]));
  }
  return a;
}

}  // namespace

CameraPose ego_pose(const Scenario& s, double t) {
  CameraPose pose;
  pose.timestamp = t;
  if (s.kind == ScenarioKind::kLeftTurn && std::abs(s.yaw_rate) >= kMinYawRate) {
    const double heading = s.yaw_rate * t;
    const double radius = s.ego_speed / s.yaw_rate;
    pose.position = {-radius * (1.0 - std::cos(heading)), 0.0, radius * std::sin(heading)};
    pose.orientation = camera::from_heading(heading);
  } else {
    pose.position = {0.0, 0.0, s.ego_speed * t};
  }
  return pose;
}

ValidationReport validate(const Scenario& s) {
  ValidationReport r;
  if (!(s.ego_speed >= 0.0)) r.push_back({"speed", std::to_string(s.ego_speed)});
  if (!(s.duration > 0.0)) r.push_back({"duration", std::to_string(s.duration)});
  if (!(s.fps > 0.0)) r.push_back({"fps", std::to_string(s.fps)});
  if (!std::isfinite(s.yaw_rate)) r.push_back({"yaw rate", ""});
  return r;
}

SyntheticScene generate_scene(const Scenario& s, const CameraIntrinsics& intrinsics) {
  if (auto r = validate(s); !r.empty()) {
    throw Error(ErrorKind::kInvalidInput, "invalid scenario: " + r.front().code);
  }
  const SkeletonSchema schema = SkeletonSchema::make_default();
  const ClassSchema& car_schema = *schema.find(AgentClass::kCar);
  const ClassSchema& ped_schema = *schema.find(AgentClass::kPedestrian);
  const ClassSchema& lane_schema = *schema.find(AgentClass::kLaneLine);
  const Road road = road_for(s);
  const CounterRng rng = CounterRng(s.seed).substream(static_cast<std::uint64_t>(s.kind) + 1);
  std::uint64_t draw = 0;
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(draw++); };

  std::vector<MovingAgent> cars;
  const int car_count = s.kind == ScenarioKind::kPedestrianCrossing ? 1 : 2 + static_cast<int>(rng.below(3, draw));
  for (int i = 0; i < car_count; ++i) {
    MovingAgent a;
    a.id = i + 1;
    // Lanes: own lane (0), right lane (+3.5), oncoming/left lane (-3.5).
    const double lanes[3] = {0.0, kLaneWidth, -kLaneWidth};
    a.lateral = lanes[rng.below(3, draw)];
    a.s0 = uniform(15.0, 60.0);
    a.speed = s.ego_speed * uniform(0.6, 1.1);
    cars.push_back(a);
  }

  SyntheticScene scene;
  const int ped_id = car_count + 1;
  double crossing_s = 0.0;
  double crossing_t0 = 0.0;
  if (s.kind == ScenarioKind::kPedestrianCrossing) {
    crossing_s = uniform(20.0, 30.0);
    crossing_t0 = uniform(0.0, 1.0);
    scene.crossing_z = crossing_s;
    scene.pedestrian_id = ped_id;
  }

  const int n = scenario_frame_count(s);
  scene.poses = PoseVideo{intrinsics.width, intrinsics.height, s.fps, {}};
  scene.trajectory.intrinsics = intrinsics;
  const double lane_offsets[3] = {-0.5 * kLaneWidth, 0.5 * kLaneWidth, 1.5 * kLaneWidth};
  for (int f = 0; f < n; ++f) {
    const double t = f / s.fps;
    const CameraPose cam = ego_pose(s, t);
    scene.trajectory.poses.push_back(cam);
    const double ego_s = s.ego_speed * t;

    PoseFrame frame{f, {}};
    for (int l = 0; l < 3; ++l) {
      AgentSkeleton lane{kLaneIdBase + l, AgentClass::kLaneLine, {}};
      for (int k = 0; k < kLanePoints; ++k) {
        Eigen::Vector3d w = road.point(ego_s + 3.0 + 5.0 * k, lane_offsets[l]);
        w.y() = kCameraHeight;
        lane.keypoints.push_back(project_point(cam, intrinsics, w, lane_schema.keypoint_names[k]));
      }
      if (any_in_canvas(lane, intrinsics)) frame.agents.push_back(std::move(lane));
    }
    for (const MovingAgent& c : cars) {
      const double arc = c.s0 + c.speed * t;
      Eigen::Vector3d ground = road.point(arc, c.lateral);
      ground.y() = kCameraHeight;
      auto a = place_template(c.id, AgentClass::kCar, car_template(), ground, road.heading(arc), cam,
                              intrinsics, car_schema);
      if (any_in_canvas(a, intrinsics)) frame.agents.push_back(std::move(a));
    }
    if (s.kind == ScenarioKind::kPedestrianCrossing) {
      const double walked = std::max(0.0, t - crossing_t0) * kPedestrianSpeed;
      const double lateral = std::min(-kCrossingHalfWidth + walked, kCrossingHalfWidth);
      Eigen::Vector3d ground = road.point(crossing_s, lateral);
      ground.y() = kCameraHeight;
      const double phase = 2.0 * std::numbers::pi * 1.8 * std::max(0.0, t - crossing_t0);
      auto a = place_template(ped_id, AgentClass::kPedestrian, pedestrian_template(), ground,
                              road.heading(crossing_s) - 0.5 * std::numbers::pi, cam, intrinsics,
                              ped_schema, phase);
      if (any_in_canvas(a, intrinsics)) frame.agents.push_back(std::move(a));
    }
    scene.poses.frames.push_back(std::move(frame));
  }

  scene.tracks = track(bboxes_from_skeletons(scene.poses, 0.5), TrackerConfig{});
  return scene;
}

}  // namespace mad
