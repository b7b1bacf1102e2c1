#pragma once

// Deterministic synthetic driving scenes used as fixtures: analytic ego
// kinematics, coarse 3D agent templates projected through the pinhole model,
// and identity tracks derived from the projected skeletons.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mad/core_types.hpp"

namespace mad {

enum class ScenarioKind { kStraightRoad, kLeftTurn, kPedestrianCrossing };

std::string_view to_string(ScenarioKind kind);
std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s);

struct Scenario {
  ScenarioKind kind = ScenarioKind::kStraightRoad;
  double ego_speed = 10.0;  // m/s
  double duration = 5.0;    // s
  double fps = 24.0;
  std::uint64_t seed = 0;
  double yaw_rate = 0.3;  // rad/s, positive = left; LeftTurn only
};

struct SyntheticScene {
  PoseVideo poses;
  CameraTrajectory trajectory;
  std::vector<Track> tracks;
  // PedestrianCrossing only: world z of the crosswalk and the pedestrian's
  // agent id.
  std::optional<double> crossing_z;
  std::optional<int> pedestrian_id;
};

inline constexpr double kCameraHeight = 1.5;  // ground plane is world y = +1.5
inline constexpr double kLaneWidth = 3.5;

// Pedestrian crossing path: lateral offset runs from -kCrossingHalfWidth to
// +kCrossingHalfWidth across the road.
inline constexpr double kCrossingHalfWidth = 6.0;
inline constexpr double kPedestrianSpeed = 1.4;

// Local-frame templates (x right, y down, z forward, origin on the ground at
// the agent centre), in schema keypoint order.
const std::array<Eigen::Vector3d, 24>& car_template();
const std::array<Eigen::Vector3d, 17>& pedestrian_template();

// Number of poses: round(duration * fps) + 1, so the last pose sits at t =
// duration.
int scenario_frame_count(const Scenario& s);

// Analytic ego pose at time t.
CameraPose ego_pose(const Scenario& s, double t);

ValidationReport validate(const Scenario& s);

SyntheticScene generate_scene(const Scenario& s, const CameraIntrinsics& intrinsics);

}  // namespace mad
