#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mad/core_types.hpp"

namespace mad::camera {

// Points closer than this along the optical axis count as behind the camera.
inline constexpr double kNearPlane = 0.05;

// Pinhole projection of a world point; nullopt when behind the near plane.
// Returned coordinates are continuous pixels (pixel i spans [i, i+1)).
std::optional<Eigen::Vector2d> project(const CameraPose& pose, const CameraIntrinsics& k,
                                       const Eigen::Vector3d& world);

// Unit world-frame direction of the ray through continuous pixel (u, v).
Eigen::Vector3d ray_direction(const CameraPose& pose, const CameraIntrinsics& k, double u,
                              double v);

// Orientation for a heading angle: rotation about the up axis (-y), positive
// heading turns the camera left (towards -x).
Eigen::Quaterniond from_heading(double heading_rad);

// Signed heading of a world-from-camera orientation (inverse of from_heading
// for pure yaw rotations).
double heading_of(const Eigen::Quaterniond& q);

}  // namespace mad::camera
