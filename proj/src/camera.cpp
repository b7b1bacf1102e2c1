#include "mad/camera.hpp"

#include <cmath>

namespace mad::camera {

std::optional<Eigen::Vector2d> project(const CameraPose& pose, const CameraIntrinsics& k,
                                       const Eigen::Vector3d& world) {
  const Eigen::Vector3d c = pose.orientation.conjugate() * (world - pose.position);
  if (c.z() <= kNearPlane) return std::nullopt;
  const double f = k.focal_px();
  return Eigen::Vector2d(f * c.x() / c.z() + k.cx(), f * c.y() / c.z() + k.cy());
}

Eigen::Vector3d ray_direction(const CameraPose& pose, const CameraIntrinsics& k, double u,
                              double v) {
  const double f = k.focal_px();
  const Eigen::Vector3d cam((u - k.cx()) / f, (v - k.cy()) / f, 1.0);
  return (pose.orientation * cam).normalized();
}

Eigen::Quaterniond from_heading(double heading_rad) {
  // Rotation by -heading about +y (down) == rotation by +heading about up.
  return Eigen::Quaterniond(Eigen::AngleAxisd(-heading_rad, Eigen::Vector3d::UnitY()));
}

double heading_of(const Eigen::Quaterniond& q) {
  const Eigen::Vector3d forward = q * Eigen::Vector3d::UnitZ();
  return std::atan2(-forward.x(), forward.z());
}

}  // namespace mad::camera
