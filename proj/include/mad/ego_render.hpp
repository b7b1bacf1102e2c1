#pragma once

// Ego-motion conditioning video: a direction-only checkerboard skybox encodes
// camera rotation and world-fixed dust particles encode translation through
// parallax.

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mad/core_types.hpp"

namespace mad {

struct SkyboxConfig {
  int cells_longitude = 24;
  int cells_latitude = 12;
  std::vector<Rgb> palette = {{200, 60, 60}, {60, 160, 60}, {60, 90, 200}, {220, 200, 60}};
};

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  double volume() const { return (max - min).prod(); }
};

struct ParticleField {
  std::uint64_t seed = 0;
  double density = 0.02;  // particles per cubic meter
  Aabb bounds;
  int particle_radius_px = 2;
  Rgb color = {255, 255, 255};
};

struct EgoRenderConfig {
  SkyboxConfig skybox;
  ParticleField particles;
};

// Bounds covering every pose of `traj` grown by `margin` meters horizontally;
// vertically from 10 m above the highest camera to the ground 1.5 m below the
// lowest one (y points down).
Aabb default_particle_bounds(const CameraTrajectory& traj, double margin = 30.0);

// Empty report iff the config is usable.
ValidationReport validate(const EgoRenderConfig& cfg);

// round(density * volume) points, uniform in the bounds; point i uses
// counters 3i..3i+2 of the stream keyed by `seed`.
std::vector<Eigen::Vector3d> particle_positions(const ParticleField& field);

// Palette index of the checkerboard cell containing world direction `dir`:
// (floor(lon / dlon) + floor(lat / dlat)) mod |palette| with lon = atan2(x, z)
// in (-pi, pi] and lat (positive up) in [-pi/2, pi/2].
int skybox_palette_index(const Eigen::Vector3d& dir, const SkyboxConfig& cfg);

FrameImage render_ego_frame(const CameraPose& pose, const CameraIntrinsics& intrinsics,
                            const EgoRenderConfig& cfg,
                            const std::vector<Eigen::Vector3d>& particles);

std::vector<FrameImage> render_ego_video(const CameraTrajectory& traj, const EgoRenderConfig& cfg,
                                         int jobs = 1);

void to_json(nlohmann::json& j, const EgoRenderConfig& cfg);
// Missing keys keep their defaults; a missing "bounds" leaves bounds empty
// (callers fill it from the trajectory).
void from_json(const nlohmann::json& j, EgoRenderConfig& cfg);

}  // namespace mad
