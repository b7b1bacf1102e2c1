#include "mad/ego_render.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mad/camera.hpp"
#include "mad/error.hpp"
#include "mad/parallel.hpp"
#include "mad/raster.hpp"
#include "mad/rng.hpp"
#include "mad/serialize.hpp"

namespace mad {

Aabb default_particle_bounds(const CameraTrajectory& traj, double margin) {
  if (traj.poses.empty()) throw Error(ErrorKind::kEmptyInput, "trajectory has no poses");
  Eigen::Vector3d lo = traj.poses[0].position;
  Eigen::Vector3d hi = lo;
  for (const CameraPose& p : traj.poses) {
    lo = lo.cwiseMin(p.position);
    hi = hi.cwiseMax(p.position);
  }
  Aabb box;
  box.min = {lo.x() - margin, lo.y() - 10.0, lo.z() - margin};
  box.max = {hi.x() + margin, hi.y() + 1.5, hi.z() + margin};
  return box;
}

ValidationReport validate(const EgoRenderConfig& cfg) {
  ValidationReport r;
  const auto& sky = cfg.skybox;
  if (sky.cells_longitude < 2 || sky.cells_latitude < 2) {
    r.push_back({"cell counts", std::to_string(sky.cells_longitude) + "x" +
                                    std::to_string(sky.cells_latitude)});
  }
  if (sky.palette.size() < 2) r.push_back({"palette size", std::to_string(sky.palette.size())});
  for (std::size_t i = 0; i < sky.palette.size(); ++i) {
    for (std::size_t j = i + 1; j < sky.palette.size(); ++j) {
      if (sky.palette[i] == sky.palette[j]) {
        r.push_back({"distinct palette", std::to_string(i) + " == " + std::to_string(j)});
      }
    }
  }
  const auto& pf = cfg.particles;
  if (!(pf.density >= 0.0)) r.push_back({"density", std::to_string(pf.density)});
  if (!((pf.bounds.max - pf.bounds.min).array() > 0.0).all()) {
    r.push_back({"bounds", "degenerate particle bounds"});
  }
  if (pf.particle_radius_px < 0) r.push_back({"particle radius", ""});
  return r;
}

std::vector<Eigen::Vector3d> particle_positions(const ParticleField& field) {
  std::vector<Eigen::Vector3d> points;
  if (!(field.density > 0.0)) return points;
  const Eigen::Vector3d extent = field.bounds.max - field.bounds.min;
  if (!(extent.array() > 0.0).all()) return points;
  const auto count = static_cast<std::size_t>(std::llround(field.density * extent.prod()));
  const CounterRng rng(field.seed);
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Vector3d u(rng.uniform(3 * i), rng.uniform(3 * i + 1), rng.uniform(3 * i + 2));
    points.push_back(field.bounds.min + extent.cwiseProduct(u));
  }
  return points;
}

int skybox_palette_index(const Eigen::Vector3d& dir, const SkyboxConfig& cfg) {
  const double lon = std::atan2(dir.x(), dir.z());
  const double lat = std::atan2(-dir.y(), std::hypot(dir.x(), dir.z()));
  const double dlon = 2.0 * std::numbers::pi / cfg.cells_longitude;
  const double dlat = std::numbers::pi / cfg.cells_latitude;
  const long k = static_cast<long>(std::floor(lon / dlon)) + static_cast<long>(std::floor(lat / dlat));
  const long n = static_cast<long>(cfg.palette.size());
  return static_cast<int>(((k % n) + n) % n);
}

FrameImage render_ego_frame(const CameraPose& pose, const CameraIntrinsics& intrinsics,
                            const EgoRenderConfig& cfg,
                            const std::vector<Eigen::Vector3d>& particles) {
  FrameImage img(intrinsics.width, intrinsics.height);
  const Eigen::Matrix3d rot = pose.orientation.toRotationMatrix();
  const double f = intrinsics.focal_px();
  const double cx = intrinsics.cx();
  const double cy = intrinsics.cy();
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const Eigen::Vector3d cam((u + 0.5 - cx) / f, (v + 0.5 - cy) / f, 1.0);
      const Eigen::Vector3d dir = rot * cam;
      img.set(u, v, cfg.skybox.palette[skybox_palette_index(dir, cfg.skybox)]);
    }
  }
  const int r = cfg.particles.particle_radius_px;
  for (const Eigen::Vector3d& p : particles) {
    auto px = camera::project(pose, intrinsics, p);
    if (!px) continue;
    const double x = std::floor(px->x());
    const double y = std::floor(px->y());
    if (x < -r - 1 || y < -r - 1 || x > img.width + r || y > img.height + r) continue;
    raster::fill_disc(img, static_cast<int>(x), static_cast<int>(y), r, cfg.particles.color);
  }
  return img;
}

std::vector<FrameImage> render_ego_video(const CameraTrajectory& traj, const EgoRenderConfig& cfg,
                                         int jobs) {
  if (traj.poses.empty()) throw Error(ErrorKind::kEmptyInput, "trajectory has no poses");
  if (auto report = validate(traj); !report.empty()) {
    throw Error(ErrorKind::kInvalidInput, "invalid trajectory: " + report.front().code + " " +
                                              report.front().detail);
  }
  ValidationReport cfg_report = validate(cfg);
  // Bounds only matter when particles are requested.
  if (!(cfg.particles.density > 0.0)) {
    std::erase_if(cfg_report, [](const Violation& v) { return v.code == "bounds"; });
  }
  if (!cfg_report.empty()) {
    throw Error(ErrorKind::kConfig, "invalid ego render config: " + cfg_report.front().code +
                                        " " + cfg_report.front().detail);
  }
  const auto particles = particle_positions(cfg.particles);
  std::vector<FrameImage> frames(traj.poses.size());
  parallel_for(traj.poses.size(), jobs, [&](std::size_t i) {
    frames[i] = render_ego_frame(traj.poses[i], traj.intrinsics, cfg, particles);
  });
  return frames;
}

void to_json(nlohmann::json& j, const EgoRenderConfig& cfg) {
  const auto& pf = cfg.particles;
  j = nlohmann::json{
      {"skybox",
       {{"cells_longitude", cfg.skybox.cells_longitude},
        {"cells_latitude", cfg.skybox.cells_latitude},
        {"palette", cfg.skybox.palette}}},
      {"particles",
       {{"seed", pf.seed},
        {"density", pf.density},
        {"bounds",
         {{"min", {pf.bounds.min.x(), pf.bounds.min.y(), pf.bounds.min.z()}},
          {"max", {pf.bounds.max.x(), pf.bounds.max.y(), pf.bounds.max.z()}}}},
        {"radius_px", pf.particle_radius_px},
        {"color", pf.color}}}};
}

void from_json(const nlohmann::json& j, EgoRenderConfig& cfg) {
  if (auto it = j.find("skybox"); it != j.end()) {
    cfg.skybox.cells_longitude = it->value("cells_longitude", cfg.skybox.cells_longitude);
    cfg.skybox.cells_latitude = it->value("cells_latitude", cfg.skybox.cells_latitude);
    if (it->contains("palette")) it->at("palette").get_to(cfg.skybox.palette);
  }
  if (auto it = j.find("particles"); it != j.end()) {
    auto& pf = cfg.particles;
    pf.seed = it->value("seed", pf.seed);
    pf.density = it->value("density", pf.density);
    pf.particle_radius_px = it->value("radius_px", pf.particle_radius_px);
    if (it->contains("color")) it->at("color").get_to(pf.color);
    if (auto b = it->find("bounds"); b != it->end()) {
      const auto& mn = b->at("min");
      const auto& mx = b->at("max");
      pf.bounds.min = {mn.at(0).get<double>(), mn.at(1).get<double>(), mn.at(2).get<double>()};
      pf.bounds.max = {mx.at(0).get<double>(), mx.at(1).get<double>(), mx.at(2).get<double>()};
    }
  }
}

}  // namespace mad
