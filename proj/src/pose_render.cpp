#include "mad/pose_render.hpp"

#include <cmath>
#include <string>

#include "mad/error.hpp"
#include "mad/parallel.hpp"
#include "mad/raster.hpp"

namespace mad {

std::size_t ForegroundMask::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b != 0;
  return n;
}

namespace {

bool drawable(const Keypoint& kp, double min_confidence) {
  return kp.visible && kp.confidence >= min_confidence && std::isfinite(kp.x) &&
         std::isfinite(kp.y);
}

void check_frame(const PoseFrame& frame, const SkeletonSchema& schema) {
  for (const AgentSkeleton& a : frame.agents) {
    const ClassSchema* cs = schema.find(a.cls);
    if (cs == nullptr) {
      throw Error(ErrorKind::kSchemaMissing,
                  "no schema for agent class '" + std::string(to_string(a.cls)) + "'");
    }
    if (a.keypoints.size() != cs->keypoint_names.size()) {
      throw Error(ErrorKind::kInvalidInput,
                  "frame " + std::to_string(frame.frame_index) + " agent " +
                      std::to_string(a.agent_id) + ": expected " +
                      std::to_string(cs->keypoint_names.size()) + " keypoints, got " +
                      std::to_string(a.keypoints.size()));
    }
    const int n = static_cast<int>(cs->keypoint_names.size());
    for (const auto& [i, j] : cs->edges) {
      if (i < 0 || j < 0 || i >= n || j >= n) {
        throw Error(ErrorKind::kConfig, "schema edge index out of range for class '" +
                                            std::string(to_string(a.cls)) + "'");
      }
    }
  }
}

}  // namespace

FrameImage rasterize_pose_frame(const PoseFrame& frame, int width, int height,
                                const SkeletonSchema& schema, const RenderConfig& cfg) {
  if (cfg.line_width < 1 || cfg.joint_radius < 0) {
    throw Error(ErrorKind::kConfig, "line_width must be >= 1 and joint_radius >= 0");
  }
  check_frame(frame, schema);
  FrameImage img(width, height);
  for (const AgentSkeleton& agent : frame.agents) {
    const ClassSchema& cs = *schema.find(agent.cls);
    const auto& kps = agent.keypoints;
    for (const auto& [a, b] : cs.edges) {
      if (!drawable(kps[a], cfg.min_confidence) || !drawable(kps[b], cfg.min_confidence)) continue;
      raster::draw_line(img, kps[a].x, kps[a].y, kps[b].x, kps[b].y, cfg.line_width,
                        cs.edge_color);
    }
    const double reach = cfg.joint_radius + 1.0;
    for (const Keypoint& kp : kps) {
      if (!drawable(kp, cfg.min_confidence)) continue;
      if (kp.x < -reach || kp.y < -reach || kp.x > width + reach || kp.y > height + reach) continue;
      raster::fill_disc(img, raster::snap(kp.x), raster::snap(kp.y), cfg.joint_radius,
                        cs.joint_color);
    }
  }
  return img;
}

std::vector<FrameImage> rasterize_pose_video(const PoseVideo& video, const SkeletonSchema& schema,
                                             const RenderConfig& cfg, int jobs) {
  if (video.width <= 0 || video.height <= 0) {
    throw Error(ErrorKind::kInvalidInput, "pose video must have positive dimensions");
  }
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    if (video.frames[i].frame_index != static_cast<int>(i)) {
      throw Error(ErrorKind::kInvalidInput, "pose video frame indices must run 0,1,2,...");
    }
    check_frame(video.frames[i], schema);
  }
  std::vector<FrameImage> out(video.frames.size());
  parallel_for(video.frames.size(), jobs, [&](std::size_t i) {
    out[i] = rasterize_pose_frame(video.frames[i], video.width, video.height, schema, cfg);
  });
  return out;
}

ForegroundMask foreground_mask(std::span<const FrameImage> frames) {
  if (frames.empty()) throw Error(ErrorKind::kEmptyInput, "foreground_mask needs at least one frame");
  ForegroundMask mask;
  mask.width = frames[0].width;
  mask.height = frames[0].height;
  mask.frames = static_cast<int>(frames.size());
  const std::size_t plane = static_cast<std::size_t>(mask.width) * mask.height;
  mask.bits.assign(plane * frames.size(), 0);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].width != mask.width || frames[f].height != mask.height) {
      throw Error(ErrorKind::kShape, "foreground_mask frames differ in size");
    }
    const auto& px = frames[f].pixels;
    for (std::size_t i = 0; i < plane; ++i) {
      mask.bits[f * plane + i] = (px[3 * i] | px[3 * i + 1] | px[3 * i + 2]) != 0;
    }
  }
  return mask;
}

}  // namespace mad
