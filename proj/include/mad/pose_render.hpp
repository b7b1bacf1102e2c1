#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mad/core_types.hpp"

namespace mad {

struct RenderConfig {
  int line_width = 2;
  int joint_radius = 3;
  double min_confidence = 0.3;
};

// Per-frame bit grid; true marks a non-black pixel.
struct ForegroundMask {
  int width = 0;
  int height = 0;
  int frames = 0;
  std::vector<std::uint8_t> bits;  // frame-major, then row-major

  bool at(int f, int x, int y) const {
    return bits[(static_cast<std::size_t>(f) * height + y) * width + x] != 0;
  }
  std::size_t count() const;

  friend bool operator==(const ForegroundMask&, const ForegroundMask&) = default;
};

// Renders every frame on black: per agent, edges in the class edge color then
// joints in the class joint color, agents in frame order (later overdraw
// earlier). Keypoints that are not visible or below min_confidence are
// skipped together with their edges.
FrameImage rasterize_pose_frame(const PoseFrame& frame, int width, int height,
                                const SkeletonSchema& schema, const RenderConfig& cfg);

std::vector<FrameImage> rasterize_pose_video(const PoseVideo& video, const SkeletonSchema& schema,
                                             const RenderConfig& cfg, int jobs = 1);

ForegroundMask foreground_mask(std::span<const FrameImage> frames);

}  // namespace mad
