#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mad/core_types.hpp"

namespace mad {

struct TrackerConfig {
  double iou_threshold = 0.3;
  int max_gap = 2;
};

struct Detection {
  std::optional<int> agent_id;  // identity from the pose source, if known
  AgentClass cls = AgentClass::kCar;
  BBox box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct FrameDetections {
  int frame = 0;
  std::vector<Detection> detections;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

// Axis-aligned box over the keypoints with visible=true and confidence >=
// min_confidence. Lane lines and agents with fewer than two qualifying
// keypoints produce no box.
std::vector<FrameDetections> bboxes_from_skeletons(const PoseVideo& video, double min_confidence);

// Detections carrying an agent_id are grouped by identity (track_id =
// agent_id). The rest are associated greedily: for each frame, candidate
// (track, detection) pairs against each live track's latest box are accepted
// in descending IoU while IoU >= iou_threshold; a track stays live while the
// frame gap since its last entry is <= max_gap + 1. Unmatched detections
// open new tracks numbered after the largest agent id. Tracks are returned in
// ascending track_id.
std::vector<Track> track(const std::vector<FrameDetections>& detections, const TrackerConfig& cfg);

// All tracks when |tracks| <= max_n, otherwise the first max_n indices of a
// seeded Fisher-Yates permutation, returned in input order.
std::vector<Track> select_tracks(const std::vector<Track>& tracks, std::size_t max_n,
                                 std::uint64_t seed);

// Fixed palette for track outlines; track k uses entry k mod size.
const std::vector<Rgb>& track_palette();

inline constexpr int kTrackOutlinePx = 2;

std::vector<FrameImage> render_track_video(const std::vector<Track>& tracks, int width, int height,
                                           double fps, int frame_count, int jobs = 1);

}  // namespace mad
