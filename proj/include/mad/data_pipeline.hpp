#pragma once

// Clip dataset preparation: overlapping clip segmentation, object-count
// filtering, leakage-free split sampling, caption ingestion and the JSON
// Lines manifest format.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mad/core_types.hpp"

namespace mad {

enum class Split { kTrain, kVal };

std::string_view to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

struct VideoMeta {
  std::string video_id;
  int frame_count = 0;
  double fps = 24.0;
  int width = 1056;
  int height = 704;
  Split split = Split::kTrain;
};

struct ClipRecord {
  std::string clip_id;
  std::string video_id;
  int start_frame = 0;
  int length = 0;
  double object_score = 0.0;
  std::optional<std::string> caption;
  Split split = Split::kTrain;

  friend bool operator==(const ClipRecord&, const ClipRecord&) = default;
};

struct ClipManifest {
  nlohmann::json config = nlohmann::json::object();  // pipeline config snapshot
  std::vector<ClipRecord> clips;
};

inline constexpr int kDefaultClipLength = 120;  // 5 s at 24 fps
inline constexpr int kDefaultClipOverlap = 72;  // 3 s at 24 fps

// "{video_id}_{start:06d}"
std::string make_clip_id(const std::string& video_id, int start_frame);

// Clips start at 0, s, 2s, ... with stride s = clip_len - overlap and all fit
// inside the video.
std::vector<ClipRecord> segment_clips(const VideoMeta& meta, int clip_len = kDefaultClipLength,
                                      int overlap = kDefaultClipOverlap);

// Frames [start, start + length) re-indexed from 0. Frames beyond the video
// are not invented: the slice is shorter if the video ends early.
PoseVideo slice_pose_video(const PoseVideo& video, int start_frame, int length);

// Mean number of non-lane agents per frame; 0 for an empty slice.
double object_count_score(const PoseVideo& clip_poses);

// Keeps the ceil(n/2) highest-scoring clips (ties at the cut go to the lower
// clip_id) in their original order.
std::vector<ClipRecord> filter_clips(const std::vector<ClipRecord>& clips);

// Manifest-level filter. Records the step in the config snapshot; applying it
// to an already filtered manifest returns it unchanged.
ClipManifest filter_manifest(const ClipManifest& manifest);

// Samples up to train_quota Train clips and up to val_quota Val clips
// uniformly (seeded), keeping manifest order. Throws if any video_id carries
// clips of both splits.
ClipManifest assign_splits(const ClipManifest& manifest, std::size_t train_quota,
                           std::size_t val_quota, std::uint64_t seed);

struct CaptionReport {
  std::size_t applied = 0;
  std::size_t missing = 0;  // clips left without a caption
  std::vector<std::string> warnings;
  double coverage = 0.0;  // fraction of clips with a caption after ingestion
};

// Sets captions where provided; ids not in the manifest produce warnings.
// The coverage figure is also stored in the config snapshot.
ClipManifest attach_captions(const ClipManifest& manifest,
                             const std::map<std::string, std::string>& captions,
                             CaptionReport* report = nullptr);

ValidationReport validate(const ClipManifest& manifest);

void to_json(nlohmann::json& j, const ClipRecord& c);
void from_json(const nlohmann::json& j, ClipRecord& c);
void to_json(nlohmann::json& j, const VideoMeta& v);
void from_json(const nlohmann::json& j, VideoMeta& v);

// Header line {"kind": "clip_manifest", "version": 1, "config": {...}}
// followed by one ClipRecord per line.
std::string write_manifest(const ClipManifest& manifest);
ClipManifest read_manifest(std::istream& in);

}  // namespace mad
