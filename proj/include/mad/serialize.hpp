#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mad/core_types.hpp"

namespace mad {

using json = nlohmann::json;

// nlohmann ADL hooks. Keypoint names are not part of the wire formats; the
// JSON Lines readers below restore them from a schema.
void to_json(json& j, const Rgb& c);
void from_json(const json& j, Rgb& c);
void to_json(json& j, const Keypoint& kp);
void from_json(const json& j, Keypoint& kp);
void to_json(json& j, const ClassSchema& s);
void from_json(const json& j, ClassSchema& s);
void to_json(json& j, const SkeletonSchema& s);
void from_json(const json& j, SkeletonSchema& s);
void to_json(json& j, const AgentSkeleton& a);
void from_json(const json& j, AgentSkeleton& a);
void to_json(json& j, const PoseFrame& f);
void from_json(const json& j, PoseFrame& f);
void to_json(json& j, const PoseVideo& v);
void from_json(const json& j, PoseVideo& v);
void to_json(json& j, const CameraPose& p);
void from_json(const json& j, CameraPose& p);
void to_json(json& j, const CameraIntrinsics& k);
void from_json(const json& j, CameraIntrinsics& k);
void to_json(json& j, const CameraTrajectory& t);
void from_json(const json& j, CameraTrajectory& t);
void to_json(json& j, const BBox& b);
void from_json(const json& j, BBox& b);
void to_json(json& j, const Track& t);
void from_json(const json& j, Track& t);

// --- JSON Lines wire formats -------------------------------------------------
//
// Keypoints:  {"frame": int, "agents": [{"id", "class", "kp": [[x,y,conf,vis]]}]}
// Trajectory: {"t": sec, "p": [x,y,z], "q": [w,x,y,z]}
// Tracks:     {"track": int, "entries": [[frame, x0, y0, x1, y1], ...]}

std::string write_pose_jsonl(const PoseVideo& video);
PoseVideo read_pose_jsonl(std::istream& in, int width, int height, double fps,
                          const SkeletonSchema& schema);

std::string write_trajectory_jsonl(const CameraTrajectory& traj);
CameraTrajectory read_trajectory_jsonl(std::istream& in, const CameraIntrinsics& intrinsics);

std::string write_tracks_jsonl(const std::vector<Track>& tracks);
std::vector<Track> read_tracks_jsonl(std::istream& in);

// Calls `fn(line_number, value)` for every non-blank line. Throws
// Error(kParse) naming the 1-based line on malformed JSON or when `fn` throws
// a json exception.
void for_each_jsonl(std::istream& in,
                    const std::function<void(std::size_t, const json&)>& fn);

// --- files -------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace mad
