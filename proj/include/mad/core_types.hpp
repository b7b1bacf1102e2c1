#pragma once

// Shared domain model: skeletons, pose videos, camera trajectories, boxes,
// tracks and raw frames. Image coordinates have their origin at the top-left
// corner, x to the right and y down. World and camera frames follow the same
// handedness: x right, y down (gravity), z forward.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mad {

enum class AgentClass { kCar, kPedestrian, kLaneLine };

// Wire names used by the JSON Lines formats: "car", "pedestrian", "lane".
std::string_view to_string(AgentClass cls);
std::optional<AgentClass> agent_class_from_string(std::string_view name);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
  bool is_black() const { return r == 0 && g == 0 && b == 0; }
};

struct Keypoint {
  std::string name;
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
  bool visible = false;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct ClassSchema {
  std::vector<std::string> keypoint_names;
  std::vector<std::pair<int, int>> edges;
  Rgb joint_color;
  Rgb edge_color;

  friend bool operator==(const ClassSchema&, const ClassSchema&) = default;
};

struct SkeletonSchema {
  std::map<AgentClass, ClassSchema> classes;

  const ClassSchema* find(AgentClass cls) const;

  // Car: 24-point boxy vehicle wireframe. Pedestrian: 17-point COCO body.
  // LaneLine: `lane_points` samples joined by consecutive edges.
  static SkeletonSchema make_default(int lane_points = kDefaultLanePoints);

  static constexpr int kDefaultLanePoints = 10;

  friend bool operator==(const SkeletonSchema&, const SkeletonSchema&) = default;
};

struct AgentSkeleton {
  int agent_id = 0;
  AgentClass cls = AgentClass::kCar;
  std::vector<Keypoint> keypoints;

  friend bool operator==(const AgentSkeleton&, const AgentSkeleton&) = default;
};

struct PoseFrame {
  int frame_index = 0;
  std::vector<AgentSkeleton> agents;

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

struct PoseVideo {
  int width = 0;
  int height = 0;
  double fps = 0.0;
  std::vector<PoseFrame> frames;

  friend bool operator==(const PoseVideo&, const PoseVideo&) = default;
};

struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  // World-from-camera rotation.
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  double timestamp = 0.0;

  friend bool operator==(const CameraPose& a, const CameraPose& b) {
    return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs() &&
           a.timestamp == b.timestamp;
  }
};

struct CameraIntrinsics {
  double horizontal_fov_deg = 90.0;
  int width = 0;
  int height = 0;

  // Focal length in pixels for square pixels.
  double focal_px() const;
  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct CameraTrajectory {
  std::vector<CameraPose> poses;
  CameraIntrinsics intrinsics;

  friend bool operator==(const CameraTrajectory&, const CameraTrajectory&) = default;
};

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct TrackEntry {
  int frame = 0;
  BBox box;

  friend bool operator==(const TrackEntry&, const TrackEntry&) = default;
};

struct Track {
  int track_id = 0;
  std::vector<TrackEntry> entries;

  const BBox* box_at(int frame) const;

  friend bool operator==(const Track&, const Track&) = default;
};

struct FrameImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  FrameImage() = default;
  FrameImage(int w, int h);

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  friend bool operator==(const FrameImage&, const FrameImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x));
  }
};

// --- validation ------------------------------------------------------------

struct Violation {
  std::string code;    // stable short name, e.g. "confidence range"
  std::string detail;  // human-readable location
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate(const Keypoint& kp);
ValidationReport validate(const SkeletonSchema& schema);
ValidationReport validate(const AgentSkeleton& agent, const SkeletonSchema& schema);
ValidationReport validate(const PoseVideo& video, const SkeletonSchema& schema);
ValidationReport validate(const PoseVideo& video);  // against the default schema
ValidationReport validate(const CameraPose& pose);
ValidationReport validate(const CameraTrajectory& traj);
ValidationReport validate(const BBox& box);
ValidationReport validate(const Track& track);
ValidationReport validate(const FrameImage& image);

}  // namespace mad
