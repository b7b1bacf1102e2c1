#include "mad/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "mad/error.hpp"
#include "mad/rng.hpp"

namespace mad {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid_input";
    case ErrorKind::kEmptyInput: return "empty_input";
    case ErrorKind::kSchemaMissing: return "schema_missing";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kLengthMismatch: return "length_mismatch";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kParse: return "parse";
  }
  return "unknown";
}

std::vector<std::size_t> seeded_permutation(std::size_t n, const CounterRng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::uint64_t counter = 0;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i, counter));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::string_view to_string(AgentClass cls) {
  switch (cls) {
    case AgentClass::kCar: return "car";
    case AgentClass::kPedestrian: return "pedestrian";
    case AgentClass::kLaneLine: return "lane";
  }
  return "unknown";
}

std::optional<AgentClass> agent_class_from_string(std::string_view name) {
  if (name == "car") return AgentClass::kCar;
  if (name == "pedestrian") return AgentClass::kPedestrian;
  if (name == "lane") return AgentClass::kLaneLine;
  return std::nullopt;
}

const ClassSchema* SkeletonSchema::find(AgentClass cls) const {
  auto it = classes.find(cls);
  return it == classes.end() ? nullptr : &it->second;
}

namespace {

ClassSchema car_schema() {
  ClassSchema s;
  s.keypoint_names = {
      "body_low_front_left",  "body_low_front_right",  "body_low_rear_right",
      "body_low_rear_left",   "body_high_front_left",  "body_high_front_right",
      "body_high_rear_right", "body_high_rear_left",   "roof_front_left",
      "roof_front_right",     "roof_rear_right",       "roof_rear_left",
      "wheel_front_left",     "wheel_front_right",     "wheel_rear_right",
      "wheel_rear_left",      "headlight_left",        "headlight_right",
      "taillight_left",       "taillight_right",       "plate_front",
      "plate_rear",           "mirror_left",           "mirror_right",
  };
  s.edges = {
      {0, 1},  {1, 2},  {2, 3},   {3, 0},   // lower body
      {4, 5},  {5, 6},  {6, 7},   {7, 4},   // beltline
      {0, 4},  {1, 5},  {2, 6},   {3, 7},   // body verticals
      {8, 9},  {9, 10}, {10, 11}, {11, 8},  // roof
      {8, 4},  {9, 5},  {10, 6},  {11, 7},  // pillars
      {16, 17}, {18, 19}, {22, 8}, {23, 9},
  };
  s.joint_color = {255, 0, 0};
  s.edge_color = {255, 128, 0};
  return s;
}

ClassSchema pedestrian_schema() {
  ClassSchema s;
  s.keypoint_names = {
      "nose",           "left_eye",      "right_eye",  "left_ear",    "right_ear",
      "left_shoulder",  "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
      "right_wrist",    "left_hip",      "right_hip",  "left_knee",   "right_knee",
      "left_ankle",     "right_ankle",
  };
  s.edges = {
      {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
      {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
      {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6},
  };
  s.joint_color = {0, 255, 0};
  s.edge_color = {0, 200, 100};
  return s;
}

ClassSchema lane_schema(int points) {
  ClassSchema s;
  for (int i = 0; i < points; ++i) {
    s.keypoint_names.push_back("lane_" + std::to_string(i));
    if (i + 1 < points) s.edges.emplace_back(i, i + 1);
  }
  s.joint_color = {0, 128, 255};
  s.edge_color = {0, 128, 255};
  return s;
}

void add(ValidationReport& report, std::string code, std::string detail) {
  report.push_back({std::move(code), std::move(detail)});
}

void append(ValidationReport& into, ValidationReport&& from, const std::string& prefix) {
  for (auto& v : from) into.push_back({std::move(v.code), prefix + v.detail});
}

}  // namespace

SkeletonSchema SkeletonSchema::make_default(int lane_points) {
  SkeletonSchema schema;
  schema.classes[AgentClass::kCar] = car_schema();
  schema.classes[AgentClass::kPedestrian] = pedestrian_schema();
  schema.classes[AgentClass::kLaneLine] = lane_schema(lane_points);
  return schema;
}

double CameraIntrinsics::focal_px() const {
  const double half_fov = 0.5 * horizontal_fov_deg * std::numbers::pi / 180.0;
  return 0.5 * width / std::tan(half_fov);
}

const BBox* Track::box_at(int frame) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), frame,
                             [](const TrackEntry& e, int f) { return e.frame < f; });
  if (it == entries.end() || it->frame != frame) return nullptr;
  return &it->box;
}

FrameImage::FrameImage(int w, int h)
    : width(w),
      height(h),
      pixels(3 * static_cast<std::size_t>(std::max(w, 0)) *
                 static_cast<std::size_t>(std::max(h, 0)),
             0) {}

// --- validation ---------------------------------------------------------------

ValidationReport validate(const Keypoint& kp) {
  ValidationReport r;
  if (!(kp.confidence >= 0.0 && kp.confidence <= 1.0)) {
    add(r, "confidence range", "keypoint '" + kp.name + "' confidence " +
                                   std::to_string(kp.confidence));
  }
  if (!std::isfinite(kp.x) || !std::isfinite(kp.y)) {
    add(r, "finite coordinates", "keypoint '" + kp.name + "'");
  }
  return r;
}

ValidationReport validate(const SkeletonSchema& schema) {
  ValidationReport r;
  for (const auto& [cls, s] : schema.classes) {
    const std::string where = "class " + std::string(to_string(cls));
    const int n = static_cast<int>(s.keypoint_names.size());
    for (const auto& [a, b] : s.edges) {
      if (a < 0 || b < 0 || a >= n || b >= n) {
        add(r, "edge index range", where + " edge (" + std::to_string(a) + "," +
                                       std::to_string(b) + ")");
      }
    }
    for (const Rgb& c : {s.joint_color, s.edge_color}) {
      if (c.is_black()) add(r, "black color", where);
    }
  }
  // Colors must not be shared between classes (a class may reuse its own
  // joint color for edges).
  for (auto a = schema.classes.begin(); a != schema.classes.end(); ++a) {
    for (auto b = std::next(a); b != schema.classes.end(); ++b) {
      for (const Rgb& ca : {a->second.joint_color, a->second.edge_color}) {
        for (const Rgb& cb : {b->second.joint_color, b->second.edge_color}) {
          if (ca == cb) {
            add(r, "distinct colors", std::string(to_string(a->first)) + " vs " +
                                          std::string(to_string(b->first)));
          }
        }
      }
    }
  }
  return r;
}

ValidationReport validate(const AgentSkeleton& agent, const SkeletonSchema& schema) {
  ValidationReport r;
  const std::string where = "agent " + std::to_string(agent.agent_id) + ": ";
  const ClassSchema* s = schema.find(agent.cls);
  if (s == nullptr) {
    add(r, "schema missing", where + std::string(to_string(agent.cls)));
    return r;
  }
  if (agent.keypoints.size() != s->keypoint_names.size()) {
    add(r, "keypoint count", where + std::to_string(agent.keypoints.size()) + " != " +
                                 std::to_string(s->keypoint_names.size()));
  }
  for (const Keypoint& kp : agent.keypoints) append(r, validate(kp), where);
  return r;
}

ValidationReport validate(const PoseVideo& video, const SkeletonSchema& schema) {
  ValidationReport r;
  if (video.width <= 0 || video.height <= 0) {
    add(r, "positive size", std::to_string(video.width) + "x" + std::to_string(video.height));
  }
  if (!(video.fps > 0.0)) add(r, "positive fps", std::to_string(video.fps));
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    const PoseFrame& f = video.frames[i];
    if (f.frame_index != static_cast<int>(i)) {
      add(r, "frame index sequence", "position " + std::to_string(i) + " has index " +
                                         std::to_string(f.frame_index));
    }
    for (const AgentSkeleton& a : f.agents) {
      append(r, validate(a, schema), "frame " + std::to_string(f.frame_index) + " ");
    }
  }
  return r;
}

ValidationReport validate(const PoseVideo& video) {
  return validate(video, SkeletonSchema::make_default());
}

ValidationReport validate(const CameraPose& pose) {
  ValidationReport r;
  if (std::abs(pose.orientation.norm() - 1.0) > 1e-9) {
    add(r, "unit quaternion", "norm " + std::to_string(pose.orientation.norm()));
  }
  if (!pose.position.allFinite() || !std::isfinite(pose.timestamp)) {
    add(r, "finite pose", "t=" + std::to_string(pose.timestamp));
  }
  return r;
}

ValidationReport validate(const CameraTrajectory& traj) {
  ValidationReport r;
  const double fov = traj.intrinsics.horizontal_fov_deg;
  if (!(fov > 0.0 && fov < 180.0)) add(r, "fov range", std::to_string(fov));
  if (traj.intrinsics.width <= 0 || traj.intrinsics.height <= 0) {
    add(r, "positive size", std::to_string(traj.intrinsics.width) + "x" +
                                std::to_string(traj.intrinsics.height));
  }
  for (std::size_t i = 0; i < traj.poses.size(); ++i) {
    append(r, validate(traj.poses[i]), "pose " + std::to_string(i) + ": ");
    if (i > 0 && !(traj.poses[i].timestamp > traj.poses[i - 1].timestamp)) {
      add(r, "increasing timestamps", "pose " + std::to_string(i));
    }
  }
  return r;
}

ValidationReport validate(const BBox& box) {
  ValidationReport r;
  if (!(box.x_min <= box.x_max) || !(box.y_min <= box.y_max)) add(r, "box ordering", "");
  return r;
}

ValidationReport validate(const Track& track) {
  ValidationReport r;
  const std::string where = "track " + std::to_string(track.track_id) + ": ";
  for (std::size_t i = 0; i < track.entries.size(); ++i) {
    append(r, validate(track.entries[i].box), where);
    if (i > 0 && track.entries[i].frame <= track.entries[i - 1].frame) {
      add(r, "increasing frames", where + "entry " + std::to_string(i));
    }
  }
  return r;
}

ValidationReport validate(const FrameImage& image) {
  ValidationReport r;
  const std::size_t expected = 3 * static_cast<std::size_t>(std::max(image.width, 0)) *
                               static_cast<std::size_t>(std::max(image.height, 0));
  if (image.pixels.size() != expected) {
    add(r, "buffer length", std::to_string(image.pixels.size()) + " != " +
                                std::to_string(expected));
  }
  return r;
}

}  // namespace mad
