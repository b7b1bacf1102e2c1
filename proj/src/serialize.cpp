#include "mad/serialize.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "mad/error.hpp"

namespace mad {

void to_json(json& j, const Rgb& c) { j = json::array({c.r, c.g, c.b}); }
void from_json(const json& j, Rgb& c) {
  c = {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}

void to_json(json& j, const Keypoint& kp) {
  j = json{{"name", kp.name}, {"x", kp.x}, {"y", kp.y},
           {"confidence", kp.confidence}, {"visible", kp.visible}};
}
void from_json(const json& j, Keypoint& kp) {
  kp.name = j.value("name", "");
  j.at("x").get_to(kp.x);
  j.at("y").get_to(kp.y);
  j.at("confidence").get_to(kp.confidence);
  j.at("visible").get_to(kp.visible);
}

void to_json(json& j, const ClassSchema& s) {
  json edges = json::array();
  for (const auto& [a, b] : s.edges) edges.push_back({a, b});
  j = json{{"keypoints", s.keypoint_names}, {"edges", edges},
           {"joint_color", s.joint_color}, {"edge_color", s.edge_color}};
}
void from_json(const json& j, ClassSchema& s) {
  j.at("keypoints").get_to(s.keypoint_names);
  s.edges.clear();
  for (const auto& e : j.at("edges")) s.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  j.at("joint_color").get_to(s.joint_color);
  j.at("edge_color").get_to(s.edge_color);
}

void to_json(json& j, const SkeletonSchema& s) {
  j = json::object();
  for (const auto& [cls, cs] : s.classes) j[std::string(to_string(cls))] = cs;
}
void from_json(const json& j, SkeletonSchema& s) {
  s.classes.clear();
  for (const auto& [name, value] : j.items()) {
    auto cls = agent_class_from_string(name);
    if (!cls) throw Error(ErrorKind::kParse, "unknown agent class '" + name + "'");
    s.classes[*cls] = value.get<ClassSchema>();
  }
}

namespace {

AgentClass parse_class(const json& j) {
  const auto name = j.get<std::string>();
  auto cls = agent_class_from_string(name);
  if (!cls) throw Error(ErrorKind::kParse, "unknown agent class '" + name + "'");
  return *cls;
}

json compact_keypoints(const std::vector<Keypoint>& kps) {
  json arr = json::array();
  for (const Keypoint& kp : kps) arr.push_back({kp.x, kp.y, kp.confidence, kp.visible ? 1 : 0});
  return arr;
}

Keypoint parse_compact_keypoint(const json& row) {
  Keypoint kp;
  row.at(0).get_to(kp.x);
  row.at(1).get_to(kp.y);
  row.at(2).get_to(kp.confidence);
  const json& vis = row.at(3);
  kp.visible = vis.is_boolean() ? vis.get<bool>() : vis.get<double>() != 0.0;
  return kp;
}

}  // namespace

void to_json(json& j, const AgentSkeleton& a) {
  j = json{{"id", a.agent_id}, {"class", std::string(to_string(a.cls))},
           {"keypoints", a.keypoints}};
}
void from_json(const json& j, AgentSkeleton& a) {
  j.at("id").get_to(a.agent_id);
  a.cls = parse_class(j.at("class"));
  j.at("keypoints").get_to(a.keypoints);
}

void to_json(json& j, const PoseFrame& f) {
  j = json{{"frame", f.frame_index}, {"agents", f.agents}};
}
void from_json(const json& j, PoseFrame& f) {
  j.at("frame").get_to(f.frame_index);
  j.at("agents").get_to(f.agents);
}

void to_json(json& j, const PoseVideo& v) {
  j = json{{"width", v.width}, {"height", v.height}, {"fps", v.fps}, {"frames", v.frames}};
}
void from_json(const json& j, PoseVideo& v) {
  j.at("width").get_to(v.width);
  j.at("height").get_to(v.height);
  j.at("fps").get_to(v.fps);
  j.at("frames").get_to(v.frames);
}

void to_json(json& j, const CameraPose& p) {
  const auto& q = p.orientation;
  j = json{{"t", p.timestamp},
           {"p", {p.position.x(), p.position.y(), p.position.z()}},
           {"q", {q.w(), q.x(), q.y(), q.z()}}};
}
void from_json(const json& j, CameraPose& p) {
  j.at("t").get_to(p.timestamp);
  const json& pos = j.at("p");
  p.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
  const json& q = j.at("q");
  p.orientation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                     q.at(2).get<double>(), q.at(3).get<double>());
}

void to_json(json& j, const CameraIntrinsics& k) {
  j = json{{"fov", k.horizontal_fov_deg}, {"width", k.width}, {"height", k.height}};
}
void from_json(const json& j, CameraIntrinsics& k) {
  j.at("fov").get_to(k.horizontal_fov_deg);
  j.at("width").get_to(k.width);
  j.at("height").get_to(k.height);
}

void to_json(json& j, const CameraTrajectory& t) {
  j = json{{"intrinsics", t.intrinsics}, {"poses", t.poses}};
}
void from_json(const json& j, CameraTrajectory& t) {
  j.at("intrinsics").get_to(t.intrinsics);
  j.at("poses").get_to(t.poses);
}

void to_json(json& j, const BBox& b) { j = json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }
void from_json(const json& j, BBox& b) {
  b = {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
       j.at(3).get<double>()};
}

void to_json(json& j, const Track& t) {
  json entries = json::array();
  for (const auto& e : t.entries) {
    entries.push_back({e.frame, e.box.x_min, e.box.y_min, e.box.x_max, e.box.y_max});
  }
  j = json{{"track", t.track_id}, {"entries", entries}};
}
void from_json(const json& j, Track& t) {
  j.at("track").get_to(t.track_id);
  t.entries.clear();
  for (const auto& row : j.at("entries")) {
    TrackEntry e;
    row.at(0).get_to(e.frame);
    e.box = {row.at(1).get<double>(), row.at(2).get<double>(), row.at(3).get<double>(),
             row.at(4).get<double>()};
    t.entries.push_back(e);
  }
}

// --- JSON Lines ----------------------------------------------------------------

void for_each_jsonl(std::istream& in,
                    const std::function<void(std::size_t, const json&)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      fn(line_no, value);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kParse) throw;
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string write_pose_jsonl(const PoseVideo& video) {
  std::string out;
  for (const PoseFrame& f : video.frames) {
    json agents = json::array();
    for (const AgentSkeleton& a : f.agents) {
      agents.push_back({{"id", a.agent_id},
                        {"class", std::string(to_string(a.cls))},
                        {"kp", compact_keypoints(a.keypoints)}});
    }
    out += json{{"frame", f.frame_index}, {"agents", agents}}.dump();
    out += '\n';
  }
  return out;
}

PoseVideo read_pose_jsonl(std::istream& in, int width, int height, double fps,
                          const SkeletonSchema& schema) {
  PoseVideo video{width, height, fps, {}};
  for_each_jsonl(in, [&](std::size_t, const json& j) {
    PoseFrame frame;
    j.at("frame").get_to(frame.frame_index);
    for (const json& ja : j.at("agents")) {
      AgentSkeleton a;
      ja.at("id").get_to(a.agent_id);
      a.cls = parse_class(ja.at("class"));
      const ClassSchema* cs = schema.find(a.cls);
      const json& rows = ja.at("kp");
      for (std::size_t k = 0; k < rows.size(); ++k) {
        Keypoint kp = parse_compact_keypoint(rows.at(k));
        if (cs != nullptr && k < cs->keypoint_names.size()) kp.name = cs->keypoint_names[k];
        a.keypoints.push_back(std::move(kp));
      }
      frame.agents.push_back(std::move(a));
    }
    video.frames.push_back(std::move(frame));
  });
  return video;
}

std::string write_trajectory_jsonl(const CameraTrajectory& traj) {
  std::string out;
  for (const CameraPose& p : traj.poses) {
    out += json(p).dump();
    out += '\n';
  }
  return out;
}

CameraTrajectory read_trajectory_jsonl(std::istream& in, const CameraIntrinsics& intrinsics) {
  CameraTrajectory traj;
  traj.intrinsics = intrinsics;
  for_each_jsonl(in, [&](std::size_t, const json& j) { traj.poses.push_back(j.get<CameraPose>()); });
  return traj;
}

std::string write_tracks_jsonl(const std::vector<Track>& tracks) {
  std::string out;
  for (const Track& t : tracks) {
    out += json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<Track> read_tracks_jsonl(std::istream& in) {
  std::vector<Track> tracks;
  for_each_jsonl(in, [&](std::size_t, const json& j) { tracks.push_back(j.get<Track>()); });
  return tracks;
}

// --- files -----------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kIo, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot rename onto '" + path.string() + "'");
  }
}

}  // namespace mad
