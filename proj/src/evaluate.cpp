#include "mad/evaluate.hpp"

#include "mad/error.hpp"
#include "mad/parallel.hpp"
#include "mad/serialize.hpp"

namespace mad {

void to_json(nlohmann::json& j, const Trajectory2D& t) {
  j = nlohmann::json::array();
  for (const Eigen::Vector2d& p : t.points) j.push_back({p.x(), p.y()});
}

void from_json(const nlohmann::json& j, Trajectory2D& t) {
  if (!j.is_array()) throw Error(ErrorKind::kParse, "trajectory must be an array of [x, y]");
  t.points.clear();
  t.points.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw Error(ErrorKind::kParse, "trajectory point must be [x, y]");
    t.points.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
}

std::vector<SceneSamples> read_scene_samples(std::istream& in) {
  std::vector<SceneSamples> scenes;
  for_each_jsonl(in, [&](std::size_t, const nlohmann::json& j) {
    SceneSamples s;
    s.scene = j.at("scene").is_string() ? j.at("scene").get<std::string>() : j.at("scene").dump();
    s.gt = j.at("gt").get<Trajectory2D>();
    s.samples = j.at("samples").get<std::vector<Trajectory2D>>();
    if (s.gt.points.empty()) throw Error(ErrorKind::kEmptyInput, "scene '" + s.scene + "': empty gt");
    if (s.samples.empty()) throw Error(ErrorKind::kEmptyInput, "scene '" + s.scene + "': no samples");
    scenes.push_back(std::move(s));
  });
  return scenes;
}

std::vector<SceneScore> evaluate_scenes(const std::vector<SceneSamples>& scenes, Alignment align,
                                        int jobs) {
  std::vector<SceneScore> out(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    const SceneSamples& s = scenes[i];
    SceneScore& r = out[i];
    r.scene = s.scene;
    r.k = s.samples.size();
    try {
      r.min_ade = min_ade_k(s.gt, s.samples, align);
      if (r.k >= 2) r.apd = apd_k(s.samples);
    } catch (const Error& e) {
      throw Error(e.kind(), "scene '" + s.scene + "': " + e.what());
    }
  });
  return out;
}

nlohmann::json evaluation_report(const std::vector<SceneScore>& scores) {
  nlohmann::json per_scene = nlohmann::json::array();
  double ade_sum = 0.0, apd_sum = 0.0;
  std::size_t apd_n = 0;
  for (const SceneScore& s : scores) {
    nlohmann::json row = {{"scene", s.scene}, {"k", s.k}, {"min_ade", s.min_ade}};
    row["apd"] = s.apd ? nlohmann::json(*s.apd) : nlohmann::json(nullptr);
    per_scene.push_back(std::move(row));
    ade_sum += s.min_ade;
    if (s.apd) {
      apd_sum += *s.apd;
      ++apd_n;
    }
  }
  nlohmann::json agg = {{"scenes", scores.size()}, {"apd_scenes", apd_n}};
  agg["min_ade"] = scores.empty() ? nlohmann::json(nullptr) : nlohmann::json(ade_sum / scores.size());
  agg["apd"] = apd_n == 0 ? nlohmann::json(nullptr) : nlohmann::json(apd_sum / apd_n);
  return {{"scenes", std::move(per_scene)}, {"aggregate", std::move(agg)}};
}

}  // namespace mad
