#pragma once

// Batch trajectory evaluation over a JSON Lines scene file:
//   {"scene": id, "gt": [[x, y], ...], "samples": [[[x, y], ...], ...]}

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mad/metrics.hpp"

namespace mad {

struct SceneSamples {
  std::string scene;
  Trajectory2D gt;
  std::vector<Trajectory2D> samples;
};

struct SceneScore {
  std::string scene;
  std::size_t k = 0;
  double min_ade = 0.0;        // meters
  std::optional<double> apd;   // centimeters; absent when k < 2
};

std::vector<SceneSamples> read_scene_samples(std::istream& in);

std::vector<SceneScore> evaluate_scenes(const std::vector<SceneSamples>& scenes,
                                        Alignment align = Alignment::kFirstPose, int jobs = 1);

// {"scenes": [...], "aggregate": {"scenes", "min_ade", "apd", "apd_scenes"}}
nlohmann::json evaluation_report(const std::vector<SceneScore>& scores);

void to_json(nlohmann::json& j, const Trajectory2D& t);
void from_json(const nlohmann::json& j, Trajectory2D& t);

}  // namespace mad
