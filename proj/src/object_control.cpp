#include "mad/object_control.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <tuple>

#include "mad/error.hpp"
#include "mad/metrics.hpp"
#include "mad/parallel.hpp"
#include "mad/raster.hpp"
#include "mad/rng.hpp"

namespace mad {

std::vector<FrameDetections> bboxes_from_skeletons(const PoseVideo& video, double min_confidence) {
  std::vector<FrameDetections> out;
  out.reserve(video.frames.size());
  for (const PoseFrame& frame : video.frames) {
    FrameDetections fd{frame.frame_index, {}};
    for (const AgentSkeleton& agent : frame.agents) {
      if (agent.cls == AgentClass::kLaneLine) continue;
      BBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
      int used = 0;
      for (const Keypoint& kp : agent.keypoints) {
        if (!kp.visible || kp.confidence < min_confidence) continue;
        box.x_min = std::min(box.x_min, kp.x);
        box.y_min = std::min(box.y_min, kp.y);
        box.x_max = std::max(box.x_max, kp.x);
        box.y_max = std::max(box.y_max, kp.y);
        ++used;
      }
      if (used < 2) continue;
      fd.detections.push_back({agent.agent_id, agent.cls, box});
    }
    out.push_back(std::move(fd));
  }
  return out;
}

std::vector<Track> track(const std::vector<FrameDetections>& detections, const TrackerConfig& cfg) {
  if (cfg.iou_threshold < 0.0 || cfg.iou_threshold > 1.0 || cfg.max_gap < 0) {
    throw Error(ErrorKind::kConfig, "tracker needs iou_threshold in [0,1] and max_gap >= 0");
  }
  std::map<int, Track> by_identity;
  int next_id = 0;
  for (const auto& fd : detections) {
    for (const auto& d : fd.detections) {
      if (d.agent_id) next_id = std::max(next_id, *d.agent_id + 1);
    }
  }

  std::vector<Track> greedy;
  std::vector<std::size_t> live;  // indices into `greedy`
  int previous_frame = std::numeric_limits<int>::min();
  for (const auto& fd : detections) {
    if (fd.frame <= previous_frame) {
      throw Error(ErrorKind::kInvalidInput, "detection frames must be strictly increasing");
    }
    previous_frame = fd.frame;

    std::vector<std::size_t> anonymous;
    for (std::size_t i = 0; i < fd.detections.size(); ++i) {
      const Detection& d = fd.detections[i];
      if (d.agent_id) {
        Track& t = by_identity[*d.agent_id];
        t.track_id = *d.agent_id;
        if (!t.entries.empty() && t.entries.back().frame == fd.frame) {
          throw Error(ErrorKind::kInvalidInput, "agent " + std::to_string(*d.agent_id) +
                                                    " detected twice in frame " +
                                                    std::to_string(fd.frame));
        }
        t.entries.push_back({fd.frame, d.box});
      } else {
        anonymous.push_back(i);
      }
    }

    std::erase_if(live, [&](std::size_t t) {
      return fd.frame - greedy[t].entries.back().frame > cfg.max_gap + 1;
    });

    // (iou, live position, detection position); sorted by descending IoU,
    // then ascending positions for determinism.
    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t a = 0; a < live.size(); ++a) {
      for (std::size_t b = 0; b < anonymous.size(); ++b) {
        const double v = iou(greedy[live[a]].entries.back().box, fd.detections[anonymous[b]].box);
        if (v >= cfg.iou_threshold) candidates.emplace_back(v, a, b);
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
      if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
      return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
    });
    std::vector<bool> track_used(live.size(), false);
    std::vector<bool> det_used(anonymous.size(), false);
    for (const auto& [v, a, b] : candidates) {
      if (track_used[a] || det_used[b]) continue;
      track_used[a] = det_used[b] = true;
      greedy[live[a]].entries.push_back({fd.frame, fd.detections[anonymous[b]].box});
    }
    for (std::size_t b = 0; b < anonymous.size(); ++b) {
      if (det_used[b]) continue;
      greedy.push_back({next_id++, {{fd.frame, fd.detections[anonymous[b]].box}}});
      live.push_back(greedy.size() - 1);
    }
  }

  std::vector<Track> out;
  out.reserve(by_identity.size() + greedy.size());
  for (auto& [id, t] : by_identity) out.push_back(std::move(t));
  for (auto& t : greedy) out.push_back(std::move(t));
  return out;
}

std::vector<Track> select_tracks(const std::vector<Track>& tracks, std::size_t max_n,
                                 std::uint64_t seed) {
  if (tracks.size() <= max_n) return tracks;
  auto perm = seeded_permutation(tracks.size(), CounterRng(seed).substream(0x7472616b));
  perm.resize(max_n);
  std::sort(perm.begin(), perm.end());
  std::vector<Track> out;
  out.reserve(max_n);
  for (std::size_t i : perm) out.push_back(tracks[i]);
  return out;
}

const std::vector<Rgb>& track_palette() {
  static const std::vector<Rgb> palette = {
      {255, 64, 64},  {64, 255, 64},   {64, 128, 255}, {255, 255, 64},
      {255, 64, 255}, {64, 255, 255},  {255, 160, 32}, {160, 96, 255},
  };
  return palette;
}

std::vector<FrameImage> render_track_video(const std::vector<Track>& tracks, int width, int height,
                                           double fps, int frame_count, int jobs) {
  if (frame_count < 1) throw Error(ErrorKind::kInvalidInput, "frame_count must be >= 1");
  if (width <= 0 || height <= 0 || !(fps > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "track video needs positive size and fps");
  }
  const auto& palette = track_palette();
  std::vector<FrameImage> frames(static_cast<std::size_t>(frame_count));
  parallel_for(frames.size(), jobs, [&](std::size_t f) {
    FrameImage img(width, height);
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      if (const BBox* box = tracks[k].box_at(static_cast<int>(f))) {
        raster::draw_rect_outline(img, *box, kTrackOutlinePx, palette[k % palette.size()]);
      }
    }
    frames[f] = std::move(img);
  });
  return frames;
}

}  // namespace mad
