#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <sstream>

#include "mad/data_pipeline.hpp"
#include "mad/error.hpp"
#include "mad/latent_noise.hpp"
#include "mad/metrics.hpp"
#include "mad/pose_render.hpp"
#include "mad/serialize.hpp"
#include "mad/study.hpp"
#include "mad/synth_scenes.hpp"

namespace py = pybind11;
using namespace mad;

namespace {

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Bytes = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Floats = py::array_t<float, py::array::c_style | py::array::forcecast>;

Trajectory2D to_traj(const Points& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw Error(ErrorKind::kShape, "trajectory must have shape (N, 2)");
  Trajectory2D t;
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < r.shape(0); ++i) t.points.emplace_back(r(i, 0), r(i, 1));
  return t;
}

std::vector<Trajectory2D> to_trajs(const std::vector<Points>& xs) {
  std::vector<Trajectory2D> out;
  for (const auto& x : xs) out.push_back(to_traj(x));
  return out;
}

Alignment to_alignment(const std::string& s) {
  if (s == "none") return Alignment::kNone;
  if (s == "first-pose") return Alignment::kFirstPose;
  throw Error(ErrorKind::kConfig, "align must be 'none' or 'first-pose'");
}

FeatureSet to_features(const Points& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::kShape, "features must have shape (n, d)");
  FeatureSet f(a.shape(0), a.shape(1));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    for (py::ssize_t j = 0; j < r.shape(1); ++j) f(i, j) = r(i, j);
  }
  return f;
}

BBox to_box(const std::array<double, 4>& b) { return {b[0], b[1], b[2], b[3]}; }

Bytes frames_to_array(const std::vector<FrameImage>& frames, int w, int h) {
  Bytes out({static_cast<py::ssize_t>(frames.size()), static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w),
             py::ssize_t{3}});
  auto* dst = out.mutable_data();
  for (const auto& f : frames) {
    std::memcpy(dst, f.pixels.data(), f.pixels.size());
    dst += f.pixels.size();
  }
  return out;
}

std::vector<FrameImage> array_to_frames(const Bytes& a) {
  if (a.ndim() != 4 || a.shape(3) != 3) throw Error(ErrorKind::kShape, "frames must have shape (F, H, W, 3)");
  std::vector<FrameImage> frames;
  const auto* src = a.data();
  for (py::ssize_t f = 0; f < a.shape(0); ++f) {
    FrameImage img(static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)));
    std::memcpy(img.pixels.data(), src, img.pixels.size());
    src += img.pixels.size();
    frames.push_back(std::move(img));
  }
  return frames;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Motion-control video toolkit: rendering, noise injection, data prep, metrics, ratings";
  py::register_exception<Error>(m, "MadError", PyExc_ValueError);

  m.def(
      "segment_clips",
      [](int frame_count, int clip_len, int overlap, const std::string& video_id) {
        VideoMeta v;
        v.video_id = video_id;
        v.frame_count = frame_count;
        std::vector<std::tuple<std::string, int, int>> out;
        for (const auto& c : segment_clips(v, clip_len, overlap)) out.emplace_back(c.clip_id, c.start_frame, c.length);
        return out;
      },
      py::arg("frame_count"), py::arg("clip_len") = kDefaultClipLength, py::arg("overlap") = kDefaultClipOverlap,
      py::arg("video_id") = "video", "Clips as (clip_id, start_frame, length).");

  m.def(
      "filter_clips",
      [](const std::vector<double>& scores) {
        std::vector<ClipRecord> clips;
        for (std::size_t i = 0; i < scores.size(); ++i) {
          ClipRecord c;
          c.clip_id = make_clip_id("c", static_cast<int>(i));
          c.start_frame = static_cast<int>(i);
          c.object_score = scores[i];
          clips.push_back(c);
        }
        std::vector<int> kept;
        for (const auto& c : filter_clips(clips)) kept.push_back(c.start_frame);
        return kept;
      },
      py::arg("scores"), "Indices of the kept clips, in input order.");

  m.def(
      "ade", [](const Points& a, const Points& b, const std::string& align) {
        return ade(to_traj(a), to_traj(b), to_alignment(align));
      },
      py::arg("a"), py::arg("b"), py::arg("align") = "none");
  m.def(
      "min_ade", [](const Points& gt, const std::vector<Points>& samples, const std::string& align) {
        return min_ade_k(to_traj(gt), to_trajs(samples), to_alignment(align));
      },
      py::arg("gt"), py::arg("samples"), py::arg("align") = "first-pose");
  m.def(
      "apd", [](const std::vector<Points>& samples) { return apd_k(to_trajs(samples)); }, py::arg("samples"));
  m.def(
      "iou", [](const std::array<double, 4>& a, const std::array<double, 4>& b) { return iou(to_box(a), to_box(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "frechet_distance",
      [](const Points& a, const Points& b, double eps) { return frechet_distance(to_features(a), to_features(b), eps); },
      py::arg("a"), py::arg("b"), py::arg("eps") = 1e-6);

  m.def(
      "fit_ratings_json",
      [](const std::string& records_jsonl, const std::string& criterion, const std::vector<std::string>& models) {
        const auto c = criterion_from_string(criterion);
        if (!c) throw Error(ErrorKind::kConfig, "unknown criterion '" + criterion + "'");
        std::vector<PreferenceRecord> rs;
        std::istringstream in(records_jsonl);
        for_each_jsonl(in, [&](std::size_t, const json& j) { rs.push_back(j.get<PreferenceRecord>()); });
        std::size_t n = 0;
        for (const auto& r : rs) n += r.criterion == *c;
        return results_json(fit_ratings(rs, *c, models), *c, n).dump();
      },
      py::arg("records_jsonl"), py::arg("criterion") = "general", py::arg("models") = std::vector<std::string>{});

  m.def(
      "synth_scene",
      [](const std::string& scenario, std::uint64_t seed, int width, int height, double fps, double duration,
         double speed, double yaw_rate, double fov) {
        const auto kind = scenario_kind_from_string(scenario);
        if (!kind) throw Error(ErrorKind::kConfig, "scenario must be straight, left-turn or crossing");
        Scenario s{*kind, speed, duration, fps, seed, yaw_rate};
        const auto scene = generate_scene(s, CameraIntrinsics{fov, width, height});
        py::dict d;
        d["poses"] = write_pose_jsonl(scene.poses);
        d["trajectory"] = write_trajectory_jsonl(scene.trajectory);
        d["tracks"] = write_tracks_jsonl(scene.tracks);
        d["frames"] = scene.poses.frames.size();
        d["crossing_z"] = scene.crossing_z ? py::cast(*scene.crossing_z) : py::none();
        return d;
      },
      py::arg("scenario") = "straight", py::arg("seed") = 0, py::arg("width") = 1056, py::arg("height") = 704,
      py::arg("fps") = 24.0, py::arg("duration") = 5.0, py::arg("speed") = 10.0, py::arg("yaw_rate") = 0.3,
      py::arg("fov") = 90.0);

  m.def(
      "render_pose",
      [](const std::string& poses_jsonl, int width, int height, double fps, int line_width, int joint_radius,
         double min_confidence, int jobs) {
        const auto schema = SkeletonSchema::make_default();
        std::istringstream in(poses_jsonl);
        const auto video = read_pose_jsonl(in, width, height, fps, schema);
        std::vector<FrameImage> frames;
        {
          py::gil_scoped_release release;
          frames = rasterize_pose_video(video, schema, RenderConfig{line_width, joint_radius, min_confidence}, jobs);
        }
        return frames_to_array(frames, width, height);
      },
      py::arg("poses_jsonl"), py::arg("width") = 1056, py::arg("height") = 704, py::arg("fps") = 24.0,
      py::arg("line_width") = 2, py::arg("joint_radius") = 3, py::arg("min_confidence") = 0.3, py::arg("jobs") = 1,
      "Pose frames as a uint8 array of shape (F, H, W, 3).");

  m.def(
      "latent_mask",
      [](const Bytes& frames, const std::array<int, 3>& factors) {
        const auto lm = skeleton_latent_mask(foreground_mask(array_to_frames(frames)),
                                             DownsampleFactors{factors[0], factors[1], factors[2]});
        Bytes out({lm.t, lm.h, lm.w});
        std::memcpy(out.mutable_data(), lm.bits.data(), lm.bits.size());
        return out;
      },
      py::arg("frames"), py::arg("factors") = std::array<int, 3>{1, 8, 8});

  m.def(
      "inject_noise",
      [](const Floats& latent, const Bytes& mask, double sigma_max, std::uint64_t seed, bool per_frame) {
        if (latent.ndim() != 4 || mask.ndim() != 3) {
          throw Error(ErrorKind::kShape, "latent must be (T, H, W, C) and mask (T, H, W)");
        }
        LatentTensor lt({static_cast<int>(latent.shape(0)), static_cast<int>(latent.shape(1)),
                         static_cast<int>(latent.shape(2)), static_cast<int>(latent.shape(3))},
                        {});
        std::memcpy(lt.values.data(), latent.data(), lt.values.size() * sizeof(float));
        SkeletonMask sm{static_cast<int>(mask.shape(0)), static_cast<int>(mask.shape(1)),
                        static_cast<int>(mask.shape(2)),
                        std::vector<std::uint8_t>(mask.data(), mask.data() + mask.size())};
        const auto res = inject_targeted_noise(
            lt, sm, NoiseConfig{sigma_max, seed, per_frame ? SigmaScope::kPerFrame : SigmaScope::kPerClip});
        Floats out({latent.shape(0), latent.shape(1), latent.shape(2), latent.shape(3)});
        std::memcpy(out.mutable_data(), res.latent.values.data(), res.latent.values.size() * sizeof(float));
        return py::make_tuple(out, res.sigmas);
      },
      py::arg("latent"), py::arg("mask"), py::arg("sigma_max") = 0.3, py::arg("seed") = 0,
      py::arg("per_frame") = false, "Returns (noisy latent, drawn sigmas).");
}
