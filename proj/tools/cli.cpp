#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mad/data_pipeline.hpp"
#include "mad/ego_render.hpp"
#include "mad/error.hpp"
#include "mad/evaluate.hpp"
#include "mad/frame_io.hpp"
#include "mad/latent_noise.hpp"
#include "mad/metrics.hpp"
#include "mad/object_control.hpp"
#include "mad/parallel.hpp"
#include "mad/pose_render.hpp"
#include "mad/serialize.hpp"
#include "mad/study.hpp"
#include "mad/study_server.hpp"
#include "mad/synth_scenes.hpp"

namespace mad::cli {

namespace {

using nlohmann::json;

// Input problems that map to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_frame_output(CLI::App* sub, FrameOutput& out) {
  auto* dir = sub->add_option("--out", out.png_dir, "Directory for frame_%06d.png files");
  auto* raw = sub->add_option("--raw", out.raw_file, "Single raw planar RGB stream file");
  dir->excludes(raw);
  raw->excludes(dir);
}

void add_canvas(CLI::App* sub, Canvas& c, bool with_fps = true) {
  sub->add_option("--width", c.width, "Frame width in pixels")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--height", c.height, "Frame height in pixels")->capture_default_str()->check(CLI::PositiveNumber);
  if (with_fps) sub->add_option("--fps", c.fps, "Frames per second")->capture_default_str()->check(CLI::PositiveNumber);
}

std::string read_input(const Path& p) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) throw InputError("input file not found: '" + p.string() + "'");
  return read_file(p);
}

std::istringstream input_stream(const Path& p) { return std::istringstream(read_input(p)); }

json frame_output_summary(const FrameOutput& out, const std::vector<FrameImage>& frames) {
  json j = {{"frames", frames.size()}};
  if (!frames.empty()) {
    j["width"] = frames.front().width;
    j["height"] = frames.front().height;
  }
  if (out.png_dir) {
    const auto files = write_png_sequence(*out.png_dir, frames);
    j["png_dir"] = out.png_dir->string();
    j["files"] = files.size();
  } else {
    write_file_atomic(*out.raw_file, encode_raw_stream(frames));
    j["raw"] = out.raw_file->string();
  }
  return j;
}

void require_frame_output(const FrameOutput& out, const std::string& sub) {
  if (!out.png_dir && !out.raw_file) throw UsageError(sub + ": one of --out or --raw is required");
}

SkeletonSchema load_schema(const std::optional<Path>& p) {
  if (!p) return SkeletonSchema::make_default();
  try {
    return json::parse(read_input(*p)).get<SkeletonSchema>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, p->string() + ": " + e.what());
  }
}

// A trajectory file holds either camera poses ({"t","p","q"} per line; one
// trajectory projected to the ground plane) or one [[x, y], ...] array per line.
std::vector<Trajectory2D> read_trajectories(const Path& p) {
  std::istringstream in = input_stream(p);
  std::vector<Trajectory2D> out;
  CameraTrajectory poses;
  poses.intrinsics = CameraIntrinsics{90.0, 1, 1};
  try {
    for_each_jsonl(in, [&](std::size_t, const json& j) {
      if (j.is_object()) {
        poses.poses.push_back(j.get<CameraPose>());
      } else {
        out.push_back(j.get<Trajectory2D>());
      }
    });
  } catch (const Error& e) {
    throw Error(e.kind(), p.string() + ": " + e.what());
  }
  if (!poses.poses.empty() && !out.empty()) {
    throw Error(ErrorKind::kParse, p.string() + ": mixes camera poses and 2D trajectories");
  }
  if (!poses.poses.empty()) out.push_back(ground_plane(poses));
  if (out.empty()) throw Error(ErrorKind::kEmptyInput, p.string() + ": no trajectories");
  return out;
}

Trajectory2D read_single_trajectory(const Path& p) {
  auto all = read_trajectories(p);
  if (all.size() != 1) {
    throw Error(ErrorKind::kInvalidInput, p.string() + ": expected one trajectory, found " +
                                              std::to_string(all.size()));
  }
  return std::move(all.front());
}

FeatureSet read_features(const Path& p) {
  std::istringstream in = input_stream(p);
  std::vector<std::vector<double>> rows;
  for_each_jsonl(in, [&](std::size_t, const json& j) { rows.push_back(j.get<std::vector<double>>()); });
  if (rows.empty()) throw Error(ErrorKind::kEmptyInput, p.string() + ": no feature vectors");
  FeatureSet m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw Error(ErrorKind::kShape, p.string() + ": feature vectors differ in dimension");
    }
    for (std::size_t c = 0; c < rows[i].size(); ++c) m(i, c) = rows[i][c];
  }
  return m;
}

Answer parse_answer(const json& j) {
  if (j.is_boolean()) return j.get<bool>() ? Answer::kYes : Answer::kNo;
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "yes") return Answer::kYes;
    if (s == "no") return Answer::kNo;
  }
  throw Error(ErrorKind::kParse, "answer must be \"yes\", \"no\" or a boolean, got " + j.dump());
}

std::vector<Answer> read_answers(const Path& p) {
  const std::string text = read_input(p);
  std::vector<Answer> out;
  try {
    const json whole = json::parse(text);
    if (whole.is_array()) {
      for (const auto& a : whole) out.push_back(parse_answer(a));
      return out;
    }
  } catch (const json::exception&) {
  }
  std::istringstream in(text);
  for_each_jsonl(in, [&](std::size_t, const json& j) {
    out.push_back(parse_answer(j.is_object() ? j.at("answer") : j));
  });
  return out;
}

Alignment parse_alignment(const std::string& s) {
  if (s == "none") return Alignment::kNone;
  if (s == "first-pose") return Alignment::kFirstPose;
  throw UsageError("--align must be 'none' or 'first-pose'");
}

ClipManifest load_manifest(const Path& p) {
  std::istringstream in = input_stream(p);
  try {
    return read_manifest(in);
  } catch (const Error& e) {
    throw Error(e.kind(), p.string() + ": " + e.what());
  }
}

std::map<std::string, std::string> read_captions(const Path& p) {
  const std::string text = read_input(p);
  std::map<std::string, std::string> out;
  try {
    const json whole = json::parse(text);
    if (whole.is_object()) return whole.get<std::map<std::string, std::string>>();
  } catch (const json::exception&) {
  }
  std::istringstream in(text);
  for_each_jsonl(in, [&](std::size_t, const json& j) {
    out[j.at("clip_id").get<std::string>()] = j.at("caption").get<std::string>();
  });
  return out;
}

json run_render_pose(const RenderPoseArgs& a, int jobs) {
  require_frame_output(a.out, "render-pose");
  const SkeletonSchema schema = load_schema(a.schema);
  std::istringstream in = input_stream(a.poses);
  const PoseVideo video = read_pose_jsonl(in, a.canvas.width, a.canvas.height, a.canvas.fps, schema);
  const RenderConfig cfg{a.line_width, a.joint_radius, a.min_confidence};
  const auto frames = rasterize_pose_video(video, schema, cfg, jobs);
  json j = frame_output_summary(a.out, frames);
  if (!frames.empty()) j["foreground_pixels"] = foreground_mask(frames).count();
  return j;
}

json run_render_ego(const RenderEgoArgs& a, int jobs) {
  require_frame_output(a.out, "render-ego");
  const CameraIntrinsics k{a.fov_deg, a.canvas.width, a.canvas.height};
  std::istringstream in = input_stream(a.trajectory);
  const CameraTrajectory traj = read_trajectory_jsonl(in, k);
  EgoRenderConfig cfg;
  if (a.config) {
    try {
      cfg = json::parse(read_input(*a.config)).get<EgoRenderConfig>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, a.config->string() + ": " + e.what());
    }
  } else {
    cfg.particles.seed = a.seed;
  }
  if (a.density) cfg.particles.density = *a.density;
  if (a.no_particles) cfg.particles.density = 0.0;
  if (cfg.particles.bounds.volume() <= 0.0 && !traj.poses.empty()) {
    cfg.particles.bounds = default_particle_bounds(traj);
  }
  const auto frames = render_ego_video(traj, cfg, jobs);
  json j = frame_output_summary(a.out, frames);
  j["particles"] = particle_positions(cfg.particles).size();
  return j;
}

json run_render_objects(const RenderObjectsArgs& a, int jobs) {
  require_frame_output(a.out, "render-objects");
  std::istringstream in = input_stream(a.tracks);
  std::vector<Track> tracks = read_tracks_jsonl(in);
  const std::size_t available = tracks.size();
  if (a.max_tracks) tracks = select_tracks(tracks, *a.max_tracks, a.seed);
  int frames = a.frames;
  if (frames <= 0) {
    for (const Track& t : tracks) {
      if (!t.entries.empty()) frames = std::max(frames, t.entries.back().frame + 1);
    }
  }
  const auto images = render_track_video(tracks, a.canvas.width, a.canvas.height, a.canvas.fps, frames, jobs);
  json j = frame_output_summary(a.out, images);
  json ids = json::array();
  for (const Track& t : tracks) ids.push_back(t.track_id);
  j["tracks_available"] = available;
  j["tracks_rendered"] = ids;
  return j;
}

json run_inject_noise(const InjectNoiseArgs& a) {
  if (a.factors.size() != 3) throw UsageError("--factors takes three integers t,h,w");
  const std::vector<FrameImage> frames = decode_raw_stream(read_input(a.frames));
  const ForegroundMask fg = foreground_mask(frames);
  LatentTensor latent;
  DownsampleFactors factors{a.factors[0], a.factors[1], a.factors[2]};
  if (a.latent) {
    read_input(*a.latent);
    latent = read_latent(*a.latent);
    factors = latent.factors;
  }
  const SkeletonMask mask = skeleton_latent_mask(fg, factors);
  if (!a.latent) {
    latent = LatentTensor(LatentShape{mask.t, mask.h, mask.w, *a.zero_latent_channels}, factors);
  }
  NoiseConfig cfg{a.sigma_max, a.seed, a.per_frame ? SigmaScope::kPerFrame : SigmaScope::kPerClip};
  const NoiseResult r = inject_targeted_noise(latent, mask, cfg);
  write_latent(a.out, r.latent);
  return {{"out", a.out.string()},
          {"sidecar", latent_sidecar_path(a.out).string()},
          {"shape", {latent.shape.t, latent.shape.h, latent.shape.w, latent.shape.c}},
          {"masked_cells", mask.count()},
          {"total_cells", latent.shape.cells()},
          {"sigmas", r.sigmas}};
}

json run_segment(const SegmentArgs& a) {
  std::vector<VideoMeta> videos;
  const auto split = split_from_string(a.split);
  if (!split) throw UsageError("--split must be 'train' or 'val'");
  if (a.frames) {
    VideoMeta m;
    m.video_id = a.video_id;
    m.frame_count = *a.frames;
    m.fps = a.canvas.fps;
    m.width = a.canvas.width;
    m.height = a.canvas.height;
    m.split = *split;
    videos.push_back(m);
  } else if (a.videos) {
    std::istringstream in = input_stream(*a.videos);
    for_each_jsonl(in, [&](std::size_t, const json& j) { videos.push_back(j.get<VideoMeta>()); });
  } else {
    throw UsageError("segment: one of --frames or --videos is required");
  }
  std::optional<PoseVideo> poses;
  if (a.poses) {
    if (!a.frames) throw UsageError("segment: --poses requires --frames");
    std::istringstream in = input_stream(*a.poses);
    poses = read_pose_jsonl(in, a.canvas.width, a.canvas.height, a.canvas.fps, SkeletonSchema::make_default());
  }
  ClipManifest manifest;
  manifest.config = {{"clip_len", a.clip_len}, {"overlap", a.overlap}, {"fps", a.canvas.fps}};
  for (const VideoMeta& v : videos) {
    for (ClipRecord& c : segment_clips(v, a.clip_len, a.overlap)) {
      if (poses) c.object_score = object_count_score(slice_pose_video(*poses, c.start_frame, c.length));
      manifest.clips.push_back(std::move(c));
    }
  }
  json starts = json::array();
  if (videos.size() == 1) {
    for (const ClipRecord& c : manifest.clips) starts.push_back(c.start_frame);
  }
  if (a.out) write_file_atomic(*a.out, write_manifest(manifest));
  json j = {{"videos", videos.size()}, {"clips", manifest.clips.size()}};
  if (videos.size() == 1) j["starts"] = starts;
  if (a.out) j["out"] = a.out->string();
  return j;
}

json run_filter(const FilterArgs& a) {
  const ClipManifest in = load_manifest(a.manifest);
  const ClipManifest out = filter_manifest(in);
  write_file_atomic(a.out, write_manifest(out));
  return {{"input_clips", in.clips.size()}, {"kept_clips", out.clips.size()}, {"out", a.out.string()}};
}

json run_split(const SplitArgs& a) {
  ClipManifest m = assign_splits(load_manifest(a.manifest), a.train, a.val, a.seed);
  json j;
  if (a.captions) {
    CaptionReport rep;
    m = attach_captions(m, read_captions(*a.captions), &rep);
    for (const std::string& w : rep.warnings) spdlog::warn("{}", w);
    j["captions"] = {{"applied", rep.applied},
                     {"missing", rep.missing},
                     {"coverage", rep.coverage},
                     {"warnings", rep.warnings}};
  }
  write_file_atomic(a.out, write_manifest(m));
  std::size_t train = 0;
  for (const ClipRecord& c : m.clips) train += c.split == Split::kTrain;
  j["train"] = train;
  j["val"] = m.clips.size() - train;
  j["out"] = a.out.string();
  return j;
}

json run_metrics(const MetricsArgs& a, int jobs) {
  switch (a.kind) {
    case MetricKind::kMinAde: {
      const Trajectory2D gt = read_single_trajectory(a.gt);
      auto samples = read_trajectories(a.samples);
      if (samples.size() < static_cast<std::size_t>(a.k)) {
        throw Error(ErrorKind::kInvalidInput, a.samples.string() + ": " + std::to_string(samples.size()) +
                                                  " samples, --k " + std::to_string(a.k) + " requested");
      }
      samples.resize(static_cast<std::size_t>(a.k));
      return {{"metric", "minade"}, {"k", a.k}, {"align", a.align},
              {"min_ade_m", min_ade_k(gt, samples, parse_alignment(a.align))}};
    }
    case MetricKind::kApd: {
      auto samples = read_trajectories(a.samples);
      if (samples.size() < static_cast<std::size_t>(a.k)) {
        throw Error(ErrorKind::kInvalidInput, a.samples.string() + ": fewer samples than --k");
      }
      samples.resize(static_cast<std::size_t>(a.k));
      return {{"metric", "apd"}, {"k", a.k}, {"apd_cm", apd_k(samples)}};
    }
    case MetricKind::kEval: {
      std::istringstream in = input_stream(a.scenes);
      const auto scenes = read_scene_samples(in);
      json j = evaluation_report(evaluate_scenes(scenes, parse_alignment(a.align), jobs));
      j["metric"] = "eval";
      return j;
    }
    case MetricKind::kAde: {
      const Trajectory2D ta = read_single_trajectory(a.a);
      const Trajectory2D tb = read_single_trajectory(a.b);
      return {{"metric", "ade"}, {"align", a.align}, {"ade_m", ade(ta, tb, parse_alignment(a.align))}};
    }
    case MetricKind::kFrechet: {
      const FeatureSet fa = read_features(a.a);
      const FeatureSet fb = read_features(a.b);
      return {{"metric", "frechet"}, {"eps", a.eps}, {"distance", frechet_distance(fa, fb, a.eps)}};
    }
    case MetricKind::kControl: {
      std::istringstream gin = input_stream(a.gt);
      std::istringstream din = input_stream(a.detected);
      const auto gt = read_tracks_jsonl(gin);
      const auto det = read_tracks_jsonl(din);
      json per = json::array();
      double sum = 0.0;
      for (const Track& g : gt) {
        std::optional<Track> match;
        for (const Track& d : det) {
          if (d.track_id == g.track_id) match = d;
        }
        const double s = object_control_score(g, match, a.frames);
        sum += s;
        per.push_back({{"track", g.track_id}, {"score", s}});
      }
      json j = {{"metric", "control"}, {"frames", a.frames}, {"tracks", per}};
      j["mean"] = gt.empty() ? json(nullptr) : json(sum / static_cast<double>(gt.size()));
      return j;
    }
    case MetricKind::kSuccess: {
      const auto answers = read_answers(a.answers);
      const auto yes = std::count(answers.begin(), answers.end(), Answer::kYes);
      return {{"metric", "success"}, {"answers", answers.size()}, {"yes", yes},
              {"success_rate", success_rate(answers)}};
    }
  }
  throw UsageError("unknown metric");
}

json run_synth(const SynthArgs& a) {
  const auto kind = scenario_kind_from_string(a.scenario);
  if (!kind) throw UsageError("--scenario must be straight, left-turn or crossing");
  Scenario s;
  s.kind = *kind;
  s.seed = a.seed;
  s.ego_speed = a.speed;
  s.duration = a.duration;
  s.fps = a.canvas.fps;
  s.yaw_rate = a.yaw_rate;
  const CameraIntrinsics k{a.fov_deg, a.canvas.width, a.canvas.height};
  const SyntheticScene scene = generate_scene(s, k);
  std::filesystem::create_directories(a.out);
  const Path poses = a.out / "poses.jsonl";
  const Path traj = a.out / "trajectory.jsonl";
  const Path tracks = a.out / "tracks.jsonl";
  const Path meta = a.out / "scene.json";
  write_file_atomic(poses, write_pose_jsonl(scene.poses));
  write_file_atomic(traj, write_trajectory_jsonl(scene.trajectory));
  write_file_atomic(tracks, write_tracks_jsonl(scene.tracks));
  json m = {{"scenario", a.scenario}, {"seed", a.seed},        {"speed", a.speed},
            {"duration", a.duration}, {"fps", a.canvas.fps},    {"yaw_rate", a.yaw_rate},
            {"intrinsics", k},        {"frames", scene.poses.frames.size()}};
  if (scene.crossing_z) m["crossing_z"] = *scene.crossing_z;
  if (scene.pedestrian_id) m["pedestrian_id"] = *scene.pedestrian_id;
  write_file_atomic(meta, m.dump(2) + "\n");
  return {{"frames", scene.poses.frames.size()},
          {"tracks", scene.tracks.size()},
          {"files", {poses.string(), traj.string(), tracks.string(), meta.string()}}};
}

int run_serve_study(const ServeStudyArgs& a, std::ostream& out) {
  StudyConfig cfg;
  try {
    cfg = json::parse(read_input(a.config)).get<StudyConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, a.config.string() + ": " + e.what());
  }
  if (a.ui) cfg.ui_dir = *a.ui;
  std::string addr = "127.0.0.1:8080";
  if (a.addr) {
    addr = *a.addr;
  } else if (const char* env = std::getenv("MAD_STUDY_ADDR"); env != nullptr && *env != '\0') {
    addr = env;
  }
  const auto [host, port] = parse_listen_address(addr);
  StudyState state(cfg, std::random_device{}());
  if (!cfg.log_path.empty()) state.replay(cfg.log_path);
  StudyServer server(state);
  if (!server.bind(host, port)) throw Error(ErrorKind::kIo, "cannot bind " + addr);
  out << json{{"status", "listening"},
              {"host", host},
              {"port", server.bound_port()},
              {"records", state.records().size()},
              {"cells", state.cell_count()}}
             .dump()
      << std::endl;
  spdlog::info("serving study on {}:{}", host, server.bound_port());
  return server.serve() ? kExitOk : kExitRuntime;
}

void init_logging() {
  static const bool done = [] {
    auto logger = spdlog::stderr_color_mt("mad");
    spdlog::set_default_logger(logger);
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("MAD_LOG"); env != nullptr && *env != '\0') {
      level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
    return true;
  }();
  (void)done;
}

}  // namespace

Command parse(const std::vector<std::string>& args) {
  Command cmd;
  cmd.jobs = default_jobs();
  CLI::App app{"Motion-as-animatic conditioning toolkit", "mad"};
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.require_subcommand(1);
  app.add_option("--jobs,-j", cmd.jobs, "Worker threads for per-frame/per-clip work")
      ->check(CLI::PositiveNumber);

  auto* rp = app.add_subcommand("render-pose", "Rasterize a keypoint JSON Lines file into pose frames");
  rp->add_option("--poses", cmd.render_pose.poses, "Keypoint JSON Lines file")->required();
  rp->add_option("--schema", cmd.render_pose.schema, "Skeleton schema JSON (default: built-in)");
  add_canvas(rp, cmd.render_pose.canvas);
  rp->add_option("--line-width", cmd.render_pose.line_width)->capture_default_str()->check(CLI::PositiveNumber);
  rp->add_option("--joint-radius", cmd.render_pose.joint_radius)->capture_default_str()->check(CLI::NonNegativeNumber);
  rp->add_option("--min-confidence", cmd.render_pose.min_confidence)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  add_frame_output(rp, cmd.render_pose.out);

  auto* re = app.add_subcommand("render-ego", "Render the skybox and particle ego-motion video");
  re->add_option("--trajectory", cmd.render_ego.trajectory, "Camera trajectory JSON Lines file")->required();
  auto* ego_cfg = re->add_option("--config", cmd.render_ego.config, "Render config JSON");
  add_canvas(re, cmd.render_ego.canvas, false);
  re->add_option("--fov", cmd.render_ego.fov_deg, "Horizontal field of view, degrees")->capture_default_str();
  auto* ego_seed = re->add_option("--seed", cmd.render_ego.seed, "Particle seed")->capture_default_str();
  re->add_option("--density", cmd.render_ego.density, "Particles per cubic meter")->check(CLI::NonNegativeNumber);
  re->add_flag("--no-particles", cmd.render_ego.no_particles, "Skybox only");
  ego_cfg->excludes(ego_seed);
  add_frame_output(re, cmd.render_ego.out);

  auto* ro = app.add_subcommand("render-objects", "Render tracked bounding boxes as colored outlines");
  ro->add_option("--tracks", cmd.render_objects.tracks, "Track JSON Lines file")->required();
  add_canvas(ro, cmd.render_objects.canvas);
  ro->add_option("--frames", cmd.render_objects.frames, "Frame count (default: last tracked frame + 1)");
  ro->add_option("--max-tracks", cmd.render_objects.max_tracks, "Render a seeded subset of this many tracks");
  ro->add_option("--seed", cmd.render_objects.seed, "Subset seed")->capture_default_str();
  add_frame_output(ro, cmd.render_objects.out);

  auto* in = app.add_subcommand("inject-noise", "Add Gaussian noise to latent cells covered by skeletons");
  auto* lat = in->add_option("--latent", cmd.inject_noise.latent, "Latent tensor file (with .json sidecar)");
  auto* zero = in->add_option("--zero-latent", cmd.inject_noise.zero_latent_channels,
                              "Start from a zero latent with this many channels")
                   ->check(CLI::PositiveNumber);
  lat->excludes(zero);
  zero->excludes(lat);
  in->add_option("--factors", cmd.inject_noise.factors, "Downsample factors t h w (with --zero-latent)")
      ->expected(3)
      ->delimiter(',')
      ->capture_default_str();
  in->add_option("--frames", cmd.inject_noise.frames, "Raw stream of rendered pose frames")->required();
  in->add_option("--sigma-max", cmd.inject_noise.sigma_max)->capture_default_str()->check(CLI::NonNegativeNumber);
  in->add_option("--seed", cmd.inject_noise.seed)->capture_default_str();
  in->add_flag("--per-frame", cmd.inject_noise.per_frame, "Draw sigma per latent frame instead of per clip");
  in->add_option("--out", cmd.inject_noise.out, "Output latent file")->required();

  auto* sg = app.add_subcommand("segment", "Cut videos into overlapping clips");
  auto* sg_frames = sg->add_option("--frames", cmd.segment.frames, "Frame count of a single video")
                        ->check(CLI::NonNegativeNumber);
  auto* sg_videos = sg->add_option("--videos", cmd.segment.videos, "JSON Lines of video metadata");
  sg_frames->excludes(sg_videos);
  sg_videos->excludes(sg_frames);
  sg->add_option("--video-id", cmd.segment.video_id)->capture_default_str();
  sg->add_option("--split", cmd.segment.split, "train or val")->capture_default_str();
  sg->add_option("--poses", cmd.segment.poses, "Keypoints of the single video, for object scores");
  add_canvas(sg, cmd.segment.canvas);
  sg->add_option("--clip-len", cmd.segment.clip_len)->capture_default_str();
  sg->add_option("--overlap", cmd.segment.overlap)->capture_default_str();
  sg->add_option("--out", cmd.segment.out, "Manifest output file");

  auto* fl = app.add_subcommand("filter", "Keep the top half of clips by object count");
  fl->add_option("--manifest", cmd.filter.manifest)->required();
  fl->add_option("--out", cmd.filter.out)->required();

  auto* sp = app.add_subcommand("split", "Sample train/val clips and attach captions");
  sp->add_option("--manifest", cmd.split.manifest)->required();
  sp->add_option("--out", cmd.split.out)->required();
  sp->add_option("--train", cmd.split.train, "Train clip quota")->required();
  sp->add_option("--val", cmd.split.val, "Val clip quota")->required();
  sp->add_option("--seed", cmd.split.seed)->capture_default_str();
  sp->add_option("--captions", cmd.split.captions, "Captions: JSON object or JSON Lines {clip_id, caption}");

  auto* mt = app.add_subcommand("metrics", "Evaluation metrics");
  mt->require_subcommand(1);
  auto& m = cmd.metrics;
  auto* minade = mt->add_subcommand("minade", "minADE@k against a ground-truth trajectory");
  minade->add_option("--gt", m.gt)->required();
  minade->add_option("--samples", m.samples)->required();
  minade->add_option("--k", m.k)->capture_default_str()->check(CLI::PositiveNumber);
  minade->add_option("--align", m.align, "none or first-pose")->capture_default_str();
  auto* apd = mt->add_subcommand("apd", "APD@k over sampled trajectories (cm)");
  apd->add_option("--samples", m.samples)->required();
  apd->add_option("--k", m.k)->capture_default_str()->check(CLI::Range(2, 1 << 20));
  auto* eval = mt->add_subcommand("eval", "Per-scene and aggregate minADE/APD");
  eval->add_option("--scenes", m.scenes, "JSON Lines {scene, gt, samples}")->required();
  eval->add_option("--align", m.align)->capture_default_str();
  auto* ade_cmd = mt->add_subcommand("ade", "ADE between two trajectories");
  ade_cmd->add_option("--a", m.a)->required();
  ade_cmd->add_option("--b", m.b)->required();
  ade_cmd->add_option("--align", m.align)->capture_default_str();
  auto* fr = mt->add_subcommand("frechet", "Frechet distance between two feature sets");
  fr->add_option("--a", m.a, "JSON Lines of feature vectors")->required();
  fr->add_option("--b", m.b)->required();
  fr->add_option("--eps", m.eps)->capture_default_str();
  auto* ctl = mt->add_subcommand("control", "Object control IoU score per ground-truth track");
  ctl->add_option("--gt", m.gt)->required();
  ctl->add_option("--detected", m.detected)->required();
  ctl->add_option("--frames", m.frames)->required()->check(CLI::NonNegativeNumber);
  auto* suc = mt->add_subcommand("success", "Share of yes answers");
  suc->add_option("--answers", m.answers)->required();

  auto* sy = app.add_subcommand("synth", "Generate a deterministic synthetic driving scene");
  sy->add_option("--scenario", cmd.synth.scenario, "straight, left-turn or crossing")->capture_default_str();
  sy->add_option("--seed", cmd.synth.seed)->capture_default_str();
  sy->add_option("--speed", cmd.synth.speed, "Ego speed, m/s")->capture_default_str();
  sy->add_option("--duration", cmd.synth.duration, "Seconds")->capture_default_str();
  sy->add_option("--yaw-rate", cmd.synth.yaw_rate, "rad/s, left-turn only")->capture_default_str();
  add_canvas(sy, cmd.synth.canvas);
  sy->add_option("--fov", cmd.synth.fov_deg)->capture_default_str();
  sy->add_option("--out", cmd.synth.out, "Output directory")->capture_default_str();

  auto* ss = app.add_subcommand("serve-study", "Run the pairwise preference study service");
  ss->add_option("--config", cmd.serve_study.config, "Study config JSON")->required();
  ss->add_option("--addr", cmd.serve_study.addr, "host:port (default: $MAD_STUDY_ADDR or 127.0.0.1:8080)");
  ss->add_option("--ui", cmd.serve_study.ui, "Static UI bundle directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream text;
    app.exit(e, text, text);
    throw HelpRequested{text.str()};
  } catch (const CLI::CallForAllHelp& e) {
    std::ostringstream text;
    app.exit(e, text, text);
    throw HelpRequested{text.str()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const std::pair<CLI::App*, Subcommand> subs[] = {
      {rp, Subcommand::kRenderPose}, {re, Subcommand::kRenderEgo}, {ro, Subcommand::kRenderObjects},
      {in, Subcommand::kInjectNoise}, {sg, Subcommand::kSegment},  {fl, Subcommand::kFilter},
      {sp, Subcommand::kSplit},       {mt, Subcommand::kMetrics},  {sy, Subcommand::kSynth},
      {ss, Subcommand::kServeStudy}};
  for (const auto& [app_sub, kind] : subs) {
    if (app_sub->parsed()) cmd.sub = kind;
  }
  const std::pair<CLI::App*, MetricKind> metric_subs[] = {
      {minade, MetricKind::kMinAde}, {apd, MetricKind::kApd},         {eval, MetricKind::kEval},
      {ade_cmd, MetricKind::kAde},   {fr, MetricKind::kFrechet},      {ctl, MetricKind::kControl},
      {suc, MetricKind::kSuccess}};
  for (const auto& [app_sub, kind] : metric_subs) {
    if (app_sub->parsed()) cmd.metrics.kind = kind;
  }

  // Cross-flag checks that do not need any file.
  if (cmd.sub == Subcommand::kSegment) {
    if (cmd.segment.clip_len < 1) throw Error(ErrorKind::kConfig, "--clip-len must be >= 1");
    if (cmd.segment.overlap < 0) throw Error(ErrorKind::kConfig, "--overlap must be >= 0");
    if (cmd.segment.overlap >= cmd.segment.clip_len) {
      throw Error(ErrorKind::kConfig, "--overlap " + std::to_string(cmd.segment.overlap) +
                                          ": overlap < clip-len required (clip-len " +
                                          std::to_string(cmd.segment.clip_len) + ")");
    }
    if (!cmd.segment.frames && !cmd.segment.videos) throw UsageError("segment: --frames or --videos is required");
  }
  if (cmd.sub == Subcommand::kInjectNoise && !cmd.inject_noise.latent && !cmd.inject_noise.zero_latent_channels) {
    throw UsageError("inject-noise: one of --latent or --zero-latent is required");
  }
  auto frame_out = [](const FrameOutput& o, const char* name) {
    if (!o.png_dir && !o.raw_file) throw UsageError(std::string(name) + ": one of --out or --raw is required");
  };
  if (cmd.sub == Subcommand::kRenderPose) frame_out(cmd.render_pose.out, "render-pose");
  if (cmd.sub == Subcommand::kRenderEgo) frame_out(cmd.render_ego.out, "render-ego");
  if (cmd.sub == Subcommand::kRenderObjects) frame_out(cmd.render_objects.out, "render-objects");
  if (cmd.sub == Subcommand::kMetrics && cmd.metrics.align != "none" && cmd.metrics.align != "first-pose") {
    throw UsageError("--align must be 'none' or 'first-pose'");
  }
  if (cmd.sub == Subcommand::kSynth && !scenario_kind_from_string(cmd.synth.scenario)) {
    throw UsageError("--scenario must be straight, left-turn or crossing");
  }
  return cmd;
}

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  auto fail = [&](int code, std::string_view kind, const std::string& msg) {
    err << json{{"status", "error"}, {"kind", kind}, {"message", msg}}.dump() << std::endl;
    spdlog::debug("exit {}: {}", code, msg);
    return code;
  };
  try {
    json summary;
    switch (cmd.sub) {
      case Subcommand::kRenderPose: summary = run_render_pose(cmd.render_pose, cmd.jobs); break;
      case Subcommand::kRenderEgo: summary = run_render_ego(cmd.render_ego, cmd.jobs); break;
      case Subcommand::kRenderObjects: summary = run_render_objects(cmd.render_objects, cmd.jobs); break;
      case Subcommand::kInjectNoise: summary = run_inject_noise(cmd.inject_noise); break;
      case Subcommand::kSegment: summary = run_segment(cmd.segment); break;
      case Subcommand::kFilter: summary = run_filter(cmd.filter); break;
      case Subcommand::kSplit: summary = run_split(cmd.split); break;
      case Subcommand::kMetrics: summary = run_metrics(cmd.metrics, cmd.jobs); break;
      case Subcommand::kSynth: summary = run_synth(cmd.synth); break;
      case Subcommand::kServeStudy: return run_serve_study(cmd.serve_study, out);
    }
    summary["status"] = "ok";
    out << summary.dump() << std::endl;
    return kExitOk;
  } catch (const InputError& e) {
    return fail(kExitUsage, "input", e.what());
  } catch (const UsageError& e) {
    return fail(kExitUsage, "usage", e.what());
  } catch (const Error& e) {
    return fail(e.kind() == ErrorKind::kIo ? kExitRuntime : kExitUsage, to_string(e.kind()), e.what());
  } catch (const json::exception& e) {
    return fail(kExitUsage, "parse", e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "runtime", e.what());
  }
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();
  Command cmd;
  try {
    cmd = parse(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return kExitOk;
  } catch (const UsageError& e) {
    err << json{{"status", "error"}, {"kind", "usage"}, {"message", e.what()}}.dump() << std::endl;
    return kExitUsage;
  } catch (const Error& e) {
    err << json{{"status", "error"}, {"kind", to_string(e.kind())}, {"message", e.what()}}.dump()
        << std::endl;
    return kExitUsage;
  }
  return run(cmd, out, err);
}

}  // namespace mad::cli
