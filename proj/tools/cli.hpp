#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mad::cli {

enum class Subcommand {
  kRenderPose,
  kRenderEgo,
  kRenderObjects,
  kInjectNoise,
  kSegment,
  kFilter,
  kSplit,
  kMetrics,
  kSynth,
  kServeStudy,
};

enum class MetricKind { kMinAde, kApd, kEval, kAde, kFrechet, kControl, kSuccess };

using Path = std::filesystem::path;

// PNG sequence directory or single raw stream; exactly one is set.
struct FrameOutput {
  std::optional<Path> png_dir;
  std::optional<Path> raw_file;
};

struct Canvas {
  int width = 1056;
  int height = 704;
  double fps = 24.0;
};

struct RenderPoseArgs {
  Path poses;
  std::optional<Path> schema;
  Canvas canvas;
  int line_width = 2;
  int joint_radius = 3;
  double min_confidence = 0.3;
  FrameOutput out;
};

struct RenderEgoArgs {
  Path trajectory;
  std::optional<Path> config;
  Canvas canvas;
  double fov_deg = 90.0;
  std::uint64_t seed = 0;
  std::optional<double> density;
  bool no_particles = false;
  FrameOutput out;
};

struct RenderObjectsArgs {
  Path tracks;
  Canvas canvas;
  int frames = 0;
  std::optional<std::size_t> max_tracks;
  std::uint64_t seed = 0;
  FrameOutput out;
};

struct InjectNoiseArgs {
  std::optional<Path> latent;
  std::optional<int> zero_latent_channels;
  std::vector<int> factors = {1, 8, 8};
  Path frames;  // raw stream of rendered pose frames
  double sigma_max = 0.3;
  std::uint64_t seed = 0;
  bool per_frame = false;
  Path out;
};

struct SegmentArgs {
  std::optional<int> frames;
  std::optional<Path> videos;  // JSON Lines of {"video_id", "frame_count", ...}
  std::string video_id = "video";
  std::string split = "train";
  std::optional<Path> poses;   // single-video object scores
  Canvas canvas;
  int clip_len = 120;
  int overlap = 72;
  std::optional<Path> out;
};

struct FilterArgs {
  Path manifest;
  Path out;
};

struct SplitArgs {
  Path manifest;
  Path out;
  std::size_t train = 0;
  std::size_t val = 0;
  std::uint64_t seed = 0;
  std::optional<Path> captions;
};

struct MetricsArgs {
  MetricKind kind = MetricKind::kMinAde;
  Path gt;
  Path samples;
  Path a;
  Path b;
  Path scenes;
  Path detected;
  Path answers;
  int k = 6;
  int frames = 0;
  std::string align = "first-pose";
  double eps = 1e-6;
};

struct SynthArgs {
  std::string scenario = "straight";
  std::uint64_t seed = 0;
  double speed = 10.0;
  double duration = 5.0;
  double yaw_rate = 0.3;
  Canvas canvas;
  double fov_deg = 90.0;
  Path out = ".";
};

struct ServeStudyArgs {
  Path config;
  std::optional<std::string> addr;
  std::optional<Path> ui;
};

struct Command {
  Subcommand sub = Subcommand::kSynth;
  int jobs = 1;
  RenderPoseArgs render_pose;
  RenderEgoArgs render_ego;
  RenderObjectsArgs render_objects;
  InjectNoiseArgs inject_noise;
  SegmentArgs segment;
  FilterArgs filter;
  SplitArgs split;
  MetricsArgs metrics;
  SynthArgs synth;
  ServeStudyArgs serve_study;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by parse for --help; carries the rendered usage text.
struct HelpRequested {
  std::string text;
};

// args excludes the program name.
Command parse(const std::vector<std::string>& args);

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs the command, printing a JSON summary to `out` on success or a JSON
// error object to `err` on failure. Returns the process exit code.
int run(const Command& cmd, std::ostream& out, std::ostream& err);

// parse + run with exit-code mapping; what main() calls.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mad::cli
