#include "mad/data_pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "mad/error.hpp"
#include "mad/rng.hpp"
#include "mad/serialize.hpp"

namespace mad {

namespace {
constexpr std::uint64_t kTrainStream = 0x545241494e;  // "TRAIN"
constexpr std::uint64_t kValStream = 0x56414c;        // "VAL"
constexpr const char* kManifestKind = "clip_manifest";
}  // namespace

std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "val"; }

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  return std::nullopt;
}

std::string make_clip_id(const std::string& video_id, int start_frame) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", start_frame);
  return video_id + "_" + buf;
}

std::vector<ClipRecord> segment_clips(const VideoMeta& meta, int clip_len, int overlap) {
  if (clip_len < 1) throw Error(ErrorKind::kConfig, "clip_len must be >= 1");
  if (overlap < 0) throw Error(ErrorKind::kConfig, "overlap must be >= 0");
  if (overlap >= clip_len) throw Error(ErrorKind::kConfig, "overlap < clip-len required");
  if (meta.frame_count < 0) throw Error(ErrorKind::kInvalidInput, "frame_count must be >= 0");
  std::vector<ClipRecord> clips;
  const int stride = clip_len - overlap;
  for (long start = 0; start + clip_len <= meta.frame_count; start += stride) {
    ClipRecord c;
    c.clip_id = make_clip_id(meta.video_id, static_cast<int>(start));
    c.video_id = meta.video_id;
    c.start_frame = static_cast<int>(start);
    c.length = clip_len;
    c.split = meta.split;
    clips.push_back(std::move(c));
  }
  return clips;
}

PoseVideo slice_pose_video(const PoseVideo& video, int start_frame, int length) {
  if (start_frame < 0 || length < 0) throw Error(ErrorKind::kInvalidInput, "negative slice range");
  PoseVideo out{video.width, video.height, video.fps, {}};
  for (const PoseFrame& f : video.frames) {
    if (f.frame_index < start_frame || f.frame_index >= start_frame + length) continue;
    PoseFrame copy = f;
    copy.frame_index = f.frame_index - start_frame;
    out.frames.push_back(std::move(copy));
  }
  return out;
}

double object_count_score(const PoseVideo& clip_poses) {
  if (clip_poses.frames.empty()) return 0.0;
  std::size_t total = 0;
  for (const PoseFrame& f : clip_poses.frames) {
    total += static_cast<std::size_t>(std::count_if(
        f.agents.begin(), f.agents.end(),
        [](const AgentSkeleton& a) { return a.cls != AgentClass::kLaneLine; }));
  }
  return static_cast<double>(total) / static_cast<double>(clip_poses.frames.size());
}

std::vector<ClipRecord> filter_clips(const std::vector<ClipRecord>& clips) {
  const std::size_t keep = (clips.size() + 1) / 2;
  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (clips[a].object_score != clips[b].object_score) {
      return clips[a].object_score > clips[b].object_score;
    }
    if (clips[a].clip_id != clips[b].clip_id) return clips[a].clip_id < clips[b].clip_id;
    return a < b;
  });
  std::vector<bool> kept(clips.size(), false);
  for (std::size_t i = 0; i < keep; ++i) kept[order[i]] = true;
  std::vector<ClipRecord> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (kept[i]) out.push_back(clips[i]);
  }
  return out;
}

ClipManifest filter_manifest(const ClipManifest& manifest) {
  if (manifest.config.value("filtered", false)) return manifest;
  ClipManifest out;
  out.config = manifest.config;
  out.clips = filter_clips(manifest.clips);
  out.config["filtered"] = true;
  out.config["filter"] = {{"rule", "keep_top_half_by_object_score"},
                          {"input_clips", manifest.clips.size()},
                          {"kept_clips", out.clips.size()}};
  return out;
}

ClipManifest assign_splits(const ClipManifest& manifest, std::size_t train_quota,
                           std::size_t val_quota, std::uint64_t seed) {
  std::map<std::string, Split> video_split;
  for (const ClipRecord& c : manifest.clips) {
    auto [it, inserted] = video_split.emplace(c.video_id, c.split);
    if (!inserted && it->second != c.split) {
      throw Error(ErrorKind::kInvalidInput,
                  "video '" + c.video_id + "' has clips in both train and val splits");
    }
  }
  std::vector<std::size_t> train, val;
  for (std::size_t i = 0; i < manifest.clips.size(); ++i) {
    (manifest.clips[i].split == Split::kTrain ? train : val).push_back(i);
  }
  const CounterRng rng(seed);
  auto sample = [](const std::vector<std::size_t>& pool, std::size_t quota, const CounterRng& r) {
    if (pool.size() <= quota) return pool;
    auto perm = seeded_permutation(pool.size(), r);
    perm.resize(quota);
    std::sort(perm.begin(), perm.end());
    std::vector<std::size_t> picked;
    picked.reserve(quota);
    for (std::size_t p : perm) picked.push_back(pool[p]);
    return picked;
  };
  std::vector<std::size_t> picked = sample(train, train_quota, rng.substream(kTrainStream));
  const auto picked_val = sample(val, val_quota, rng.substream(kValStream));
  picked.insert(picked.end(), picked_val.begin(), picked_val.end());
  std::sort(picked.begin(), picked.end());

  ClipManifest out;
  out.config = manifest.config;
  out.config["split"] = {{"train_quota", train_quota},
                         {"val_quota", val_quota},
                         {"seed", seed},
                         {"train_available", train.size()},
                         {"val_available", val.size()}};
  for (std::size_t i : picked) out.clips.push_back(manifest.clips[i]);
  return out;
}

ClipManifest attach_captions(const ClipManifest& manifest,
                             const std::map<std::string, std::string>& captions,
                             CaptionReport* report) {
  CaptionReport rep;
  ClipManifest out = manifest;
  std::set<std::string> known;
  for (ClipRecord& c : out.clips) {
    known.insert(c.clip_id);
    if (auto it = captions.find(c.clip_id); it != captions.end()) {
      c.caption = it->second;
      ++rep.applied;
    }
  }
  for (const auto& [id, text] : captions) {
    if (!known.contains(id)) rep.warnings.push_back("caption for unknown clip_id '" + id + "'");
  }
  std::size_t with_caption = 0;
  for (const ClipRecord& c : out.clips) with_caption += c.caption.has_value();
  rep.missing = out.clips.size() - with_caption;
  rep.coverage = out.clips.empty() ? 0.0
                                   : static_cast<double>(with_caption) /
                                         static_cast<double>(out.clips.size());
  out.config["caption_coverage"] = rep.coverage;
  if (report != nullptr) *report = std::move(rep);
  return out;
}

ValidationReport validate(const ClipManifest& manifest) {
  ValidationReport r;
  std::set<std::string> ids;
  for (const ClipRecord& c : manifest.clips) {
    if (!ids.insert(c.clip_id).second) r.push_back({"unique clip ids", c.clip_id});
    if (c.start_frame < 0 || c.length < 1) r.push_back({"clip range", c.clip_id});
  }
  return r;
}

void to_json(nlohmann::json& j, const ClipRecord& c) {
  j = nlohmann::json{{"clip_id", c.clip_id},
                     {"video_id", c.video_id},
                     {"start_frame", c.start_frame},
                     {"length", c.length},
                     {"object_score", c.object_score},
                     {"split", std::string(to_string(c.split))}};
  j["caption"] = c.caption ? nlohmann::json(*c.caption) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ClipRecord& c) {
  j.at("clip_id").get_to(c.clip_id);
  j.at("video_id").get_to(c.video_id);
  j.at("start_frame").get_to(c.start_frame);
  j.at("length").get_to(c.length);
  c.object_score = j.value("object_score", 0.0);
  const auto split = split_from_string(j.at("split").get<std::string>());
  if (!split) throw Error(ErrorKind::kParse, "split must be 'train' or 'val'");
  c.split = *split;
  c.caption.reset();
  if (auto it = j.find("caption"); it != j.end() && !it->is_null()) c.caption = it->get<std::string>();
}

void to_json(nlohmann::json& j, const VideoMeta& v) {
  j = nlohmann::json{{"video_id", v.video_id}, {"frame_count", v.frame_count},
                     {"fps", v.fps},           {"width", v.width},
                     {"height", v.height},     {"split", std::string(to_string(v.split))}};
}

void from_json(const nlohmann::json& j, VideoMeta& v) {
  j.at("video_id").get_to(v.video_id);
  j.at("frame_count").get_to(v.frame_count);
  v.fps = j.value("fps", 24.0);
  v.width = j.value("width", 1056);
  v.height = j.value("height", 704);
  const auto split = split_from_string(j.value("split", std::string("train")));
  if (!split) throw Error(ErrorKind::kParse, "split must be 'train' or 'val'");
  v.split = *split;
}

std::string write_manifest(const ClipManifest& manifest) {
  std::string out =
      nlohmann::json{{"kind", kManifestKind}, {"version", 1}, {"config", manifest.config}}.dump();
  out += '\n';
  for (const ClipRecord& c : manifest.clips) {
    out += nlohmann::json(c).dump();
    out += '\n';
  }
  return out;
}

ClipManifest read_manifest(std::istream& in) {
  ClipManifest m;
  bool header = false;
  for_each_jsonl(in, [&](std::size_t, const nlohmann::json& j) {
    if (!header) {
      if (j.value("kind", "") != kManifestKind) {
        throw Error(ErrorKind::kParse, "expected clip manifest header");
      }
      m.config = j.value("config", nlohmann::json::object());
      header = true;
      return;
    }
    m.clips.push_back(j.get<ClipRecord>());
  });
  if (!header) throw Error(ErrorKind::kParse, "empty manifest (missing header line)");
  if (auto r = validate(m); !r.empty()) {
    throw Error(ErrorKind::kInvalidInput, "manifest: " + r.front().code + " " + r.front().detail);
  }
  return m;
}

}  // namespace mad
