#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "mad/data_pipeline.hpp"
#include "mad/error.hpp"
#include "mad/rng.hpp"
#include "test_util.hpp"

using namespace mad;
using mad::test::kp;

namespace {

VideoMeta video(std::string id, int frames, Split split = Split::kTrain) {
  VideoMeta m;
  m.video_id = std::move(id);
  m.frame_count = frames;
  m.split = split;
  return m;
}

std::vector<ClipRecord> scored(const std::vector<double>& scores) {
  std::vector<ClipRecord> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ClipRecord c;
    c.clip_id = make_clip_id("v", static_cast<int>(i));
    c.video_id = "v";
    c.length = 120;
    c.start_frame = static_cast<int>(i);
    c.object_score = scores[i];
    out.push_back(c);
  }
  return out;
}

std::set<std::string> ids(const std::vector<ClipRecord>& clips) {
  std::set<std::string> s;
  for (const auto& c : clips) s.insert(c.clip_id);
  return s;
}

PoseFrame frame_with(int index, int cars, int lanes) {
  PoseFrame f{index, {}};
  for (int i = 0; i < cars; ++i) f.agents.push_back({i, AgentClass::kCar, {kp(0, 0)}});
  for (int i = 0; i < lanes; ++i) f.agents.push_back({100 + i, AgentClass::kLaneLine, {kp(0, 0)}});
  return f;
}

}  // namespace

TEST_CASE("segmentation examples") {
  CHECK(segment_clips(video("a", 120)).size() == 1);
  CHECK(segment_clips(video("a", 119)).empty());
  const auto clips = segment_clips(video("a", 600));
  REQUIRE(clips.size() == 11);
  for (int i = 0; i < 11; ++i) {
    CHECK(clips[i].start_frame == 48 * i);
    CHECK(clips[i].length == 120);
  }
  CHECK(clips[0].clip_id == "a_000000");
  CHECK(clips[10].clip_id == "a_000480");
}

TEST_CASE("segmentation matches the closed-form count") {
  const CounterRng rng(12);
  std::uint64_t c = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = static_cast<int>(rng.below(5000, c));
    const int len = 1 + static_cast<int>(rng.below(200, c));
    const int overlap = static_cast<int>(rng.below(static_cast<std::uint64_t>(len), c));
    const int stride = len - overlap;
    const std::size_t expect = n < len ? 0 : static_cast<std::size_t>((n - len) / stride + 1);
    const auto clips = segment_clips(video("v", n), len, overlap);
    REQUIRE(clips.size() == expect);
    for (const auto& clip : clips) CHECK(clip.start_frame + clip.length <= n);
  }
}

TEST_CASE("segmentation config errors") {
  try {
    segment_clips(video("a", 600), 120, 120);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
  }
  CHECK_THROWS_AS(segment_clips(video("a", 600), 0, 0), Error);
  CHECK_THROWS_AS(segment_clips(video("a", 600), 10, -1), Error);
}

TEST_CASE("object count score") {
  PoseVideo empty{8, 8, 24, {frame_with(0, 0, 2), frame_with(1, 0, 0)}};
  CHECK(object_count_score(empty) == 0.0);
  PoseVideo three{8, 8, 24, {frame_with(0, 3, 1), frame_with(1, 3, 0)}};
  CHECK(object_count_score(three) == 3.0);
  PoseVideo mixed{8, 8, 24, {frame_with(0, 2, 0), frame_with(1, 4, 0), frame_with(2, 2, 3), frame_with(3, 4, 0)}};
  CHECK(object_count_score(mixed) == doctest::Approx((2 + 4 + 2 + 4) / 4.0));
  CHECK(object_count_score(PoseVideo{}) == 0.0);
}

TEST_CASE("slicing re-indexes frames from zero") {
  PoseVideo v{8, 8, 24, {}};
  for (int i = 0; i < 10; ++i) v.frames.push_back(frame_with(i, i, 0));
  const auto s = slice_pose_video(v, 4, 3);
  REQUIRE(s.frames.size() == 3);
  CHECK(s.frames[0].frame_index == 0);
  CHECK(s.frames[0].agents.size() == 4);
  CHECK(slice_pose_video(v, 8, 5).frames.size() == 2);
}

TEST_CASE("filter examples") {
  const auto kept = filter_clips(scored({1, 2, 3, 4}));
  std::vector<double> s;
  for (const auto& c : kept) s.push_back(c.object_score);
  CHECK(s == std::vector<double>{3, 4});
  CHECK(filter_clips(scored({5})).size() == 1);
  CHECK(filter_clips({}).empty());
  const auto tie = filter_clips(scored({2, 2, 2, 1}));
  REQUIRE(tie.size() == 2);
  CHECK(tie[0].clip_id == "v_000000");
  CHECK(tie[1].clip_id == "v_000001");
}

TEST_CASE("filter keeps the top half regardless of input order") {
  const CounterRng rng(31);
  std::uint64_t c = 0;
  std::vector<double> scores;
  for (int i = 0; i < 10000; ++i) scores.push_back(static_cast<double>(rng.below(50, c)));
  auto clips = scored(scores);
  const auto kept = filter_clips(clips);
  CHECK(kept.size() == 5000);
  const auto kept_ids = ids(kept);
  double min_kept = 1e9, max_dropped = -1e9;
  for (const auto& clip : clips) {
    if (kept_ids.count(clip.clip_id)) {
      min_kept = std::min(min_kept, clip.object_score);
    } else {
      max_dropped = std::max(max_dropped, clip.object_score);
    }
  }
  CHECK(min_kept >= max_dropped);
  for (std::size_t i = 1; i < kept.size(); ++i) CHECK(kept[i - 1].start_frame < kept[i].start_frame);

  const auto perm = seeded_permutation(clips.size(), CounterRng(5));
  std::vector<ClipRecord> shuffled;
  for (auto p : perm) shuffled.push_back(clips[p]);
  CHECK(ids(filter_clips(shuffled)) == kept_ids);
}

TEST_CASE("manifest filter is idempotent") {
  ClipManifest m;
  m.clips = scored({1, 5, 3, 2, 4});
  const auto once = filter_manifest(m);
  CHECK(once.clips.size() == 3);
  const auto twice = filter_manifest(once);
  CHECK(twice.clips == once.clips);
  CHECK(twice.config == once.config);
}

TEST_CASE("split sampling: quotas, reproducibility, no leakage") {
  ClipManifest m;
  for (int v = 0; v < 5; ++v) {
    for (const auto& c : segment_clips(video("t" + std::to_string(v), 240, Split::kTrain))) m.clips.push_back(c);
  }
  for (int v = 0; v < 2; ++v) {
    for (const auto& c : segment_clips(video("q" + std::to_string(v), 240, Split::kVal))) m.clips.push_back(c);
  }
  const auto a = assign_splits(m, 4, 3, 9);
  const auto b = assign_splits(m, 4, 3, 9);
  CHECK(a.clips == b.clips);
  std::set<std::string> train_videos, val_videos;
  std::size_t train = 0, val = 0;
  for (const auto& c : a.clips) {
    if (c.split == Split::kTrain) {
      ++train;
      train_videos.insert(c.video_id);
    } else {
      ++val;
      val_videos.insert(c.video_id);
    }
  }
  CHECK(train == 4);
  CHECK(val == 3);
  for (const auto& v : val_videos) CHECK(train_videos.count(v) == 0);

  const auto all = assign_splits(m, 1000, 1000, 1);
  CHECK(all.clips.size() == m.clips.size());

  ClipManifest only_train;
  only_train.clips = segment_clips(video("t", 240));
  std::size_t vals = 0;
  for (const auto& c : assign_splits(only_train, 100, 5, 1).clips) vals += c.split == Split::kVal;
  CHECK(vals == 0);

  ClipManifest leaky = only_train;
  leaky.clips[1].split = Split::kVal;
  CHECK_THROWS_AS(assign_splits(leaky, 4, 4, 1), Error);
}

TEST_CASE("captions: applied, missing and unknown ids") {
  ClipManifest m;
  m.clips = segment_clips(video("a", 216));
  REQUIRE(m.clips.size() == 3);
  CaptionReport r;
  const auto out = attach_captions(m, {{"a_000000", "a road"}, {"zzz", "ghost"}}, &r);
  CHECK(r.applied == 1);
  CHECK(r.missing == 2);
  CHECK(r.warnings.size() == 1);
  CHECK(r.coverage == doctest::Approx(1.0 / 3));
  CHECK(out.clips[0].caption == std::optional<std::string>("a road"));
  CHECK_FALSE(out.clips[1].caption.has_value());
}

TEST_CASE("manifest JSON Lines round trip and errors") {
  ClipManifest m;
  m.config = {{"clip_len", 120}};
  m.clips = segment_clips(video("a", 300));
  m.clips[1].caption = "text";
  m.clips[2].object_score = 2.5;
  const std::string text = write_manifest(m);
  std::istringstream in(text);
  const auto back = read_manifest(in);
  CHECK(back.clips == m.clips);
  CHECK(back.config == m.config);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_manifest(empty), Error);
  std::istringstream headless("{\"clip_id\":\"x\"}\n");
  CHECK_THROWS_AS(read_manifest(headless), Error);
}
