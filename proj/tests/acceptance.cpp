// Acceptance run: one PASS/FAIL line per headline criterion, each with its
// wall-clock budget. Exit status is non-zero if any line fails.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "mad/camera.hpp"
#include "mad/data_pipeline.hpp"
#include "mad/ego_render.hpp"
#include "mad/latent_noise.hpp"
#include "mad/metrics.hpp"
#include "mad/pose_render.hpp"
#include "mad/rng.hpp"
#include "mad/study.hpp"
#include "mad/study_server.hpp"
#include "mad/synth_scenes.hpp"

#include <httplib.h>

using namespace mad;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(secs < budget_s, "over time budget");
  if (!c.ok) ++failures;
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(3);
  line << (c.ok ? "PASS" : "FAIL") << "  " << name << "  (" << secs << " s / " << budget_s << " s)";
  if (!c.ok) line << "  " << c.detail;
  std::cout << line.str() << std::endl;
}

// ---- oracles --------------------------------------------------------------

double oracle_ade(const Trajectory2D& a, const Trajectory2D& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    s += std::hypot(a.points[i].x() - b.points[i].x(), a.points[i].y() - b.points[i].y());
  }
  return s / a.points.size();
}

double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// Regularized Bradley-Terry by Newton's method, first strength pinned.
std::vector<double> newton_bt(std::vector<std::vector<double>> w, double prior) {
  const std::size_t n = w.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) w[i][j] += prior;
    }
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(theta.size(), theta.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double games = w[i][j] + w[j][i];
        const double p = 1.0 / (1.0 + std::exp(theta(j) - theta(i)));
        const double v = games * p * (1 - p);
        g(i) += w[i][j] - games * p;
        g(j) += w[j][i] - games * (1 - p);
        h(i, i) -= v;
        h(j, j) -= v;
        h(i, j) += v;
        h(j, i) += v;
      }
    }
    const Eigen::Index m = theta.size() - 1;
    const Eigen::VectorXd step = h.bottomRightCorner(m, m).ldlt().solve(-g.tail(m));
    theta.tail(m) += step;
    if (step.norm() < 1e-14) break;
  }
  std::vector<double> elo(n);
  for (std::size_t i = 0; i < n; ++i) elo[i] = 1500.0 + 400.0 / std::log(10.0) * (theta(i) - theta.mean());
  return elo;
}

Trajectory2D random_traj(const CounterRng& rng, std::uint64_t& c, int n) {
  Trajectory2D t;
  for (int i = 0; i < n; ++i) t.points.emplace_back(20 * rng.uniform(c++) - 10, 20 * rng.uniform(c++) - 10);
  return t;
}

bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof(float)) == 0; }

PreferenceRecord rec(const std::string& a, const std::string& b, int rating) {
  PreferenceRecord r;
  r.model_a = a;
  r.model_b = b;
  r.rating = rating;
  r.presented_left = a;
  r.scene_id = "s";
  r.rater_id = "r";
  return r;
}

double elo_of(const RatingTable& t, const std::string& m) {
  for (const auto& r : t.ratings) {
    if (r.model == m) return r.elo;
  }
  throw std::runtime_error("missing model " + m);
}

// ---- criteria -------------------------------------------------------------

void segmentation(Check& c) {
  VideoMeta v;
  v.video_id = "v";
  v.frame_count = 600;
  const auto clips = segment_clips(v, 120, 72);
  c.require(clips.size() == 11, "600 frames did not give 11 clips");
  for (std::size_t i = 0; i < clips.size(); ++i) {
    c.require(clips[i].start_frame == static_cast<int>(48 * i), "clip start mismatch");
  }
  const CounterRng rng(1);
  std::uint64_t k = 0;
  for (int i = 0; i < 1000; ++i) {
    v.frame_count = static_cast<int>(rng.below(100000, k));
    const std::size_t expect = v.frame_count < 120 ? 0 : static_cast<std::size_t>((v.frame_count - 120) / 48 + 1);
    c.require(segment_clips(v, 120, 72).size() == expect, "closed-form count mismatch");
  }
}

void filtering(Check& c) {
  const CounterRng rng(2);
  std::uint64_t k = 0;
  std::vector<ClipRecord> clips(10000);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    clips[i].clip_id = make_clip_id("v" + std::to_string(i % 37), static_cast<int>(i));
    clips[i].video_id = "v" + std::to_string(i % 37);
    clips[i].length = 120;
    clips[i].object_score = static_cast<double>(rng.below(40, k)) / 4.0;
  }
  const auto kept = filter_clips(clips);
  c.require(kept.size() == 5000, "kept size is not ceil(n/2)");
  std::set<std::string> ids;
  for (const auto& x : kept) ids.insert(x.clip_id);
  double min_kept = 1e300, max_dropped = -1e300;
  for (const auto& x : clips) {
    if (ids.count(x.clip_id)) {
      min_kept = std::min(min_kept, x.object_score);
    } else {
      max_dropped = std::max(max_dropped, x.object_score);
    }
  }
  c.require(min_kept >= max_dropped, "a dropped clip outscores a kept one");
  for (std::uint64_t s = 0; s < 3; ++s) {
    std::vector<ClipRecord> shuffled;
    for (auto p : seeded_permutation(clips.size(), CounterRng(100 + s))) shuffled.push_back(clips[p]);
    std::set<std::string> again;
    for (const auto& x : filter_clips(shuffled)) again.insert(x.clip_id);
    c.require(again == ids, "kept set changes under shuffling");
  }
}

void targeted_noise(Check& c) {
  const CounterRng rng(3);
  std::uint64_t k = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const LatentShape s{1 + static_cast<int>(rng.below(4, k)), 1 + static_cast<int>(rng.below(6, k)),
                        1 + static_cast<int>(rng.below(6, k)), 1 + static_cast<int>(rng.below(4, k))};
    LatentTensor lt(s, {});
    for (auto& v : lt.values) v = static_cast<float>(4.0 * rng.uniform(k++) - 2.0);
    SkeletonMask m{s.t, s.h, s.w, std::vector<std::uint8_t>(s.cells())};
    const double density = rng.uniform(k++);
    for (auto& b : m.bits) b = rng.uniform(k++) < density;
    const auto out = inject_targeted_noise(lt, m, NoiseConfig{0.3, static_cast<std::uint64_t>(trial)});
    for (std::size_t i = 0; i < lt.values.size(); ++i) {
      if (!m.bits[i / s.c]) c.require(same_bits(out.latent.values[i], lt.values[i]), "unmasked cell changed");
    }
  }

  const int n = 1024;
  const LatentShape s{1, 16, 16, 4};
  const SkeletonMask all{1, 16, 16, std::vector<std::uint8_t>(256, 1)};
  const boost::math::chi_squared chi(n - 1);
  const double lo = boost::math::quantile(chi, 0.005), hi = boost::math::quantile(chi, 0.995);
  int inside = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const LatentTensor zero(s, {});
    const auto out = inject_targeted_noise(zero, all, NoiseConfig{0.3, 50000u + trial});
    const double sigma = out.sigmas.at(0);
    double mean = 0.0;
    for (float v : out.latent.values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (float v : out.latent.values) ss += (v - mean) * (v - mean);
    inside += ss / (sigma * sigma) >= lo && ss / (sigma * sigma) <= hi;
  }
  c.require(inside >= 490, "chi-square coverage " + std::to_string(inside) + "/500");

  std::vector<double> sig;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) sig.push_back(draw_sigmas(NoiseConfig{0.3, seed}, 1).at(0));
  std::sort(sig.begin(), sig.end());
  double d = 0.0;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const double f = sig[i] / 0.3;
    d = std::max({d, (i + 1) / 1000.0 - f, f - i / 1000.0});
  }
  c.require(ks_p_value(d, sig.size()) > 0.01, "sigma fails KS against U(0, 0.3)");
}

void ego_motion(Check& c) {
  const int w = 512, h = 512, frames = 16;
  const CameraIntrinsics k{90.0, w, h};
  const SkyboxConfig sky;

  CameraTrajectory yaw;
  yaw.intrinsics = k;
  for (int i = 0; i < frames; ++i) {
    CameraPose p;
    p.orientation = camera::from_heading(0.02 * i);
    p.timestamp = i / 24.0;
    yaw.poses.push_back(p);
  }
  EgoRenderConfig cfg;
  cfg.particles.density = 0.0;
  const auto yaw_frames = render_ego_video(yaw, cfg);
  const double pi = std::numbers::pi;
  const double dlon = 2 * pi / sky.cells_longitude, dlat = pi / sky.cells_latitude;
  for (int f = 1; f < frames; ++f) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < sky.cells_longitude; ++i) {
      for (int j = 1; j < sky.cells_latitude; ++j) {
        const double lon = -pi + i * dlon, lat = -pi / 2 + j * dlat;
        const Eigen::Vector3d dir(std::cos(lat) * std::sin(lon), -std::sin(lat), std::cos(lat) * std::cos(lon));
        const auto a = camera::project(yaw.poses[f - 1], k, dir);
        const auto b = camera::project(yaw.poses[f], k, dir);
        if (!a || !b) continue;
        auto inside = [&](const Eigen::Vector2d& p) { return p.x() >= 3 && p.x() < w - 3 && p.y() >= 3 && p.y() < h - 3; };
        if (!inside(*a) || !inside(*b)) continue;
        // The tracked corner must be a real checkerboard corner in the frame.
        const auto& img = yaw_frames[f];
        const int u = static_cast<int>(std::floor(b->x())), v = static_cast<int>(std::floor(b->y()));
        const Rgb q0 = img.at(u - 2, v - 2), q1 = img.at(u + 2, v - 2), q2 = img.at(u - 2, v + 2);
        c.require(q0 != q1 || q0 != q2, "projected corner is not a checkerboard corner");
        sum += b->x() - a->x();
        ++n;
      }
    }
    c.require(n > 0 && sum / n > 0.0, "mean corner displacement not positive at frame " + std::to_string(f));
  }

  CameraTrajectory fwd;
  fwd.intrinsics = k;
  for (int i = 0; i < frames; ++i) {
    CameraPose p;
    p.position = {0.0, 0.0, 0.5 * i};
    p.timestamp = i / 24.0;
    fwd.poses.push_back(p);
  }
  const auto still = render_ego_video(fwd, cfg);
  for (const auto& f : still) c.require(f == still.front(), "translation changed a frame without particles");

  ParticleField pf;
  pf.seed = 4;
  pf.density = 0.05;
  pf.bounds = default_particle_bounds(fwd);
  EgoRenderConfig with;
  with.particles = pf;
  const auto moving = render_ego_video(fwd, with);
  c.require(!(moving[0] == moving[1]), "particles did not move");
  const auto pts = particle_positions(pf);
  const Eigen::Vector2d centre(0.5 * w, 0.5 * h);
  for (int f = 1; f < frames; ++f) {
    double sum = 0.0;
    int n = 0;
    for (const auto& p : pts) {
      const auto a = camera::project(fwd.poses[f - 1], k, p);
      const auto b = camera::project(fwd.poses[f], k, p);
      if (!a || !b || a->x() < 0 || a->x() >= w || a->y() < 0 || a->y() >= h) continue;
      sum += (*b - centre).norm() - (*a - centre).norm();
      ++n;
    }
    c.require(n > 0 && sum / n > 0.0, "radial divergence not positive at frame " + std::to_string(f));
  }
}

void metric_oracles(Check& c) {
  const CounterRng rng(5);
  std::uint64_t k = 0;
  for (int scene = 0; scene < 1000; ++scene) {
    const auto gt = random_traj(rng, k, 12);
    std::vector<Trajectory2D> s;
    for (int i = 0; i < 6; ++i) s.push_back(random_traj(rng, k, 12));
    double best = 1e300, pairs = 0.0;
    for (int i = 0; i < 6; ++i) {
      best = std::min(best, oracle_ade(gt, s[i]));
      for (int j = i + 1; j < 6; ++j) pairs += oracle_ade(s[i], s[j]);
    }
    c.require(std::abs(min_ade_k(gt, s, Alignment::kNone) - best) < 1e-9, "minADE@6 mismatch");
    c.require(std::abs(apd_k(s) - 100.0 * pairs / 15.0) < 1e-9, "APD@6 mismatch");
  }
  c.require(std::abs(iou({0, 0, 2, 2}, {1, 1, 3, 3}) - 1.0 / 7.0) < 1e-12, "IoU 1/7");
  c.require(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0, "IoU identical");
  c.require(iou({0, 0, 1, 1}, {5, 5, 6, 6}) == 0.0, "IoU disjoint");
  c.require(std::abs(iou({0, 0, 4, 2}, {2, 0, 6, 2}) - 4.0 / 12.0) < 1e-12, "IoU half overlap");

  FeatureSet a(2, 1), b(2, 1);
  a << -1, 1;
  b << 0, 2;
  c.require(std::abs(frechet_distance(a, b) - 1.0) < 1e-6, "Frechet 1D closed form");
  FeatureSet a2(2, 1), b2(2, 1);
  a2 << -1, 1;
  b2 << -3, 3;
  // Variances 2 and 18, each regularized by eps.
  const double eps = 1e-6;
  c.require(std::abs(frechet_distance(a2, b2, eps) - std::pow(std::sqrt(2 + eps) - std::sqrt(18 + eps), 2)) < 1e-6,
            "Frechet 1D variance term");

  const int d = 6;
  Eigen::VectorXd ma(d), mb(d);
  Eigen::MatrixXd ca = Eigen::MatrixXd::Zero(d, d), cb = Eigen::MatrixXd::Zero(d, d);
  double expect = 0.0;
  for (int j = 0; j < d; ++j) {
    ma(j) = rng.uniform(k++);
    mb(j) = rng.uniform(k++);
    ca(j, j) = 0.1 + rng.uniform(k++);
    cb(j, j) = 0.1 + rng.uniform(k++);
    expect += std::pow(ma(j) - mb(j), 2) + std::pow(std::sqrt(ca(j, j)) - std::sqrt(cb(j, j)), 2);
  }
  c.require(std::abs(frechet_distance_gaussian(ma, ca, mb, cb, 0.0) - expect) < 1e-6, "Frechet diagonal form");

  FeatureSet x(300, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal(k++);
  c.require(frechet_distance(x, x) < 1e-9, "Frechet of identical sets");
}

void rating_fit(Check& c) {
  const std::vector<std::string> m = {"a", "b", "c", "d", "e"};
  std::vector<PreferenceRecord> sym;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      for (int r : {-2, -1, 0, 0, 1, 2}) sym.push_back(rec(m[i], m[j], r));
    }
  }
  for (const auto& r : fit_ratings(sym, Criterion::kGeneral).ratings) {
    c.require(std::abs(r.elo - 1500.0) < 1e-6, "symmetric set not at 1500");
  }

  const std::vector<PreferenceRecord> ten(10, rec("a", "b", -1));
  const auto t = fit_ratings(ten, Criterion::kGeneral);
  const auto ref = newton_bt({{0, 10}, {0, 0}}, kPriorGamesPerPair / 2);
  c.require(std::abs(elo_of(t, "a") - ref[0]) < 1e-6 && std::abs(elo_of(t, "b") - ref[1]) < 1e-6,
            "ten-game case differs from the reference solver");

  const CounterRng rng(6);
  std::uint64_t k = 0;
  std::vector<PreferenceRecord> rs;
  for (int i = 0; i < 400; ++i) {
    std::size_t x = rng.below(5, k), y = rng.below(5, k);
    if (x == y) continue;
    if (x > y) std::swap(x, y);
    rs.push_back(rec(m[x], m[y], static_cast<int>(rng.below(5, k)) - 2));
  }
  const auto base = fit_ratings(rs, Criterion::kGeneral);
  std::vector<PreferenceRecord> shuffled;
  for (auto p : seeded_permutation(rs.size(), CounterRng(9))) shuffled.push_back(rs[p]);
  const auto perm = fit_ratings(shuffled, Criterion::kGeneral);
  auto rename = [](const std::string& s) { return std::string(1, char('z' - (s[0] - 'a'))); };
  std::vector<PreferenceRecord> relabeled;
  for (const auto& r : rs) relabeled.push_back(rec(rename(r.model_b), rename(r.model_a), -r.rating));
  const auto rel = fit_ratings(relabeled, Criterion::kGeneral);
  for (const auto& name : m) {
    c.require(std::abs(elo_of(base, name) - elo_of(perm, name)) < 1e-6, "not permutation invariant");
    c.require(std::abs(elo_of(base, name) - elo_of(rel, rename(name))) < 1e-6, "not relabel invariant");
  }
}

void service_protocol(Check& c) {
  const auto dir = fs::temp_directory_path() / "mad_acceptance_study";
  fs::remove_all(dir);
  fs::create_directories(dir);
  StudyConfig cfg;
  cfg.models = {"m1", "m2", "m3", "m4", "m5"};
  for (int i = 0; i < 100; ++i) cfg.scenes.push_back("scene" + std::to_string(i));
  cfg.seed = 2024;
  cfg.log_path = dir / "ratings.jsonl";

  std::string results_live;
  {
    StudyState st(cfg, 1);
    StudyServer server(st);
    c.require(server.bind("127.0.0.1", 0), "bind failed");
    std::thread th([&] { server.serve(); });
    server.wait_until_ready();
    httplib::Client cli("127.0.0.1", server.bound_port());
    cli.set_keep_alive(true);
    const CounterRng rng(7);
    std::uint64_t k = 0;
    std::string first_body;
    for (int i = 0; i < 5000 && c.ok; ++i) {
      const std::string rater = "rater" + std::to_string(i % 20);
      auto r = cli.Get("/api/next-pair?rater=" + rater);
      if (!r || r->status != 200) {
        c.require(false, "next-pair failed");
        break;
      }
      const auto j = nlohmann::json::parse(r->body);
      nlohmann::json ratings;
      for (const char* crit : {"general", "motion", "visual"}) ratings[crit] = static_cast<int>(rng.below(5, k)) - 2;
      const std::string body = nlohmann::json{{"token", j["token"]}, {"ratings", ratings}}.dump();
      auto s = cli.Post("/api/ratings", body, "application/json");
      c.require(s && s->status == 200, "rating not recorded");
      if (i == 0) first_body = body;
    }
    auto dup = cli.Post("/api/ratings", first_body, "application/json");
    c.require(dup && dup->status == 409, "duplicate token accepted");
    const auto counts = st.cell_counts();
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    c.require(*hi - *lo <= 1, "coverage spread " + std::to_string(*hi - *lo));
    auto res = cli.Get("/api/results");
    c.require(res && res->status == 200, "results failed");
    if (res) results_live = res->body;
    server.stop();
    th.join();
  }
  StudyState replayed(cfg, 99);
  replayed.replay(cfg.log_path);
  c.require(replayed.records().size() == 15000, "log does not hold 15000 records");
  StudyServer server(replayed);
  c.require(server.bind("127.0.0.1", 0), "bind failed");
  std::thread th([&] { server.serve(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", server.bound_port());
  auto res = cli.Get("/api/results");
  c.require(res && res->body == results_live, "replayed results differ");
  server.stop();
  th.join();
  fs::remove_all(dir);
}

std::pair<double, std::vector<float>> fixture_chain() {
  Scenario s;
  s.kind = ScenarioKind::kLeftTurn;
  s.seed = 42;
  const CameraIntrinsics k{90.0, 1056, 704};
  const auto scene = generate_scene(s, k);
  const auto frames = rasterize_pose_video(scene.poses, SkeletonSchema::make_default(), RenderConfig{});
  const auto fg = foreground_mask(frames);
  const DownsampleFactors factors{4, 8, 8};
  const auto lm = skeleton_latent_mask(fg, factors);
  LatentTensor lt({lm.t, lm.h, lm.w, 4}, factors);
  const auto noisy = inject_targeted_noise(lt, lm, NoiseConfig{0.3, 42});
  const auto traj = ground_plane(scene.trajectory);
  return {ade(traj, traj), noisy.latent.values};
}

void end_to_end(Check& c) {
  const auto a = fixture_chain();
  const auto b = fixture_chain();
  c.require(a.first == 0.0, "ADE of the trajectory with itself is not 0");
  c.require(a.second.size() == b.second.size() &&
                std::memcmp(a.second.data(), b.second.data(), a.second.size() * sizeof(float)) == 0,
            "chain output differs between runs");
  bool any = false;
  for (float v : a.second) any |= v != 0.0f;
  c.require(any, "no latent cell was perturbed");
}

}  // namespace

int main() {
  criterion("segmentation arithmetic", 1.0, segmentation);
  criterion("clip filtering", 1.0, filtering);
  criterion("targeted noise", 30.0, targeted_noise);
  criterion("ego-motion semantics", 60.0, ego_motion);
  criterion("metric oracles", 10.0, metric_oracles);
  criterion("rating fit", 5.0, rating_fit);
  criterion("service protocol", 30.0, service_protocol);
  criterion("end-to-end fixture", 60.0, end_to_end);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
