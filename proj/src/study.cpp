#include "mad/study.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "mad/error.hpp"
#include "mad/rng.hpp"
#include "mad/serialize.hpp"

namespace mad {

namespace {

constexpr std::uint64_t kTokenStream = 0x544f4b454e;  // "TOKEN"
constexpr std::uint64_t kFlipStream = 0x464c4950;     // "FLIP"
constexpr std::uint64_t kVideoStream = 0x564944454f;  // "VIDEO"
constexpr std::uint64_t kOrderStream = 0x4f52444552;  // "ORDER"
constexpr int kMaxFitIterations = 1000000;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = kDigits[v & 0xf];
  return s;
}

std::size_t index_of(const std::vector<std::string>& sorted, const std::string& v) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
}

bool contains_sorted(const std::vector<std::string>& sorted, const std::string& v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

}  // namespace

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::kGeneral: return "general";
    case Criterion::kMotion: return "motion";
    case Criterion::kVisual: return "visual";
  }
  return "general";
}

std::optional<Criterion> criterion_from_string(std::string_view s) {
  for (Criterion c : kAllCriteria) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string_view criterion_title(Criterion c) {
  switch (c) {
    case Criterion::kGeneral: return "General Quality";
    case Criterion::kMotion: return "Motion Quality and Realistic Dynamics";
    case Criterion::kVisual: return "Visual Quality";
  }
  return "";
}

std::string_view criterion_prompt(Criterion c) {
  switch (c) {
    case Criterion::kGeneral:
      return "Overall which video do you prefer? In other words which video is harder to "
             "distinguish from real video?";
    case Criterion::kMotion:
      return "Which video has more realistic, fluid and coherent motion, and is physically and "
             "socially plausible? Stopping suddenly without reason, collisions between objects, "
             "or cars driving in wrong direction are example of poor motion quality.";
    case Criterion::kVisual:
      return "Which video has better clarity, fewer artifacts, and more pleasing visual? Blurry "
             "object, change of color or shape over time, and visual distortions are example of "
             "poor visual quality.";
  }
  return "";
}

ValidationReport validate(const StudyConfig& cfg) {
  ValidationReport r;
  std::set<std::string> models(cfg.models.begin(), cfg.models.end());
  if (models.size() < 2) r.push_back({"two models", std::to_string(models.size())});
  if (models.size() != cfg.models.size()) r.push_back({"unique models", ""});
  std::set<std::string> scenes(cfg.scenes.begin(), cfg.scenes.end());
  if (scenes.empty()) r.push_back({"one scene", ""});
  if (scenes.size() != cfg.scenes.size()) r.push_back({"unique scenes", ""});
  if (!(cfg.token_ttl_s > 0.0)) r.push_back({"token ttl", std::to_string(cfg.token_ttl_s)});
  return r;
}

void from_json(const nlohmann::json& j, StudyConfig& cfg) {
  j.at("models").get_to(cfg.models);
  j.at("scenes").get_to(cfg.scenes);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.video_dir = j.value("video_dir", std::string());
  cfg.log_path = j.value("log_path", std::string());
  cfg.ui_dir = j.value("ui_dir", std::string());
  cfg.token_ttl_s = j.value("token_ttl_s", 3600.0);
}

void to_json(nlohmann::json& j, const StudyConfig& cfg) {
  j = nlohmann::json{{"models", cfg.models},
                     {"scenes", cfg.scenes},
                     {"seed", cfg.seed},
                     {"video_dir", cfg.video_dir.string()},
                     {"log_path", cfg.log_path.string()},
                     {"ui_dir", cfg.ui_dir.string()},
                     {"token_ttl_s", cfg.token_ttl_s}};
}

ValidationReport validate(const PreferenceRecord& r) {
  ValidationReport rep;
  if (r.rating < -2 || r.rating > 2) rep.push_back({"rating range", std::to_string(r.rating)});
  if (!(r.model_a < r.model_b)) rep.push_back({"canonical pair", r.model_a + " / " + r.model_b});
  if (r.presented_left != r.model_a && r.presented_left != r.model_b) {
    rep.push_back({"presented left", r.presented_left});
  }
  return rep;
}

void to_json(nlohmann::json& j, const PreferenceRecord& r) {
  j = nlohmann::json{{"record_id", r.record_id}, {"rater", r.rater_id},
                     {"model_a", r.model_a},     {"model_b", r.model_b},
                     {"scene", r.scene_id},      {"criterion", std::string(to_string(r.criterion))},
                     {"rating", r.rating},       {"left", r.presented_left},
                     {"timestamp", r.timestamp}, {"token", r.token}};
}

void from_json(const nlohmann::json& j, PreferenceRecord& r) {
  j.at("record_id").get_to(r.record_id);
  j.at("rater").get_to(r.rater_id);
  j.at("model_a").get_to(r.model_a);
  j.at("model_b").get_to(r.model_b);
  j.at("scene").get_to(r.scene_id);
  const auto c = criterion_from_string(j.at("criterion").get<std::string>());
  if (!c) throw Error(ErrorKind::kParse, "unknown criterion '" + j.at("criterion").get<std::string>() + "'");
  r.criterion = *c;
  j.at("rating").get_to(r.rating);
  j.at("left").get_to(r.presented_left);
  r.timestamp = j.value("timestamp", 0.0);
  r.token = j.value("token", std::string());
  if (auto rep = validate(r); !rep.empty()) {
    throw Error(ErrorKind::kParse, "record: " + rep.front().code + " " + rep.front().detail);
  }
}

int to_canonical_rating(int left_right_rating, bool model_a_on_left) {
  return model_a_on_left ? left_right_rating : -left_right_rating;
}

std::vector<PairWinRate> win_rates(std::span<const PreferenceRecord> records, Criterion criterion) {
  std::map<std::pair<std::string, std::string>, PairWinRate> pairs;
  for (const PreferenceRecord& r : records) {
    if (r.criterion != criterion) continue;
    PairWinRate& p = pairs[{r.model_a, r.model_b}];
    p.model_a = r.model_a;
    p.model_b = r.model_b;
    ++p.total;
    if (r.rating < 0) {
      ++p.a_preferred;
    } else if (r.rating > 0) {
      ++p.b_preferred;
    } else {
      ++p.no_preference;
    }
  }
  std::vector<PairWinRate> out;
  out.reserve(pairs.size());
  for (auto& [key, p] : pairs) {
    const double n = static_cast<double>(p.total);
    p.a_fraction = static_cast<double>(p.a_preferred) / n;
    p.b_fraction = static_cast<double>(p.b_preferred) / n;
    p.no_preference_fraction = static_cast<double>(p.no_preference) / n;
    out.push_back(std::move(p));
  }
  return out;
}

RatingTable fit_ratings(std::span<const PreferenceRecord> records, Criterion criterion,
                        std::span<const std::string> models) {
  std::set<std::string> names(models.begin(), models.end());
  for (const PreferenceRecord& r : records) {
    if (r.criterion != criterion) continue;
    names.insert(r.model_a);
    names.insert(r.model_b);
  }
  const std::vector<std::string> ids(names.begin(), names.end());
  const std::size_t m = ids.size();
  RatingTable table;
  table.pairs = win_rates(records, criterion);
  table.ratings.resize(m);
  for (std::size_t i = 0; i < m; ++i) table.ratings[i].model = ids[i];
  if (m == 0) return table;

  // wins[i][j]: weighted games i won against j. Weights are multiples of 0.25,
  // so the sums are exact in any order.
  std::vector<std::vector<double>> wins(m, std::vector<double>(m, 0.0));
  for (const PreferenceRecord& r : records) {
    if (r.criterion != criterion) continue;
    const std::size_t a = index_of(ids, r.model_a);
    const std::size_t b = index_of(ids, r.model_b);
    if (r.rating < 0) {
      wins[a][b] += -r.rating;
      ++table.ratings[a].wins;
      ++table.ratings[b].losses;
    } else if (r.rating > 0) {
      wins[b][a] += r.rating;
      ++table.ratings[b].wins;
      ++table.ratings[a].losses;
    } else {
      wins[a][b] += 0.5;
      wins[b][a] += 0.5;
      ++table.ratings[a].ties;
      ++table.ratings[b].ties;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j) wins[i][j] += 0.5 * kPriorGamesPerPair;
    }
  }

  std::vector<double> p(m, 1.0), next(m);
  for (int it = 0; it < kMaxFitIterations && m > 1; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      double won = 0.0, denom = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        won += wins[i][j];
        denom += (wins[i][j] + wins[j][i]) / (p[i] + p[j]);
      }
      next[i] = won / denom;
    }
    double log_mean = 0.0;
    for (double v : next) log_mean += std::log(v);
    log_mean /= static_cast<double>(m);
    const double scale = std::exp(-log_mean);
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      next[i] *= scale;
      change = std::max(change, std::abs(next[i] - p[i]) / p[i]);
    }
    p.swap(next);
    table.iterations = it + 1;
    if (change < kFitTolerance) break;
  }

  const double k = 400.0 / std::numbers::ln10;
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    table.ratings[i].strength = p[i];
    table.ratings[i].elo = k * std::log(p[i]);
    mean += table.ratings[i].elo;
  }
  mean /= static_cast<double>(m);
  for (ModelRating& r : table.ratings) r.elo = r.elo - mean + kEloAnchor;
  return table;
}

nlohmann::json results_json(const RatingTable& table, Criterion criterion, std::size_t records) {
  nlohmann::json ratings = nlohmann::json::array();
  for (const ModelRating& r : table.ratings) {
    ratings.push_back({{"model", r.model},
                       {"elo", r.elo},
                       {"wins", r.wins},
                       {"ties", r.ties},
                       {"losses", r.losses}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const PairWinRate& p : table.pairs) {
    pairs.push_back({{"model_a", p.model_a},
                     {"model_b", p.model_b},
                     {"a_preferred", p.a_preferred},
                     {"b_preferred", p.b_preferred},
                     {"no_preference", p.no_preference},
                     {"total", p.total},
                     {"a_fraction", p.a_fraction},
                     {"b_fraction", p.b_fraction},
                     {"no_preference_fraction", p.no_preference_fraction}});
  }
  return {{"criterion", std::string(to_string(criterion))},
          {"records", records},
          {"ratings", std::move(ratings)},
          {"pairs", std::move(pairs)}};
}

std::string_view to_string(SubmitStatus s) {
  switch (s) {
    case SubmitStatus::kRecorded: return "recorded";
    case SubmitStatus::kUnknownToken: return "unknown_token";
    case SubmitStatus::kExpired: return "expired";
    case SubmitStatus::kDuplicate: return "duplicate";
    case SubmitStatus::kMissingCriterion: return "missing_criterion";
    case SubmitStatus::kOutOfRange: return "out_of_range";
    case SubmitStatus::kIoFailure: return "io_failure";
  }
  return "unknown";
}

void append_log(const std::filesystem::path& path, const std::string& lines) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "': " + std::strerror(errno));
  }
  std::size_t done = 0;
  while (done < lines.size()) {
    const ssize_t n = ::write(fd, lines.data() + done, lines.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw Error(ErrorKind::kIo, "write to '" + path.string() + "' failed: " + std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::close(fd) != 0) throw Error(ErrorKind::kIo, "close of '" + path.string() + "' failed");
}

StudyState::StudyState(StudyConfig cfg, std::uint64_t token_salt)
    : cfg_(std::move(cfg)), token_salt_(token_salt) {
  if (auto r = validate(cfg_); !r.empty()) {
    throw Error(ErrorKind::kConfig, "study config: " + r.front().code + " " + r.front().detail);
  }
  models_ = cfg_.models;
  std::sort(models_.begin(), models_.end());
  for (std::size_t a = 0; a < models_.size(); ++a) {
    for (std::size_t b = a + 1; b < models_.size(); ++b) {
      for (std::size_t s = 0; s < cfg_.scenes.size(); ++s) cells_.push_back({a, b, s});
    }
  }
  const auto perm = seeded_permutation(cells_.size(), CounterRng(cfg_.seed).substream(kOrderStream));
  tie_rank_.resize(cells_.size());
  for (std::size_t i = 0; i < perm.size(); ++i) tie_rank_[perm[i]] = i;
  completed_.assign(cells_.size(), 0);
  pending_load_.assign(cells_.size(), 0);
  for (const std::string& model : models_) {
    for (const std::string& scene : cfg_.scenes) videos_[video_id(model, scene)] = {model, scene};
  }
}

std::string StudyState::video_id(const std::string& model, const std::string& scene) const {
  const CounterRng rng = CounterRng(cfg_.seed).substream(kVideoStream);
  const std::uint64_t h = fnv1a(scene, fnv1a(std::string_view("\0", 1), fnv1a(model)));
  return hex64(rng.bits(h));
}

std::optional<std::pair<std::string, std::string>> StudyState::resolve_video(std::string_view id) const {
  auto it = videos_.find(std::string(id));
  if (it == videos_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint64_t> StudyState::cell_of(const PreferenceRecord& r) const {
  if (!contains_sorted(models_, r.model_a) || !contains_sorted(models_, r.model_b)) return std::nullopt;
  auto scene = std::find(cfg_.scenes.begin(), cfg_.scenes.end(), r.scene_id);
  if (scene == cfg_.scenes.end()) return std::nullopt;
  const std::size_t a = index_of(models_, r.model_a);
  const std::size_t b = index_of(models_, r.model_b);
  const std::size_t m = models_.size();
  // Row-major over pairs (a < b), then scenes.
  const std::size_t pair = a * m - a * (a + 1) / 2 + (b - a - 1);
  return pair * cfg_.scenes.size() + static_cast<std::size_t>(scene - cfg_.scenes.begin());
}

void StudyState::apply_locked(const std::vector<PreferenceRecord>& group) {
  for (const PreferenceRecord& r : group) {
    const auto cell = cell_of(r);
    if (!cell) throw Error(ErrorKind::kInvalidInput, "record refers to a pair or scene outside the study");
    if (consumed_tokens_.insert(r.token).second) {
      ++completed_[*cell];
      rated_by_[r.rater_id].insert(*cell);
    }
    next_record_id_ = std::max(next_record_id_, r.record_id + 1);
    records_.push_back(r);
  }
}

void StudyState::replay(const std::filesystem::path& log_path) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(log_path)) return;
    throw Error(ErrorKind::kIo, "cannot open '" + log_path.string() + "'");
  }
  replay(in);
}

void StudyState::replay(std::istream& in) {
  std::lock_guard lock(mu_);
  for_each_jsonl(in, [&](std::size_t, const nlohmann::json& j) {
    PreferenceRecord r = j.get<PreferenceRecord>();
    apply_locked({r});
  });
}

void StudyState::expire_locked(double now) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (now - it->second.issued_at > cfg_.token_ttl_s) {
      --pending_load_[it->second.cell];
      pending_by_rater_.erase(it->second.rater_id);
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

std::string StudyState::make_token_locked() {
  const CounterRng rng = CounterRng(cfg_.seed ^ token_salt_).substream(kTokenStream);
  const std::uint64_t c = token_counter_++;
  return hex64(rng.bits(2 * c)) + hex64(rng.bits(2 * c + 1));
}

std::optional<Presentation> StudyState::next_pair(const std::string& rater_id, double now) {
  std::lock_guard lock(mu_);
  expire_locked(now);
  if (auto it = pending_by_rater_.find(rater_id); it != pending_by_rater_.end()) {
    return pending_.at(it->second);
  }
  const auto rated_it = rated_by_.find(rater_id);
  const std::set<std::uint64_t>* rated = rated_it == rated_by_.end() ? nullptr : &rated_it->second;
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    if (rated != nullptr && rated->contains(c)) continue;
    if (!best) {
      best = c;
      continue;
    }
    const auto key = [&](std::size_t i) {
      return std::tuple(completed_[i], pending_load_[i], tie_rank_[i]);
    };
    if (key(c) < key(*best)) best = c;
  }
  if (!best) return std::nullopt;

  const Cell& cell = cells_[*best];
  Presentation p;
  const std::uint64_t flip_counter = token_counter_;
  p.token = make_token_locked();
  p.rater_id = rater_id;
  p.model_a = models_[cell.a];
  p.model_b = models_[cell.b];
  p.scene_id = cfg_.scenes[cell.scene];
  p.model_a_on_left = CounterRng(cfg_.seed).substream(kFlipStream).uniform(flip_counter) < 0.5;
  const std::string va = video_id(p.model_a, p.scene_id);
  const std::string vb = video_id(p.model_b, p.scene_id);
  p.left_video = p.model_a_on_left ? va : vb;
  p.right_video = p.model_a_on_left ? vb : va;
  p.issued_at = now;
  p.cell = *best;
  ++pending_load_[*best];
  pending_by_rater_[rater_id] = p.token;
  pending_[p.token] = p;
  return p;
}

SubmitOutcome StudyState::submit(const std::string& token, const std::map<std::string, int>& ratings,
                                 double now) {
  std::lock_guard lock(mu_);
  if (consumed_tokens_.contains(token)) {
    return {SubmitStatus::kDuplicate, {}, "token already submitted"};
  }
  auto it = pending_.find(token);
  if (it == pending_.end()) return {SubmitStatus::kUnknownToken, {}, "unknown token"};
  if (now - it->second.issued_at > cfg_.token_ttl_s) {
    expire_locked(now);
    return {SubmitStatus::kExpired, {}, "token expired"};
  }
  for (const auto& [name, value] : ratings) {
    if (!criterion_from_string(name)) {
      return {SubmitStatus::kMissingCriterion, {}, "unknown criterion '" + name + "'"};
    }
  }
  for (Criterion c : kAllCriteria) {
    auto r = ratings.find(std::string(to_string(c)));
    if (r == ratings.end()) {
      return {SubmitStatus::kMissingCriterion, {}, "missing criterion '" + std::string(to_string(c)) + "'"};
    }
    if (r->second < -2 || r->second > 2) {
      return {SubmitStatus::kOutOfRange, {}, "rating for '" + r->first + "' must be in -2..2"};
    }
  }

  const Presentation& p = it->second;
  std::vector<PreferenceRecord> group;
  std::string lines;
  for (Criterion c : kAllCriteria) {
    PreferenceRecord r;
    r.record_id = next_record_id_ + group.size();
    r.rater_id = p.rater_id;
    r.model_a = p.model_a;
    r.model_b = p.model_b;
    r.scene_id = p.scene_id;
    r.criterion = c;
    r.rating = to_canonical_rating(ratings.at(std::string(to_string(c))), p.model_a_on_left);
    r.presented_left = p.model_a_on_left ? p.model_a : p.model_b;
    r.timestamp = now;
    r.token = token;
    lines += nlohmann::json(r).dump();
    lines += '\n';
    group.push_back(std::move(r));
  }
  if (!cfg_.log_path.empty()) {
    try {
      append_log(cfg_.log_path, lines);
    } catch (const Error& e) {
      return {SubmitStatus::kIoFailure, {}, e.what()};
    }
  }
  --pending_load_[p.cell];
  pending_by_rater_.erase(p.rater_id);
  pending_.erase(it);
  apply_locked(group);
  return {SubmitStatus::kRecorded, std::move(group), ""};
}

std::vector<PreferenceRecord> StudyState::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<std::size_t> StudyState::cell_counts() const {
  std::lock_guard lock(mu_);
  return completed_;
}

std::size_t StudyState::cell_count() const { return cells_.size(); }

std::size_t StudyState::completed_by(const std::string& rater_id) const {
  std::lock_guard lock(mu_);
  auto it = rated_by_.find(rater_id);
  return it == rated_by_.end() ? 0 : it->second.size();
}

std::string StudyState::results(std::optional<Criterion> criterion) const {
  const std::vector<PreferenceRecord> snapshot = records();
  auto one = [&](Criterion c) {
    const auto n = static_cast<std::size_t>(std::count_if(
        snapshot.begin(), snapshot.end(), [c](const PreferenceRecord& r) { return r.criterion == c; }));
    return results_json(fit_ratings(snapshot, c, models_), c, n);
  };
  if (criterion) return one(*criterion).dump();
  nlohmann::json all = nlohmann::json::object();
  for (Criterion c : kAllCriteria) all[std::string(to_string(c))] = one(c);
  return all.dump();
}

}  // namespace mad
