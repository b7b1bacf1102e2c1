#pragma once

// Blinded pairwise preference study: scheduling of (model pair, scene) cells,
// rating capture through an append-only JSON Lines log, win rates and a
// Bradley-Terry fit reported on the Elo scale.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mad/core_types.hpp"

namespace mad {

enum class Criterion { kGeneral, kMotion, kVisual };

inline constexpr std::array<Criterion, 3> kAllCriteria = {Criterion::kGeneral, Criterion::kMotion,
                                                          Criterion::kVisual};

std::string_view to_string(Criterion c);  // "general", "motion", "visual"
std::optional<Criterion> criterion_from_string(std::string_view s);
std::string_view criterion_title(Criterion c);
std::string_view criterion_prompt(Criterion c);

struct StudyConfig {
  std::vector<std::string> models;
  std::vector<std::string> scenes;
  std::uint64_t seed = 0;
  std::filesystem::path video_dir;  // {video_dir}/{model}/{scene}.mp4
  std::filesystem::path log_path;
  std::filesystem::path ui_dir;  // static bundle; optional
  double token_ttl_s = 3600.0;
};

ValidationReport validate(const StudyConfig& cfg);
void from_json(const nlohmann::json& j, StudyConfig& cfg);
void to_json(nlohmann::json& j, const StudyConfig& cfg);

struct PreferenceRecord {
  std::uint64_t record_id = 0;
  std::string rater_id;
  std::string model_a;  // model_a < model_b
  std::string model_b;
  std::string scene_id;
  Criterion criterion = Criterion::kGeneral;
  int rating = 0;  // -2..+2, negative favors model_a
  std::string presented_left;
  double timestamp = 0.0;
  std::string token;

  friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

ValidationReport validate(const PreferenceRecord& r);
void to_json(nlohmann::json& j, const PreferenceRecord& r);
void from_json(const nlohmann::json& j, PreferenceRecord& r);

// Rater-side rating (negative favors the left video) to canonical order.
int to_canonical_rating(int left_right_rating, bool model_a_on_left);

struct PairWinRate {
  std::string model_a;
  std::string model_b;
  std::size_t a_preferred = 0;
  std::size_t b_preferred = 0;
  std::size_t no_preference = 0;
  std::size_t total = 0;
  double a_fraction = 0.0;
  double b_fraction = 0.0;
  double no_preference_fraction = 0.0;
};

// Pairs in canonical order, sorted by (model_a, model_b).
std::vector<PairWinRate> win_rates(std::span<const PreferenceRecord> records, Criterion criterion);

struct ModelRating {
  std::string model;
  double elo = 0.0;
  double strength = 1.0;
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
};

struct RatingTable {
  std::vector<ModelRating> ratings;  // sorted by model id
  std::vector<PairWinRate> pairs;
  int iterations = 0;
};

inline constexpr double kEloAnchor = 1500.0;
inline constexpr double kPriorGamesPerPair = 0.5;
inline constexpr double kFitTolerance = 1e-10;

// Bradley-Terry fit by minorization-maximization. Every pair among the union
// of `models` and the models in `records` receives the symmetric prior.
RatingTable fit_ratings(std::span<const PreferenceRecord> records, Criterion criterion,
                        std::span<const std::string> models = {});

nlohmann::json results_json(const RatingTable& table, Criterion criterion, std::size_t records);

struct Presentation {
  std::string token;
  std::string rater_id;
  std::string model_a;
  std::string model_b;
  std::string scene_id;
  bool model_a_on_left = true;
  std::string left_video;  // opaque ids
  std::string right_video;
  double issued_at = 0.0;
  std::uint64_t cell = 0;
};

enum class SubmitStatus {
  kRecorded,
  kUnknownToken,
  kExpired,
  kDuplicate,
  kMissingCriterion,
  kOutOfRange,
  kIoFailure
};

std::string_view to_string(SubmitStatus s);

struct SubmitOutcome {
  SubmitStatus status = SubmitStatus::kRecorded;
  std::vector<PreferenceRecord> records;
  std::string message;
};

// Thread-safe study state. Appends go through one mutex-guarded writer;
// results are computed on a copy of the records.
class StudyState {
 public:
  // `token_salt` distinguishes tokens across process lifetimes.
  explicit StudyState(StudyConfig cfg, std::uint64_t token_salt = 0);

  // Replays an existing log (missing file = fresh state). Throws kParse with
  // the line number on a corrupt line.
  void replay(const std::filesystem::path& log_path);
  void replay(std::istream& in);

  // nullopt when every cell has already been rated by this rater. A rater
  // with an unexpired pending presentation gets it again.
  std::optional<Presentation> next_pair(const std::string& rater_id, double now);

  // Ratings are rater-side (negative favors the left video), keyed by
  // criterion name.
  SubmitOutcome submit(const std::string& token, const std::map<std::string, int>& ratings,
                       double now);

  std::vector<PreferenceRecord> records() const;
  std::vector<std::size_t> cell_counts() const;  // completed submissions per cell
  std::size_t cell_count() const;
  std::size_t completed_by(const std::string& rater_id) const;

  std::string results(std::optional<Criterion> criterion) const;

  // (model, scene) for an opaque video id.
  std::optional<std::pair<std::string, std::string>> resolve_video(std::string_view id) const;
  std::string video_id(const std::string& model, const std::string& scene) const;

  const StudyConfig& config() const { return cfg_; }

 private:
  struct Cell {
    std::size_t a = 0;  // indices into sorted models_
    std::size_t b = 0;
    std::size_t scene = 0;
  };

  void apply_locked(const std::vector<PreferenceRecord>& group);
  std::optional<std::uint64_t> cell_of(const PreferenceRecord& r) const;
  void expire_locked(double now);
  std::string make_token_locked();

  StudyConfig cfg_;
  std::vector<std::string> models_;  // sorted
  std::vector<Cell> cells_;
  std::vector<std::size_t> tie_rank_;
  std::vector<std::size_t> completed_;
  std::vector<std::size_t> pending_load_;
  std::map<std::string, std::set<std::uint64_t>> rated_by_;
  std::map<std::string, Presentation> pending_;
  std::map<std::string, std::string> pending_by_rater_;
  std::set<std::string> consumed_tokens_;
  std::map<std::string, std::pair<std::string, std::string>> videos_;
  std::vector<PreferenceRecord> records_;
  std::uint64_t token_salt_;
  std::uint64_t token_counter_ = 0;
  std::uint64_t next_record_id_ = 0;
  mutable std::mutex mu_;
};

// Appends `lines` to `path` with a single write on an O_APPEND descriptor.
void append_log(const std::filesystem::path& path, const std::string& lines);

}  // namespace mad
