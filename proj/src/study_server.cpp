#include "mad/study_server.hpp"

#include <chrono>

#include <httplib.h>

#include "mad/error.hpp"
#include "mad/serialize.hpp"

namespace mad {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& msg) {
  send_json(res, status, {{"status", "error"}, {"error", code}, {"message", msg}});
}

int http_status(SubmitStatus s) {
  switch (s) {
    case SubmitStatus::kRecorded: return 200;
    case SubmitStatus::kUnknownToken: return 404;
    case SubmitStatus::kExpired: return 410;
    case SubmitStatus::kDuplicate: return 409;
    case SubmitStatus::kMissingCriterion:
    case SubmitStatus::kOutOfRange: return 400;
    case SubmitStatus::kIoFailure: return 500;
  }
  return 500;
}

}  // namespace

double wall_clock_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::pair<std::string, int> parse_listen_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) return {addr.empty() ? "127.0.0.1" : addr, 8080};
  std::string host = addr.substr(0, colon);
  const std::string port = addr.substr(colon + 1);
  int p = 0;
  try {
    std::size_t used = 0;
    p = std::stoi(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kConfig, "invalid port in listen address '" + addr + "'");
  }
  if (p < 0 || p > 65535) throw Error(ErrorKind::kConfig, "port out of range in '" + addr + "'");
  if (host.empty()) host = "127.0.0.1";
  return {host, p};
}

StudyServer::StudyServer(StudyState& state, Clock clock)
    : state_(state),
      clock_(clock ? std::move(clock) : Clock(wall_clock_seconds)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

StudyServer::~StudyServer() { stop(); }

void StudyServer::install_routes() {
  server_->Get("/api/next-pair", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) return send_error(res, 400, "missing_rater", "query parameter 'rater' is required");
    const auto p = state_.next_pair(rater, clock_());
    if (!p) {
      return send_json(res, 200, {{"status", "complete"}, {"completed", state_.completed_by(rater)}});
    }
    nlohmann::json criteria = nlohmann::json::array();
    for (Criterion c : kAllCriteria) {
      criteria.push_back({{"id", std::string(to_string(c))},
                          {"title", std::string(criterion_title(c))},
                          {"prompt", std::string(criterion_prompt(c))}});
    }
    send_json(res, 200,
              {{"status", "ok"},
               {"token", p->token},
               {"scene", p->scene_id},
               {"left_video", "/videos/" + p->left_video},
               {"right_video", "/videos/" + p->right_video},
               {"criteria", std::move(criteria)},
               {"progress", {{"completed", state_.completed_by(rater)}, {"total", state_.cell_count()}}}});
  });

  server_->Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      return send_error(res, 400, "bad_json", e.what());
    }
    if (!body.is_object() || !body.contains("token") || !body["token"].is_string() ||
        !body.contains("ratings") || !body["ratings"].is_object()) {
      return send_error(res, 400, "bad_request", "expected {\"token\": str, \"ratings\": {...}}");
    }
    std::map<std::string, int> ratings;
    for (const auto& [key, value] : body["ratings"].items()) {
      if (!value.is_number_integer()) return send_error(res, 400, "out_of_range", "ratings must be integers");
      ratings[key] = value.get<int>();
    }
    const SubmitOutcome out = state_.submit(body["token"].get<std::string>(), ratings, clock_());
    if (out.status != SubmitStatus::kRecorded) {
      return send_error(res, http_status(out.status), to_string(out.status), out.message);
    }
    nlohmann::json ids = nlohmann::json::array();
    for (const PreferenceRecord& r : out.records) ids.push_back(r.record_id);
    send_json(res, 200, {{"status", "recorded"}, {"records", std::move(ids)}});
  });

  server_->Get("/api/results", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<Criterion> c;
    if (req.has_param("criterion")) {
      c = criterion_from_string(req.get_param_value("criterion"));
      if (!c) return send_error(res, 400, "bad_criterion", "criterion must be general, motion or visual");
    }
    res.status = 200;
    res.set_content(state_.results(c), "application/json");
  });

  server_->Get(R"(/videos/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto v = state_.resolve_video(req.matches[1].str());
    if (!v) return send_error(res, 404, "not_found", "unknown video");
    const auto path = state_.config().video_dir / v->first / (v->second + ".mp4");
    try {
      res.set_content(read_file(path), "video/mp4");
    } catch (const Error&) {
      send_error(res, 404, "not_found", "video file missing");
    }
  });

  const auto& ui = state_.config().ui_dir;
  if (!ui.empty() && std::filesystem::is_directory(ui)) server_->set_mount_point("/", ui.string());
}

bool StudyServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    return port_ > 0;
  }
  if (!server_->bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

bool StudyServer::serve() { return server_->listen_after_bind(); }

bool StudyServer::listen(const std::string& host, int port) { return bind(host, port) && serve(); }

void StudyServer::stop() {
  if (server_) server_->stop();
}

void StudyServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace mad
