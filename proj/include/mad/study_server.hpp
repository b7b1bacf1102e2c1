#pragma once

#include <functional>
#include <memory>
#include <string>

#include "mad/study.hpp"

namespace httplib {
class Server;
}

namespace mad {

// HTTP front end for StudyState.
//
//   GET  /api/next-pair?rater=ID    presentation token + opaque video URLs
//   POST /api/ratings               {"token": ..., "ratings": {criterion: -2..2}}
//   GET  /api/results[?criterion=]  win rates and Elo table
//   GET  /videos/{opaque_id}        media file
//   GET  /*                         static UI bundle, if configured
class StudyServer {
 public:
  using Clock = std::function<double()>;

  explicit StudyServer(StudyState& state, Clock clock = {});
  ~StudyServer();
  StudyServer(const StudyServer&) = delete;
  StudyServer& operator=(const StudyServer&) = delete;

  // Binds and serves until stop(); returns false if the address cannot be
  // bound. port 0 picks a free port (see bound_port()).
  bool listen(const std::string& host, int port);
  bool bind(const std::string& host, int port);
  bool serve();  // after bind()
  int bound_port() const { return port_; }
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  StudyState& state_;
  Clock clock_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = -1;
};

// "host:port" as used by MAD_STUDY_ADDR; port defaults to 8080.
std::pair<std::string, int> parse_listen_address(const std::string& addr);

double wall_clock_seconds();

}  // namespace mad
