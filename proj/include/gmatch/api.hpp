#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmatch/session.hpp"

namespace httplib {
class Server;
}

namespace gmatch {

// HTTP status for a library error kind.
int http_status_for(const std::string& error_kind);

// JSON facade over Sessions, versioned under /api/v1:
//   POST /sessions                         body: corpus file text, or {"path": ...}
//   GET  /sessions/{id}/status
//   POST /sessions/{id}/embed|fuse|cluster|project|bench
//   GET  /sessions/{id}/projection
//   POST /sessions/{id}/match
//   GET  /sessions/{id}/graphs/{gid}
//   POST /sessions/{id}/parallel-coords
//   GET  /sessions/{id}/scatter?x=..&y=..
// Long stages accept {"async": true}: they answer 202 immediately and
// publish their result under status.results.<stage>, whose "state" goes
// running -> done | failed.
class ApiServer {
 public:
  explicit ApiServer(std::string static_dir = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Returns the bound port (0 picks a free one).
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

  // In-process access, used by tests and the CLI.
  std::shared_ptr<Session> session(const std::string& id) const;
  std::string create_session(Corpus corpus);

 private:
  struct Entry {
    std::shared_ptr<Session> session;
    std::mutex results_mutex;
    nlohmann::json results = nlohmann::json::object();
    std::vector<std::thread> workers;
  };

  void routes();
  std::shared_ptr<Entry> entry(const std::string& id) const;

  std::unique_ptr<httplib::Server> server_;
  std::string static_dir_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  int next_id_ = 1;
};

}  // namespace gmatch
