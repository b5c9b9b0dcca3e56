#include "gmatch/api.hpp"

#include <functional>
#include <sstream>

#include <httplib.h>

#include "gmatch/error.hpp"

namespace gmatch {

using nlohmann::json;

int http_status_for(const std::string& kind) {
  if (kind == "NotFound" || kind == "UnknownNode") return 404;
  if (kind == "DependencyError" || kind == "Busy") return 409;
  if (kind == "NoKnownTokens" || kind == "TargetIsNoise") return 422;
  return 400;
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& kind, const std::string& message) {
  send_json(res, {{"error", kind}, {"message", message}}, http_status_for(kind));
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON body: ") + e.what());
  }
}

// Runs `fn`, translating library errors into structured responses.
void guarded(httplib::Response& res, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e.kind(), e.what());
  } catch (const json::exception& e) {
    send_error(res, "ValidationError", e.what());
  } catch (const std::exception& e) {
    send_json(res, {{"error", "InternalError"}, {"message", e.what()}}, 500);
  }
}

Space space_of(const json& j, const char* fallback) {
  return parse_space(j.value("space", std::string(fallback)));
}

}  // namespace

ApiServer::ApiServer(std::string static_dir)
    : server_(std::make_unique<httplib::Server>()), static_dir_(std::move(static_dir)) {
  routes();
}

ApiServer::~ApiServer() {
  stop();
  std::lock_guard lock(sessions_mutex_);
  for (auto& [_, e] : sessions_) {
    for (auto& w : e->workers) {
      if (w.joinable()) w.join();
    }
  }
}

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host.c_str());
  if (!server_->bind_to_port(host.c_str(), port)) throw BadParams("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::listen() { server_->listen_after_bind(); }

void ApiServer::stop() {
  if (server_) server_->stop();
}

std::string ApiServer::create_session(Corpus corpus) {
  auto e = std::make_shared<Entry>();
  e->session = std::make_shared<Session>(std::move(corpus));
  std::lock_guard lock(sessions_mutex_);
  const std::string id = "s" + std::to_string(next_id_++);
  sessions_.emplace(id, std::move(e));
  return id;
}

std::shared_ptr<ApiServer::Entry> ApiServer::entry(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("no session '" + id + "'");
  return it->second;
}

std::shared_ptr<Session> ApiServer::session(const std::string& id) const { return entry(id)->session; }

void ApiServer::routes() {
  auto& s = *server_;
  const std::string base = "/api/v1";
  const std::string sess = base + R"(/sessions/([^/]+))";

  if (!static_dir_.empty()) s.set_mount_point("/", static_dir_);

  s.Post(base + "/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Corpus corpus;
      json j;
      bool is_path = false;
      try {
        j = json::parse(req.body);
        is_path = j.is_object() && j.contains("path") && !j.contains("schema");
      } catch (const json::parse_error&) {
      }
      if (is_path) {
        corpus = load_corpus(j.at("path").get<std::string>());
      } else {
        std::istringstream in(req.body);
        corpus = read_corpus(in);
      }
      const std::size_t graphs = corpus.size();
      const std::string id = create_session(std::move(corpus));
      send_json(res, {{"sessionId", id}, {"graphs", graphs}}, 201);
    });
  });

  s.Get(sess + "/status", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto e = entry(req.matches[1]);
      json st = e->session->status();
      std::lock_guard lock(e->results_mutex);
      st["results"] = e->results;
      send_json(res, st);
    });
  });

  // Long stages: synchronous by default, background thread on {"async": true}.
  auto long_stage = [this, sess](const std::string& name,
                                 std::function<json(Session&, const Session::LongOp&, const json&)> run) {
    server_->Post(sess + "/" + name, [this, name, run](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto e = entry(req.matches[1]);
        const json body = body_json(req);
        auto guard = std::make_unique<Session::LongOp>(*e->session, name);
        if (!body.value("async", false)) {
          json out = run(*e->session, *guard, body);
          std::lock_guard lock(e->results_mutex);
          e->results[name] = out;
          send_json(res, out);
          return;
        }
        {
          std::lock_guard lock(e->results_mutex);
          e->results[name] = {{"state", "running"}};
        }
        std::lock_guard lock(sessions_mutex_);
        e->workers.emplace_back([e, name, run, body, g = std::move(guard)]() mutable {
          json out;
          try {
            out = run(*e->session, *g, body);
            out["state"] = "done";
          } catch (const Error& err) {
            out = {{"state", "failed"}, {"error", err.kind()}, {"message", err.what()}};
          } catch (const std::exception& err) {
            out = {{"state", "failed"}, {"error", "InternalError"}, {"message", err.what()}};
          }
          g.reset();
          std::lock_guard lock(e->results_mutex);
          e->results[name] = out;
        });
        send_json(res, {{"state", "running"}, {"stage", name}}, 202);
      });
    });
  };

  long_stage("embed", [](Session& s, const Session::LongOp& g, const json& b) {
    return s.run_embed(g, embed_config_from_json(b));
  });
  long_stage("project", [](Session& s, const Session::LongOp& g, const json& b) {
    return s.run_project(g, space_of(b, "fused"), tsne_params_from_json(b));
  });
  long_stage("bench", [](Session& s, const Session::LongOp& g, const json& b) {
    const BenchReport r = s.bench(g, bench_params_from_json(b));
    json out = report_to_json(r);
    out["table"] = format_report_table(r);
    return out;
  });

  s.Post(sess + "/fuse", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, session(req.matches[1])->run_fuse(cca_options_from_json(body_json(req)))); });
  });

  s.Post(sess + "/cluster", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json b = body_json(req);
      auto sp = session(req.matches[1]);
      json out = sp->run_cluster(space_of(b, "fused"), parse_cluster_method(b.value("method", std::string("kmeans"))),
                                 cluster_params_from_json(b));
      out["labels"] = to_json(*sp->cluster_labels())["labels"];
      send_json(res, out);
    });
  });

  s.Get(sess + "/projection", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto p = session(req.matches[1])->projection();
      if (!p) throw DependencyError("projection not computed");
      send_json(res, to_json(*p));
    });
  });

  s.Post(sess + "/match", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto sp = session(req.matches[1]);
      const MatchRequest mr = match_request_from_json(body_json(req), sp->corpus().schema);
      const MatchResponse r = sp->match(mr);
      json graphs = json::array();
      for (const Graph& g : r.hit_graphs) {
        graphs.push_back({{"graph", graph_to_json(g)}, {"stats", to_json(graph_stats(g))}});
      }
      json out = {{"result", to_json(r.result)}, {"graphs", graphs}};
      if (const auto* custom = std::get_if<CustomTarget>(&mr.target); custom && sp->projection()) {
        const ProjectionPoint p = sp->project_custom(*custom);
        out["projectedTarget"] = {{"x", p.x}, {"y", p.y}};
      }
      send_json(res, out);
    });
  });

  s.Get(sess + R"(/graphs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, session(req.matches[1])->graph_detail(req.matches[2])); });
  });

  s.Post(sess + "/parallel-coords", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json b = body_json(req);
      const auto ids = b.value("graphIds", std::vector<std::string>{});
      send_json(res, session(req.matches[1])->parallel_coords(ids, b.value("bins", 20)));
    });
  });

  s.Get(sess + "/scatter", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto sp = session(req.matches[1]);
      const auto pts = attribute_scatter(sp->corpus(), req.get_param_value("x"), req.get_param_value("y"));
      json out = json::array();
      for (const auto& p : pts) out.push_back({{"graphId", p.graph_id}, {"x", p.x}, {"y", p.y}});
      send_json(res, {{"points", out}});
    });
  });
}

}  // namespace gmatch
