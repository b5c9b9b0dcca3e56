#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "gmatch/api.hpp"
#include "gmatch/error.hpp"

// after Eigen: resolv.h defines a _res macro
#include <httplib.h>

using namespace gmatch;
using nlohmann::json;

namespace {

std::string corpus_text(std::size_t per_family = 8, std::uint64_t seed = 2) {
  std::ostringstream out;
  write_corpus(out, gen_synthetic(planted_spec(per_family, 0.1), seed));
  return out.str();
}

// Server on a free loopback port with a listening thread.
struct Running {
  explicit Running(std::string static_dir = {}) : server(std::move(static_dir)) {
    port = server.bind("127.0.0.1", 0);
    thread = std::thread([this] { server.listen(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(120, 0);
  }
  ~Running() {
    server.stop();
    thread.join();
  }

  std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto r = client->Post(("/api/v1" + path).c_str(), body, "application/json");
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body)};
  }
  std::pair<int, json> post(const std::string& path, const json& body) { return post(path, body.dump()); }
  std::pair<int, json> get(const std::string& path) {
    auto r = client->Get(("/api/v1" + path).c_str());
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }

  std::string new_session() {
    auto [status, body] = post("/sessions", corpus_text());
    REQUIRE(status == 201);
    return body["sessionId"];
  }

  ApiServer server;
  int port = 0;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

const json kEmbed = {{"dim", 8}, {"epochs", 10}, {"seed", 3}};

}  // namespace

TEST_CASE("error kinds map to HTTP statuses") {
  CHECK(http_status_for("NotFound") == 404);
  CHECK(http_status_for("UnknownNode") == 404);
  CHECK(http_status_for("DependencyError") == 409);
  CHECK(http_status_for("Busy") == 409);
  CHECK(http_status_for("NoKnownTokens") == 422);
  CHECK(http_status_for("TargetIsNoise") == 422);
  CHECK(http_status_for("ValidationError") == 400);
  CHECK(http_status_for("BadParams") == 400);
}

TEST_CASE("session creation") {
  Running r;
  auto [status, body] = r.post("/sessions", corpus_text(4));
  CHECK(status == 201);
  CHECK(body["graphs"] == 12);
  CHECK(body["sessionId"] == "s1");

  const auto path = std::filesystem::temp_directory_path() / "gmatch_api_corpus.json";
  {
    std::ofstream f(path);
    f << corpus_text(3);
  }
  auto [s2, b2] = r.post("/sessions", json{{"path", path.string()}});
  CHECK(s2 == 201);
  CHECK(b2["graphs"] == 9);
  std::filesystem::remove(path);

  auto [s3, b3] = r.post("/sessions", std::string("not a corpus"));
  CHECK(s3 == 400);
  CHECK(b3["error"] == "ParseError");
  auto [s4, b4] = r.post("/sessions", json{{"path", "/nonexistent/corpus.json"}});
  CHECK(s4 >= 400);
  CHECK(b4.contains("error"));

  // clients that omit a content type send form encoding
  const std::string big = corpus_text(30);
  REQUIRE(big.size() > 8192);
  auto form = r.client->Post("/api/v1/sessions", big, "application/x-www-form-urlencoded");
  REQUIRE(form);
  CHECK(form->status == 201);

  auto [s5, b5] = r.get("/sessions/nope/status");
  CHECK(s5 == 404);
  CHECK(b5["error"] == "NotFound");
}

TEST_CASE("pipeline over HTTP matches the in-process session") {
  Running r;
  const std::string id = r.new_session();
  const std::string base = "/sessions/" + id;

  auto [s0, b0] = r.post(base + "/match", json{{"target", "f0-000"}, {"k", 5}});
  CHECK(s0 == 409);
  CHECK(b0["error"] == "DependencyError");
  CHECK(b0["message"].get<std::string>().find("structure embedding not trained") != std::string::npos);

  auto [s1, b1] = r.post(base + "/embed", kEmbed);
  REQUIRE(s1 == 200);
  CHECK(b1["dim"] == 8);
  auto [s2, b2] = r.post(base + "/fuse", json::object());
  REQUIRE(s2 == 200);
  CHECK(b2["pairs"] == 3);

  auto [s3, b3] = r.post(base + "/match", json{{"target", "f0-000"}, {"k", 5}});
  REQUIRE(s3 == 200);
  MatchRequest req;
  req.target = std::string("f0-000");
  const MatchResponse direct = r.server.session(id)->match(req);
  CHECK(b3["result"] == to_json(direct.result));
  CHECK(b3["result"]["space"] == "fused");
  REQUIRE(b3["graphs"].size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(b3["graphs"][i]["graph"]["id"] == direct.result.hits[i].graph_id);
  // idempotent
  CHECK(r.post(base + "/match", json{{"target", "f0-000"}, {"k", 5}}).second == b3);

  auto [s4, b4] = r.get(base + "/status");
  CHECK(s4 == 200);
  CHECK(b4["stages"]["embed"] == true);
  CHECK(b4["stages"]["fuse"] == true);
  CHECK(b4["results"]["embed"]["dim"] == 8);

  // re-embedding makes the fused space unavailable again
  r.post(base + "/embed", kEmbed);
  CHECK(r.post(base + "/match", json{{"target", "f0-000"}}).first == 409);
}

TEST_CASE("views: graph detail, parallel coordinates, scatter, cluster, projection") {
  Running r;
  const std::string id = r.new_session();
  const std::string base = "/sessions/" + id;
  r.post(base + "/embed", kEmbed);
  r.post(base + "/fuse", json::object());

  auto [s1, b1] = r.get(base + "/graphs/f1-002");
  CHECK(s1 == 200);
  CHECK(b1 == r.server.session(id)->graph_detail("f1-002"));
  CHECK(r.get(base + "/graphs/zzz").first == 404);

  auto [s2, b2] = r.post(base + "/parallel-coords", json{{"graphIds", {"f1-002"}}});
  CHECK(s2 == 200);
  CHECK(b2["polylines"].size() == 1);
  CHECK(b2["axes"].size() == 3);

  auto [s3, b3] = r.get(base + "/scatter?x=span&y=nodeCount");
  CHECK(s3 == 200);
  CHECK(b3["points"].size() == 24);
  auto [s3b, b3b] = r.get(base + "/scatter?x=span&y=nope");
  CHECK(s3b == 400);
  CHECK(b3b["error"] == "UnknownAttribute");

  auto [s4, b4] = r.post(base + "/cluster", json{{"space", "fused"}, {"method", "kmeans"}, {"k", 3}});
  CHECK(s4 == 200);
  CHECK(b4["clusters"] == 3);
  CHECK(b4["labels"].size() == 24);
  auto [s5, b5] = r.post(base + "/match", json{{"target", "f0-000"}, {"method", "cluster"}});
  CHECK(s5 == 200);
  CHECK(b5["result"]["method"] == "cluster");
  auto [s5b, b5b] = r.post(base + "/cluster", json{{"method", "dbscan"}, {"eps", -1}});
  CHECK(s5b == 400);
  CHECK(b5b["error"] == "BadParams");

  CHECK(r.get(base + "/projection").first == 409);
  auto [s6, b6] = r.post(base + "/project", json{{"perplexity", 5}, {"iterations", 150}});
  CHECK(s6 == 200);
  auto [s7, b7] = r.get(base + "/projection");
  CHECK(s7 == 200);
  CHECK(b7["points"].size() == 24);
  CHECK(b7["points"][0]["cluster"].is_number());

  // a sketched target gets an overlay point once a projection exists
  const Graph& g = r.server.session(id)->corpus().graph("f2-001");
  json sketch = graph_to_json(g);
  sketch.erase("id");
  const double span = g.macro_attrs.at("span");
  auto [s8, b8] = r.post(base + "/match", json{{"target", {{"sketch", sketch}, {"attrRanges", {{"span", {span, span}}}}}}, {"k", 4}});
  CHECK_MESSAGE(s8 == 200, b8.dump());
  CHECK(b8["result"]["targetId"] == "custom");
  CHECK(b8["result"]["hits"].size() == 4);
  CHECK(b8.contains("projectedTarget"));

  json unknown = graph_to_json(motif_graph("clique:14"));
  for (auto& n : unknown["nodes"]) n["attrs"] = {{"m1", 1.0}, {"m2", 1.0}};
  auto [s9, b9] = r.post(base + "/match", json{{"target", {{"sketch", unknown}}}, {"space", "structure"}});
  CHECK(s9 == 422);
  CHECK(b9["error"] == "NoKnownTokens");
}

TEST_CASE("request validation") {
  Running r;
  const std::string base = "/sessions/" + r.new_session();
  auto [s1, b1] = r.post(base + "/embed", std::string("{not json"));
  CHECK(s1 == 400);
  CHECK(b1["error"] == "ValidationError");
  auto [s2, b2] = r.post(base + "/embed", json{{"dim", "eight"}});
  CHECK(s2 == 400);
  CHECK(b2["error"] == "ValidationError");
  auto [s3, b3] = r.post(base + "/embed", json{{"dim", 0}});
  CHECK(s3 == 400);
  CHECK(b3["error"] == "BadParams");
  auto [s4, b4] = r.post(base + "/match", json{{"target", "f0-000"}, {"space", "sideways"}});
  CHECK(s4 == 400);
  // nothing was trained by the failed requests
  CHECK(r.get(base + "/status").second["stages"]["embed"] == false);
}

TEST_CASE("async long stage and Busy") {
  Running r;
  const std::string id = r.new_session();
  const std::string base = "/sessions/" + id;
  {
    Session::LongOp held(*r.server.session(id), "bench");
    auto [s, b] = r.post(base + "/embed", kEmbed);
    CHECK(s == 409);
    CHECK(b["error"] == "Busy");
    CHECK(r.get(base + "/status").second["busy"] == true);
  }

  json body = kEmbed;
  body["async"] = true;
  body["epochs"] = 40;
  auto [s1, b1] = r.post(base + "/embed", body);
  CHECK(s1 == 202);
  CHECK(b1["state"] == "running");
  json status;
  for (int i = 0; i < 600; ++i) {
    status = r.get(base + "/status").second;
    if (status["results"]["embed"]["state"] != "running") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  CHECK(status["results"]["embed"]["state"] == "done");
  CHECK(status["stages"]["embed"] == true);
  CHECK(status["busy"] == false);

  // a failing async stage reports its error kind
  auto [s2, b2] = r.post(base + "/project", json{{"async", true}, {"space", "fused"}});
  if (s2 == 202) {
    for (int i = 0; i < 600; ++i) {
      status = r.get(base + "/status").second;
      if (status["results"]["project"]["state"] != "running") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    CHECK(status["results"]["project"]["state"] == "failed");
    CHECK(status["results"]["project"]["error"] == "DependencyError");
  } else {
    CHECK(s2 == 409);
  }
}

TEST_CASE("bench over HTTP") {
  Running r;
  const std::string id = r.new_session();
  const std::string base = "/sessions/" + id;
  r.post(base + "/embed", kEmbed);
  const json params = {{"kValues", {3}}, {"targets", 4}, {"strategies", {"Str", "CCA"}}};
  auto [s, b] = r.post(base + "/bench", params);
  CHECK(s == 200);
  CHECK(b["rows"].size() == 2);
  CHECK(b["targets"].size() == 4);
  CHECK(b["table"].get<std::string>().find("CCA") != std::string::npos);
  CHECK(report_from_json(b) == r.server.session(id)->bench(bench_params_from_json(params)));
}

TEST_CASE("static files are served at the root") {
  const auto dir = std::filesystem::temp_directory_path() / "gmatch_static_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "index.html");
    f << "<html>ok</html>";
  }
  {
    Running r(dir.string());
    auto res = r.client->Get("/index.html");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == "<html>ok</html>");
  }
  std::filesystem::remove_all(dir);
}
