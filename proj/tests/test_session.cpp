#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "gmatch/error.hpp"
#include "gmatch/session.hpp"

using namespace gmatch;

namespace {

EmbedConfig small_embed(std::uint64_t seed = 3) {
  EmbedConfig c;
  c.dim = 8;
  c.epochs = 10;
  c.seed = seed;
  return c;
}

std::unique_ptr<Session> prepared(std::uint64_t seed = 2) {
  auto s = std::make_unique<Session>(gen_synthetic(planted_spec(8, 0.1), seed));
  s->run_embed(small_embed());
  s->run_fuse({});
  return s;
}

std::string dependency_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const DependencyError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("session needs two valid graphs") {
  Corpus c = gen_synthetic(planted_spec(2, 0.0), 1);
  c.graphs.resize(1);
  CHECK_THROWS_AS(Session{c}, ValidationError);
}

TEST_CASE("pipeline order is enforced") {
  Session s(gen_synthetic(planted_spec(5, 0.1), 1));
  MatchRequest req;
  req.target = s.corpus().graphs[0].id;
  const std::string msg = dependency_message([&] { s.match(req); });
  CHECK(msg.find("structure embedding not trained") != std::string::npos);
  CHECK_THROWS_AS(s.run_fuse({}), DependencyError);
  CHECK_THROWS_AS(s.bench({}), DependencyError);
  CHECK_THROWS_AS(s.run_cluster(Space::Structure, ClusterMethod::Kmeans, {}), DependencyError);

  // the attribute space needs nothing upstream
  req.space = Space::Attribute;
  CHECK(s.match(req).result.hits.size() == 5);

  s.run_embed(small_embed());
  req.space = Space::Fused;
  CHECK(dependency_message([&] { s.match(req); }).find("CCA") != std::string::npos);
  req.space = Space::Structure;
  CHECK_NOTHROW(s.match(req));

  req.method = MatchMethod::Cluster;
  CHECK_THROWS_AS(s.match(req), DependencyError);
}

TEST_CASE("match equals a direct engine call") {
  auto s = prepared();
  const SkipGramModel m = *s->skipgram_model();
  const CcaModel cca = *s->cca_model();
  const RowMatrix fused = fuse_corpus(cca, m.graph_vectors, feature_transform(attribute_matrix(s->corpus()), s->corpus().schema));
  const EmbeddingIndex idx = make_index(Space::Fused, fused, m.graph_ids);
  for (const Graph& g : s->corpus().graphs) {
    MatchRequest req;
    req.target = g.id;
    req.k = 5;
    const MatchResponse r = s->match(req);
    const MatchResult direct = knn_match(idx, g.id, 5);
    CHECK(r.result.hits == direct.hits);
    CHECK(r.result.space == Space::Fused);
    REQUIRE(r.hit_graphs.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.hit_graphs[i] == s->corpus().graph(r.result.hits[i].graph_id));
    // identical requests give identical answers
    CHECK(s->match(req).result.hits == r.result.hits);
  }
}

TEST_CASE("re-embedding drops downstream artifacts") {
  auto s = prepared();
  s->run_cluster(Space::Fused, ClusterMethod::Kmeans, {});
  TsneParams tp;
  tp.perplexity = 5;
  tp.iterations = 100;
  s->run_project(Space::Fused, tp);
  CHECK(s->cluster_labels());
  CHECK(s->projection());
  CHECK(s->status()["stages"]["fuse"] == true);

  s->run_embed(small_embed(9));
  CHECK_FALSE(s->cca_model());
  CHECK_FALSE(s->cluster_labels());
  CHECK_FALSE(s->projection());
  MatchRequest req;
  req.target = s->corpus().graphs[0].id;
  CHECK_THROWS_AS(s->match(req), DependencyError);
  const auto status = s->status();
  CHECK(status["stages"]["fuse"] == false);
  CHECK(status["spaces"] == nlohmann::json::array({"attribute", "structure"}));
}

TEST_CASE("refitting CCA drops only fused clustering") {
  auto s = prepared();
  s->run_cluster(Space::Structure, ClusterMethod::Kmeans, {});
  s->run_fuse({});
  CHECK(s->cluster_labels());
  s->run_cluster(Space::Fused, ClusterMethod::Kmeans, {});
  s->run_fuse({2, std::nullopt, false});
  CHECK_FALSE(s->cluster_labels());
}

TEST_CASE("cluster matching through the session") {
  auto s = prepared();
  ClusterParams p;
  p.k = 3;
  s->run_cluster(Space::Fused, ClusterMethod::Kmeans, p);
  const ClusterLabels labels = *s->cluster_labels();
  MatchRequest req;
  req.target = labels.graph_ids[0];
  req.method = MatchMethod::Cluster;
  const MatchResponse r = s->match(req);
  for (const Hit& h : r.result.hits) {
    const auto it = std::find(labels.graph_ids.begin(), labels.graph_ids.end(), h.graph_id);
    CHECK(labels.labels[static_cast<std::size_t>(it - labels.graph_ids.begin())] == labels.labels[0]);
  }
  req.space = Space::Structure;
  CHECK_THROWS_AS(s->match(req), DependencyError);
}

TEST_CASE("graph detail and parallel coordinates") {
  auto s = prepared();
  const Graph& g = s->corpus().graphs[3];
  const auto detail = s->graph_detail(g.id);
  CHECK(detail["graph"]["id"] == g.id);
  CHECK(detail["stats"]["nodeCount"] == g.nodes.size());
  CHECK(detail["attributes"]["span"] == g.macro_attrs.at("span"));
  CHECK_THROWS_AS(s->graph_detail("nope"), NotFound);

  const auto pc = s->parallel_coords({g.id}, 7);
  REQUIRE(pc["polylines"].size() == 1);
  CHECK(pc["polylines"][0]["graphId"] == g.id);
  REQUIRE(pc["axes"].size() == 3);
  for (const auto& axis : pc["axes"]) {
    std::size_t total = 0;
    for (const auto& c : axis["histogram"]) total += c.get<std::size_t>();
    CHECK(total == s->corpus().size());
    CHECK(axis["histogram"].size() == 7);
  }
  CHECK_THROWS_AS(s->parallel_coords({"nope"}), NotFound);
  CHECK_THROWS_AS(s->parallel_coords({g.id}, 0), BadParams);
}

TEST_CASE("custom targets") {
  auto s = prepared();
  const Corpus& c = s->corpus();
  const RowMatrix raw = attribute_matrix(c);
  const auto names = c.schema.attribute_names();

  // a sketch identical to a corpus graph, ranges pinned to its values
  CustomTarget t;
  t.sketch = c.graphs[4];
  t.sketch.id = kCustomTarget;
  for (std::size_t j = 0; j < names.size(); ++j) t.attr_ranges[names[j]] = {raw(4, j), raw(4, j)};

  MatchRequest req;
  req.target = t;
  req.space = Space::Attribute;
  req.k = 3;
  const MatchResponse attr = s->match(req);
  CHECK(attr.result.target_id == kCustomTarget);
  CHECK(attr.result.hits[0].graph_id == c.graphs[4].id);
  CHECK(attr.result.hits[0].distance < 1e-9);

  req.space = Space::Fused;
  const MatchResponse fused = s->match(req);
  CHECK(fused.result.hits.size() == 3);
  CHECK(s->match(req).result.hits == fused.result.hits);
  CHECK(s->custom_vector(t, Space::Fused).size() == static_cast<Eigen::Index>(s->index(Space::Fused).dim()));

  // range filtering keeps only graphs inside every range
  CustomTarget wide = t;
  wide.attr_ranges = {{"span", {raw.col(0).minCoeff(), raw(4, 0)}}};
  wide.filter_by_range = true;
  req.target = wide;
  req.k = static_cast<int>(c.size());
  for (const Hit& h : s->match(req).result.hits) {
    CHECK(raw(static_cast<Eigen::Index>(c.index_of(h.graph_id)), 0) <= raw(4, 0));
  }

  CustomTarget bad = t;
  bad.attr_ranges = {{"weight", {0, 1}}};
  req.target = bad;
  CHECK_THROWS_AS(s->match(req), UnknownAttribute);
  bad.attr_ranges = {{"span", {raw.col(0).minCoeff() - 100, raw(4, 0)}}};
  req.target = bad;
  CHECK_THROWS_AS(s->match(req), ValidationError);
  bad.attr_ranges = {{"span", {raw(4, 0), raw.col(0).minCoeff()}}};
  req.target = bad;
  if (raw(4, 0) > raw.col(0).minCoeff()) CHECK_THROWS_AS(s->match(req), ValidationError);

  // seed labels are degrees, and no corpus node has degree 13
  CustomTarget unknown;
  unknown.sketch = motif_graph("clique:14");
  for (auto& n : unknown.sketch.nodes) n.attrs = {{"m1", 1.0}, {"m2", 1.0}};
  req.target = unknown;
  CHECK_THROWS_AS(s->match(req), NoKnownTokens);

  req.target = t;
  req.method = MatchMethod::Cluster;
  CHECK_THROWS_AS(s->match(req), BadParams);
}

TEST_CASE("custom target projection overlay") {
  auto s = prepared();
  CustomTarget t;
  t.sketch = s->corpus().graphs[0];
  CHECK_THROWS_AS(s->project_custom(t), DependencyError);
  TsneParams tp;
  tp.perplexity = 5;
  tp.iterations = 150;
  s->run_project(Space::Fused, tp);
  const ProjectionPoint p = s->project_custom(t);
  CHECK(std::isfinite(p.x));
  CHECK(std::isfinite(p.y));
}

TEST_CASE("one long operation at a time") {
  auto s = prepared();
  {
    Session::LongOp held(*s, "embed");
    CHECK(s->status()["busy"] == true);
    CHECK(s->status()["operation"] == "embed");
    CHECK_THROWS_AS(s->run_embed(small_embed()), Busy);
    CHECK_THROWS_AS(s->run_project(Space::Fused, {}), Busy);
    CHECK_THROWS_AS(s->bench({}), Busy);
    CHECK_THROWS_AS(Session::LongOp(*s, "bench"), Busy);
    // short stages and reads still go through
    CHECK_NOTHROW(s->run_cluster(Space::Fused, ClusterMethod::Kmeans, {}));
    MatchRequest req;
    req.target = s->corpus().graphs[0].id;
    CHECK_NOTHROW(s->match(req));
  }
  CHECK(s->status()["busy"] == false);
  CHECK_NOTHROW(s->run_embed(small_embed()));
}

TEST_CASE("request json parsing") {
  const Corpus c = gen_synthetic(planted_spec(3, 0.1), 1);
  const auto req = match_request_from_json({{"target", "f0-000"}, {"space", "structure"}, {"k", 2}}, c.schema);
  CHECK(std::get<std::string>(req.target) == "f0-000");
  CHECK(req.space == Space::Structure);
  CHECK(req.k == 2);
  CHECK_THROWS_AS(match_request_from_json({{"space", "fused"}}, c.schema), ValidationError);
  CHECK_THROWS_AS(match_request_from_json({{"target", 3}}, c.schema), ValidationError);
  CHECK_THROWS_AS(match_request_from_json({{"target", "x"}, {"k", "five"}}, c.schema), ValidationError);

  const nlohmann::json custom = {{"target",
                                  {{"sketch", graph_to_json(c.graphs[0])},
                                   {"attrRanges", {{"span", {20, 30}}}},
                                   {"filterByRange", true}}}};
  const auto creq = match_request_from_json(custom, c.schema);
  const auto& t = std::get<CustomTarget>(creq.target);
  CHECK(t.filter_by_range);
  CHECK(t.attr_ranges.at("span") == std::pair<double, double>{20, 30});
  CHECK_THROWS_AS(custom_target_from_json({{"attrRanges", {}}}, c.schema), ValidationError);

  CHECK(cluster_params_from_json({{"k", 4}, {"restarts", 2}}).restarts == 2);
  CHECK_THROWS_AS(embed_config_from_json({{"dim", 0}}), BadParams);
}
