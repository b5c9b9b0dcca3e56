#include "gmatch/session.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gmatch/error.hpp"

namespace gmatch {

using nlohmann::json;

namespace {

constexpr const char* kNoEmbedding = "structure embedding not trained";
constexpr const char* kNoFusion = "CCA fusion not fitted";

std::vector<std::string> corpus_ids(const Corpus& c) {
  std::vector<std::string> ids;
  ids.reserve(c.size());
  for (const Graph& g : c.graphs) ids.push_back(g.id);
  return ids;
}

}  // namespace

Session::LongOp::LongOp(Session& s, std::string name) : s_(s) {
  std::lock_guard lock(s_.busy_mutex_);
  if (s_.busy_) throw Busy("operation '" + s_.busy_op_ + "' is still running");
  s_.busy_ = true;
  s_.busy_op_ = std::move(name);
}

Session::LongOp::~LongOp() {
  std::lock_guard lock(s_.busy_mutex_);
  s_.busy_ = false;
  s_.busy_op_.clear();
}

Session::Session(Corpus corpus) : corpus_(std::move(corpus)) {
  validate_corpus(corpus_);
  if (corpus_.size() < 2) throw ValidationError("a session needs at least 2 graphs");
  raw_attributes_ = attribute_matrix(corpus_);
  attribute_features_ = feature_transform(raw_attributes_, corpus_.schema);
  auto [standardized, stats] = standardize(attribute_features_);
  attr_stats_ = std::move(stats);
  attribute_index_ = make_index(Space::Attribute, std::move(standardized), corpus_ids(corpus_));
}

void Session::install_embedding_locked(SkipGramModel model) {
  if (model.graph_ids != corpus_ids(corpus_)) {
    throw ValidationError("embedding model rows do not match the corpus graphs");
  }
  art_ = Artifacts{};
  art_.structure_index = make_index(Space::Structure, model.graph_vectors, model.graph_ids);
  art_.skipgram = std::move(model);
}

void Session::install_cca_locked(CcaModel model) {
  if (!art_.skipgram) throw DependencyError(kNoEmbedding);
  RowMatrix fused = fuse_corpus(model, art_.skipgram->graph_vectors, attribute_features_);
  art_.fused_index = make_index(Space::Fused, std::move(fused), corpus_ids(corpus_));
  art_.cca = std::move(model);
  if (art_.cluster_space == Space::Fused) {
    art_.clusters.reset();
    art_.cluster_space.reset();
  }
  if (art_.projection_space == Space::Fused) {
    art_.projection.reset();
    art_.projection_space.reset();
  }
}

json Session::run_embed(const EmbedConfig& cfg) {
  LongOp guard(*this, "embed");
  return run_embed(guard, cfg);
}

json Session::run_embed(const LongOp&, const EmbedConfig& cfg) {
  SkipGramModel model = train_graphs(corpus_.graphs, cfg);
  json summary = {{"stage", "embed"},
                  {"graphs", model.graph_ids.size()},
                  {"vocabulary", model.vocab.size()},
                  {"dim", model.dim()},
                  {"epochs", cfg.epochs},
                  {"finalLoss", model.epoch_loss.empty() ? 0.0 : model.epoch_loss.back()},
                  {"degenerateVocabulary", model.degenerate_vocabulary}};
  std::unique_lock lock(mutex_);
  install_embedding_locked(std::move(model));
  return summary;
}

void Session::adopt_embedding(SkipGramModel model) {
  std::unique_lock lock(mutex_);
  install_embedding_locked(std::move(model));
}

json Session::run_fuse(const CcaOptions& opts) {
  std::unique_lock lock(mutex_);
  if (!art_.skipgram) throw DependencyError(kNoEmbedding);
  CcaModel model = fit_cca(art_.skipgram->graph_vectors, attribute_features_, opts);
  json summary = {{"stage", "fuse"},
                  {"pairs", model.pairs()},
                  {"correlations", std::vector<double>(model.correlations.data(),
                                                       model.correlations.data() + model.correlations.size())},
                  {"ridgeStructure", model.ridge_s},
                  {"ridgeAttribute", model.ridge_a},
                  {"weighted", model.weighted},
                  {"rankDeficient", model.rank_deficient}};
  install_cca_locked(std::move(model));
  return summary;
}

void Session::adopt_cca(CcaModel model) {
  std::unique_lock lock(mutex_);
  install_cca_locked(std::move(model));
}

json Session::run_cluster(Space space, ClusterMethod method, const ClusterParams& params) {
  std::unique_lock lock(mutex_);
  ClusterLabels labels = cluster(index_locked(space), method, params);
  json summary = {{"stage", "cluster"}, {"space", to_string(space)}, {"clusters", labels.cluster_count()}};
  summary["noise"] = std::count(labels.labels.begin(), labels.labels.end(), kNoise);
  if (art_.projection && art_.projection_space == space) attach_clusters(*art_.projection, labels);
  art_.clusters = std::move(labels);
  art_.cluster_space = space;
  return summary;
}

json Session::run_project(Space space, const TsneParams& params) {
  LongOp guard(*this, "project");
  return run_project(guard, space, params);
}

json Session::run_project(const LongOp&, Space space, const TsneParams& params) {
  EmbeddingIndex idx;
  {
    std::shared_lock lock(mutex_);
    idx = index_locked(space);
  }
  Projection proj = project_tsne(idx, params);
  std::unique_lock lock(mutex_);
  // The index may have been replaced while the projection ran.
  const EmbeddingIndex& now = index_locked(space);
  if (now.matrix != idx.matrix) throw DependencyError("index changed during projection; rerun project");
  if (art_.clusters && art_.cluster_space == space) attach_clusters(proj, *art_.clusters);
  json summary = {{"stage", "project"}, {"space", to_string(space)}, {"points", proj.points.size()},
                  {"klFinal", proj.kl_final()}};
  art_.projection = std::move(proj);
  art_.projection_space = space;
  return summary;
}

const EmbeddingIndex& Session::index_locked(Space space) const {
  switch (space) {
    case Space::Attribute:
      return attribute_index_;
    case Space::Structure:
      if (!art_.structure_index) throw DependencyError(kNoEmbedding);
      return *art_.structure_index;
    case Space::Fused:
      if (!art_.skipgram) throw DependencyError(kNoEmbedding);
      if (!art_.fused_index) throw DependencyError(kNoFusion);
      return *art_.fused_index;
  }
  throw BadParams("unknown space");
}

EmbeddingIndex Session::index(Space space) const {
  std::shared_lock lock(mutex_);
  return index_locked(space);
}

std::optional<ClusterLabels> Session::cluster_labels() const {
  std::shared_lock lock(mutex_);
  return art_.clusters;
}

std::optional<Projection> Session::projection() const {
  std::shared_lock lock(mutex_);
  return art_.projection;
}

std::optional<SkipGramModel> Session::skipgram_model() const {
  std::shared_lock lock(mutex_);
  return art_.skipgram;
}

std::optional<CcaModel> Session::cca_model() const {
  std::shared_lock lock(mutex_);
  return art_.cca;
}

Vector Session::attribute_point(const CustomTarget& t) const {
  const auto names = corpus_.schema.attribute_names();
  for (const auto& [name, _] : t.attr_ranges) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw UnknownAttribute("unknown attribute '" + name + "' in target ranges");
    }
  }
  Vector point(static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto col = raw_attributes_.col(static_cast<Eigen::Index>(j));
    auto it = t.attr_ranges.find(names[j]);
    if (it == t.attr_ranges.end()) {
      // Unconstrained attributes sit at the corpus mean.
      point[static_cast<Eigen::Index>(j)] = col.mean();
      continue;
    }
    const auto [lo, hi] = it->second;
    const double tol = 1e-9 * std::max(1.0, col.cwiseAbs().maxCoeff());
    if (!(lo <= hi)) throw ValidationError("range for '" + names[j] + "' has min > max");
    if (lo < col.minCoeff() - tol || hi > col.maxCoeff() + tol) {
      throw ValidationError("range for '" + names[j] + "' exceeds the corpus bounds");
    }
    point[static_cast<Eigen::Index>(j)] = 0.5 * (lo + hi);
  }
  return point;
}

Vector Session::custom_vector(const CustomTarget& t, Space space) const {
  std::shared_lock lock(mutex_);
  if (space == Space::Attribute) {
    return attr_stats_.apply(feature_transform(attribute_point(t), corpus_.schema));
  }
  if (!art_.skipgram) throw DependencyError(kNoEmbedding);
  Graph sketch = t.sketch;
  if (sketch.id.empty()) sketch.id = kCustomTarget;
  prepare_graph(sketch, corpus_.schema);
  const StructureVector s = embed_new_graph(sketch, *art_.skipgram, art_.skipgram->config);
  if (space == Space::Structure) return s.values;
  if (!art_.cca) throw DependencyError(kNoFusion);
  return transform(*art_.cca, s.values, feature_transform(attribute_point(t), corpus_.schema));
}

ProjectionPoint Session::project_custom(const CustomTarget& t) const {
  std::optional<Space> space;
  {
    std::shared_lock lock(mutex_);
    if (!art_.projection) throw DependencyError("projection not computed");
    space = art_.projection_space;
  }
  const Vector v = custom_vector(t, *space);
  std::shared_lock lock(mutex_);
  return place_out_of_sample(index_locked(*space), *art_.projection, v);
}

MatchResponse Session::match(const MatchRequest& req) const {
  MatchResponse out;
  if (const auto* id = std::get_if<std::string>(&req.target)) {
    std::shared_lock lock(mutex_);
    const EmbeddingIndex& idx = index_locked(req.space);
    if (req.method == MatchMethod::Knn) {
      out.result = knn_match(idx, *id, req.k);
    } else {
      if (!art_.clusters || art_.cluster_space != req.space) {
        throw DependencyError("clustering not run for the " + to_string(req.space) + " space");
      }
      out.result = cluster_match(idx, *art_.clusters, *id);
    }
  } else {
    const auto& custom = std::get<CustomTarget>(req.target);
    if (req.method != MatchMethod::Knn) throw BadParams("custom targets support k-NN matching only");
    const Vector v = custom_vector(custom, req.space);
    std::shared_lock lock(mutex_);
    out.result = knn_match(index_locked(req.space), v, req.k);
    if (custom.filter_by_range && !custom.attr_ranges.empty()) {
      const auto names = corpus_.schema.attribute_names();
      std::vector<Hit> kept;
      for (const Hit& h : out.result.hits) {
        const auto row = raw_attributes_.row(static_cast<Eigen::Index>(corpus_.index_of(h.graph_id)));
        bool inside = true;
        for (std::size_t j = 0; j < names.size(); ++j) {
          auto it = custom.attr_ranges.find(names[j]);
          if (it == custom.attr_ranges.end()) continue;
          const double x = row[static_cast<Eigen::Index>(j)];
          inside = inside && x >= it->second.first && x <= it->second.second;
        }
        if (inside) kept.push_back(h);
      }
      out.result.hits = std::move(kept);
    }
  }
  for (const Hit& h : out.result.hits) out.hit_graphs.push_back(corpus_.graph(h.graph_id));
  return out;
}

json Session::graph_detail(const std::string& graph_id) const {
  const Graph& g = corpus_.graph(graph_id);
  const auto names = corpus_.schema.attribute_names();
  const auto row = raw_attributes_.row(static_cast<Eigen::Index>(corpus_.index_of(graph_id)));
  json attrs = json::object();
  for (std::size_t j = 0; j < names.size(); ++j) attrs[names[j]] = row[static_cast<Eigen::Index>(j)];
  return {{"graph", graph_to_json(g)}, {"stats", to_json(graph_stats(g))}, {"attributes", attrs}};
}

json Session::parallel_coords(const std::vector<std::string>& graph_ids, int bins) const {
  if (bins < 1) throw BadParams("bins must be >= 1");
  const auto names = corpus_.schema.attribute_names();
  json axes = json::array();
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto col = raw_attributes_.col(static_cast<Eigen::Index>(j));
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    std::vector<std::size_t> hist(static_cast<std::size_t>(bins), 0);
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      std::size_t b = 0;
      if (hi > lo) b = std::min<std::size_t>(static_cast<std::size_t>((col[i] - lo) / (hi - lo) * bins), bins - 1);
      ++hist[b];
    }
    axes.push_back({{"name", names[j]}, {"min", lo}, {"max", hi}, {"histogram", hist}});
  }
  json lines = json::array();
  for (const auto& id : graph_ids) {
    const auto row = raw_attributes_.row(static_cast<Eigen::Index>(corpus_.index_of(id)));
    lines.push_back({{"graphId", id}, {"values", std::vector<double>(row.data(), row.data() + row.size())}});
  }
  return {{"axes", axes}, {"polylines", lines}};
}

BenchReport Session::bench(const BenchParams& params) {
  LongOp guard(*this, "bench");
  return bench(guard, params);
}

BenchReport Session::bench(const LongOp&, const BenchParams& params) {
  RowMatrix structure;
  {
    std::shared_lock lock(mutex_);
    if (!art_.skipgram) throw DependencyError(kNoEmbedding);
    structure = art_.skipgram->graph_vectors;
  }
  return run_benchmark(corpus_, structure, params);
}

json Session::status() const {
  std::shared_lock lock(mutex_);
  json s = {{"graphs", corpus_.size()}, {"dataset", corpus_.name}};
  {
    std::lock_guard busy(busy_mutex_);
    s["busy"] = busy_.load();
    s["operation"] = busy_op_;
  }
  s["stages"] = {{"embed", art_.skipgram.has_value()},
                 {"fuse", art_.cca.has_value()},
                 {"cluster", art_.cluster_space ? json(to_string(*art_.cluster_space)) : json(nullptr)},
                 {"project", art_.projection_space ? json(to_string(*art_.projection_space)) : json(nullptr)}};
  std::vector<std::string> spaces{"attribute"};
  if (art_.structure_index) spaces.push_back("structure");
  if (art_.fused_index) spaces.push_back("fused");
  s["spaces"] = spaces;
  return s;
}

// ---- JSON views ---------------------------------------------------------------

json to_json(const MatchResult& r) {
  json hits = json::array();
  for (const Hit& h : r.hits) hits.push_back({{"graphId", h.graph_id}, {"distance", h.distance}});
  return {{"targetId", r.target_id}, {"space", to_string(r.space)}, {"k", r.k},
          {"method", to_string(r.method)}, {"hits", hits}};
}

json to_json(const ClusterLabels& c) {
  json labels = json::array();
  for (std::size_t i = 0; i < c.labels.size(); ++i) labels.push_back({{"graphId", c.graph_ids[i]}, {"label", c.labels[i]}});
  return {{"method", to_string(c.method)}, {"clusters", c.cluster_count()}, {"labels", labels}};
}

json to_json(const Projection& p) {
  json pts = json::array();
  for (const auto& q : p.points) {
    json r = {{"graphId", q.graph_id}, {"x", q.x}, {"y", q.y}};
    r["cluster"] = q.cluster ? json(*q.cluster) : json(nullptr);
    pts.push_back(std::move(r));
  }
  return {{"points", pts}, {"klFinal", p.kl_final()}};
}

json to_json(const StatsRecord& s) {
  json hist = json::object();
  for (const auto& [deg, count] : s.degree_histogram) hist[std::to_string(deg)] = count;
  return {{"nodeCount", s.node_count}, {"edgeCount", s.edge_count}, {"depth", s.depth}, {"degreeHistogram", hist}};
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(std::string("field '") + key + "': " + e.what());
    }
  }
}

template <typename T>
void maybe(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) {
    T v{};
    maybe(j, key, v);
    out = v;
  }
}

}  // namespace

CustomTarget custom_target_from_json(const json& j, const AttributeSchema& schema) {
  CustomTarget t;
  if (!j.contains("sketch")) throw ValidationError("custom target needs a 'sketch' graph");
  json sketch = j.at("sketch");
  if (!sketch.contains("id")) sketch["id"] = kCustomTarget;
  try {
    t.sketch = graph_from_json(sketch);
  } catch (const ParseError& e) {
    throw ValidationError(e.what());
  }
  prepare_graph(t.sketch, schema);
  if (j.contains("attrRanges")) {
    for (const auto& [name, range] : j.at("attrRanges").items()) {
      if (!range.is_array() || range.size() != 2) throw ValidationError("range for '" + name + "' must be [min, max]");
      t.attr_ranges[name] = {range[0].get<double>(), range[1].get<double>()};
    }
  }
  maybe(j, "filterByRange", t.filter_by_range);
  return t;
}

MatchRequest match_request_from_json(const json& j, const AttributeSchema& schema) {
  MatchRequest r;
  if (!j.contains("target")) throw ValidationError("match request needs a 'target'");
  const json& target = j.at("target");
  if (target.is_string()) {
    r.target = target.get<std::string>();
  } else if (target.is_object()) {
    r.target = custom_target_from_json(target, schema);
  } else {
    throw ValidationError("target must be a graph id or a custom target object");
  }
  std::string space = "fused", method = "knn";
  maybe(j, "space", space);
  maybe(j, "method", method);
  r.space = parse_space(space);
  r.method = parse_match_method(method);
  maybe(j, "k", r.k);
  return r;
}

EmbedConfig embed_config_from_json(const json& j) {
  EmbedConfig c;
  maybe(j, "dim", c.dim);
  maybe(j, "epochs", c.epochs);
  maybe(j, "learningRate", c.learning_rate);
  maybe(j, "minLearningRate", c.min_learning_rate);
  maybe(j, "negatives", c.negatives);
  maybe(j, "seed", c.seed);
  maybe(j, "wlDegree", c.wl_degree);
  maybe(j, "threads", c.threads);
  c.validate();
  return c;
}

CcaOptions cca_options_from_json(const json& j) {
  CcaOptions o;
  maybe(j, "m", o.pairs);
  maybe(j, "ridge", o.ridge);
  maybe(j, "weighted", o.weighted);
  return o;
}

ClusterParams cluster_params_from_json(const json& j) {
  ClusterParams p;
  maybe(j, "eps", p.eps);
  maybe(j, "minPts", p.min_pts);
  maybe(j, "k", p.k);
  maybe(j, "seed", p.seed);
  maybe(j, "maxIterations", p.max_iterations);
  maybe(j, "restarts", p.restarts);
  return p;
}

TsneParams tsne_params_from_json(const json& j) {
  TsneParams p;
  maybe(j, "perplexity", p.perplexity);
  maybe(j, "iterations", p.iterations);
  maybe(j, "seed", p.seed);
  maybe(j, "learningRate", p.learning_rate);
  return p;
}

BenchParams bench_params_from_json(const json& j) {
  BenchParams p;
  if (j.contains("strategies")) {
    p.strategies.clear();
    for (const auto& s : j.at("strategies")) p.strategies.push_back(parse_strategy(s.get<std::string>()));
  }
  maybe(j, "kValues", p.k_values);
  maybe(j, "targets", p.n_targets);
  maybe(j, "seed", p.seed);
  maybe(j, "beamWidth", p.beam_width);
  maybe(j, "standardizedAttrDistance", p.standardized_attr_distance);
  if (j.contains("cca")) p.strategy.cca = cca_options_from_json(j.at("cca"));
  maybe(j, "reducedDim", p.strategy.reduced_dim);
  return p;
}

}  // namespace gmatch
