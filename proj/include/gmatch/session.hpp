#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmatch/attributes.hpp"
#include "gmatch/bench.hpp"
#include "gmatch/cca.hpp"
#include "gmatch/graph.hpp"
#include "gmatch/match.hpp"
#include "gmatch/skipgram.hpp"

namespace gmatch {

// A target drawn or templated by the user plus attribute slider ranges.
struct CustomTarget {
  Graph sketch;
  std::map<std::string, std::pair<double, double>> attr_ranges;  // name -> (min, max)
  bool filter_by_range = false;  // drop hits outside any range after k-NN
};

struct MatchRequest {
  std::variant<std::string, CustomTarget> target;
  Space space = Space::Fused;
  MatchMethod method = MatchMethod::Knn;
  int k = 5;
};

struct MatchResponse {
  MatchResult result;
  std::vector<Graph> hit_graphs;  // payloads in hit order
};

// Pipeline state for one loaded corpus: corpus -> structure/attribute
// vectors -> CCA model -> fused index, plus clustering and projection.
// Replacing an upstream artifact drops everything downstream of it.
//
// Readers may run concurrently; mutations are serialized. At most one long
// operation (embed, project, bench) runs at a time; others get Busy.
class Session {
 public:
  explicit Session(Corpus corpus);

  const Corpus& corpus() const { return corpus_; }

  class LongOp;

  // ---- mutating stages ----
  // Long stages take the LongOp guard themselves; the overloads accepting
  // a guard let a caller acquire it up front (e.g. before going async).
  nlohmann::json run_embed(const EmbedConfig& cfg);
  nlohmann::json run_embed(const LongOp& held, const EmbedConfig& cfg);
  nlohmann::json run_fuse(const CcaOptions& opts);
  nlohmann::json run_cluster(Space space, ClusterMethod method, const ClusterParams& params);
  nlohmann::json run_project(Space space, const TsneParams& params);
  nlohmann::json run_project(const LongOp& held, Space space, const TsneParams& params);

  // Installs artifacts produced elsewhere (CLI model files).
  void adopt_embedding(SkipGramModel model);
  void adopt_cca(CcaModel model);

  // ---- read-only ----
  MatchResponse match(const MatchRequest& req) const;
  nlohmann::json graph_detail(const std::string& graph_id) const;
  nlohmann::json parallel_coords(const std::vector<std::string>& graph_ids, int bins = 20) const;
  BenchReport bench(const BenchParams& params);
  BenchReport bench(const LongOp& held, const BenchParams& params);
  nlohmann::json status() const;

  EmbeddingIndex index(Space space) const;
  std::optional<ClusterLabels> cluster_labels() const;
  std::optional<Projection> projection() const;
  std::optional<SkipGramModel> skipgram_model() const;
  std::optional<CcaModel> cca_model() const;

  // Standardized attribute-space and fused vectors for a custom target.
  Vector custom_vector(const CustomTarget& t, Space space) const;
  // Out-of-sample projection point for a custom target.
  ProjectionPoint project_custom(const CustomTarget& t) const;

  // Long-operation guard; throws Busy when another long op is running.
  class LongOp {
   public:
    LongOp(Session& s, std::string name);
    ~LongOp();
    LongOp(const LongOp&) = delete;
    LongOp& operator=(const LongOp&) = delete;

   private:
    Session& s_;
  };

 private:
  struct Artifacts {
    std::optional<SkipGramModel> skipgram;
    std::optional<CcaModel> cca;
    std::optional<EmbeddingIndex> structure_index;
    std::optional<EmbeddingIndex> fused_index;
    std::optional<ClusterLabels> clusters;
    std::optional<Space> cluster_space;
    std::optional<Projection> projection;
    std::optional<Space> projection_space;
  };

  const EmbeddingIndex& index_locked(Space space) const;
  void install_embedding_locked(SkipGramModel model);
  void install_cca_locked(CcaModel model);
  Vector attribute_point(const CustomTarget& t) const;

  Corpus corpus_;
  RowMatrix raw_attributes_;       // M x N_A as extracted
  RowMatrix attribute_features_;   // log flags applied
  NormalizationStats attr_stats_;
  EmbeddingIndex attribute_index_;
  Artifacts art_;

  mutable std::shared_mutex mutex_;
  std::atomic<bool> busy_{false};
  std::string busy_op_;
  mutable std::mutex busy_mutex_;
};

// JSON views shared by the HTTP API, CLI and bindings.
nlohmann::json to_json(const MatchResult& r);
nlohmann::json to_json(const ClusterLabels& c);
nlohmann::json to_json(const Projection& p);
nlohmann::json to_json(const StatsRecord& s);
CustomTarget custom_target_from_json(const nlohmann::json& j, const AttributeSchema& schema);
MatchRequest match_request_from_json(const nlohmann::json& j, const AttributeSchema& schema);
EmbedConfig embed_config_from_json(const nlohmann::json& j);
CcaOptions cca_options_from_json(const nlohmann::json& j);
ClusterParams cluster_params_from_json(const nlohmann::json& j);
TsneParams tsne_params_from_json(const nlohmann::json& j);
BenchParams bench_params_from_json(const nlohmann::json& j);

}  // namespace gmatch
