#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmatch/graph.hpp"
#include "gmatch/linalg.hpp"

namespace gmatch {

enum class Space { Structure, Attribute, Fused };

std::string to_string(Space s);
Space parse_space(const std::string& s);

struct EmbeddingIndex {
  Space space = Space::Fused;
  RowMatrix matrix;  // one row per graph
  std::vector<std::string> graph_ids;

  std::size_t size() const { return graph_ids.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
  // Throws NotFound.
  std::size_t index_of(const std::string& graph_id) const;
  Vector row(std::size_t i) const { return matrix.row(static_cast<Eigen::Index>(i)).transpose(); }
};

// Validates shape and finiteness. Throws DimensionMismatch, BadParams.
EmbeddingIndex make_index(Space space, RowMatrix matrix, std::vector<std::string> graph_ids);

struct Hit {
  std::string graph_id;
  double distance = 0.0;

  bool operator==(const Hit&) const = default;
};

enum class MatchMethod { Knn, Cluster };
std::string to_string(MatchMethod m);
MatchMethod parse_match_method(const std::string& s);

inline constexpr const char* kCustomTarget = "custom";

struct MatchResult {
  std::string target_id;  // graph id or "custom"
  Space space = Space::Fused;
  int k = 0;
  MatchMethod method = MatchMethod::Knn;
  std::vector<Hit> hits;  // ascending distance, ties by graph id
};

double euclidean(const Vector& a, const Vector& b);

// Exact linear scan. `exclude_id`, when it names an index row, is left out
// of the hits. Throws EmptyIndex, BadParams, DimensionMismatch.
MatchResult knn_match(const EmbeddingIndex& index, const Vector& target, int k,
                      const std::optional<std::string>& exclude_id = std::nullopt);

// Matches corpus member `target_id` against the rest of the index.
MatchResult knn_match(const EmbeddingIndex& index, const std::string& target_id, int k);

enum class ClusterMethod { Dbscan, Kmeans };
std::string to_string(ClusterMethod m);
ClusterMethod parse_cluster_method(const std::string& s);

struct ClusterParams {
  double eps = 0.5;
  int min_pts = 4;
  int k = 3;
  std::uint64_t seed = 1;
  int max_iterations = 300;
  int restarts = 10;  // k-means++ starts, best objective kept
};

inline constexpr int kNoise = -1;

struct ClusterLabels {
  ClusterMethod method = ClusterMethod::Kmeans;
  ClusterParams params;
  std::vector<std::string> graph_ids;
  std::vector<int> labels;  // -1 = DBSCAN noise
  // k-means only: within-cluster sum of squares after the initial
  // assignment and after each Lloyd update.
  std::vector<double> objective_trace;
  int iterations = 0;

  int cluster_count() const;
};

// Throws BadParams, EmptyIndex.
ClusterLabels cluster(const EmbeddingIndex& index, ClusterMethod method, const ClusterParams& params);

// Same-cluster graphs sorted by distance to the target. Throws
// TargetIsNoise, NotFound.
MatchResult cluster_match(const EmbeddingIndex& index, const ClusterLabels& labels, const std::string& target_id);

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 1;
  std::optional<double> learning_rate;  // default max(M / 12, 50)
  double exaggeration = 12.0;
  std::optional<int> exaggeration_iterations;  // default iterations / 4
};

struct ProjectionPoint {
  std::string graph_id;
  double x = 0.0;
  double y = 0.0;
  std::optional<int> cluster;
};

struct Projection {
  std::vector<ProjectionPoint> points;
  std::vector<double> kl_trace;  // KL(P || Q) with unexaggerated P, per iteration
  int exaggeration_iterations = 0;

  double kl_after_exaggeration() const;
  double kl_final() const { return kl_trace.empty() ? 0.0 : kl_trace.back(); }
};

// Exact t-SNE. Throws PerplexityTooLarge, BadParams.
Projection project_tsne(const EmbeddingIndex& index, const TsneParams& params);

// Places an out-of-corpus vector by inverse-distance interpolation of the
// 2D positions of its `neighbours` nearest index rows.
ProjectionPoint place_out_of_sample(const EmbeddingIndex& index, const Projection& projection,
                                    const Vector& vec, int neighbours = 5);

void attach_clusters(Projection& projection, const ClusterLabels& labels);

struct ScatterPoint {
  std::string graph_id;
  double x = 0.0;
  double y = 0.0;
};

// Raw values of two named attributes (schema attributes or nodeCount,
// edgeCount, depth). Throws UnknownAttribute.
std::vector<ScatterPoint> attribute_scatter(const Corpus& corpus, const std::string& x_attr,
                                            const std::string& y_attr);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace gmatch
