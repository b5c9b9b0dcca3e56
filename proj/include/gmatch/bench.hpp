#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gmatch/attributes.hpp"
#include "gmatch/cca.hpp"
#include "gmatch/ged.hpp"
#include "gmatch/graph.hpp"
#include "gmatch/match.hpp"
#include "gmatch/skipgram.hpp"

namespace gmatch {

// ---- synthetic corpora ----------------------------------------------------

struct FamilySpec {
  // path:N, star:N, cycle:N, clique:N, tree:N (binary), wheel:N, grid:RxC
  std::string motif;
  std::vector<double> attr_center;  // one entry per schema attribute
  int count = 0;
};

struct SyntheticSpec {
  std::vector<FamilySpec> families;
  double noise = 0.1;       // edge removal probability; additions match in expectation
  double attr_sigma = 1.0;  // graph-level spread around the family center
  double node_sigma = 0.5;  // node-level spread around the graph value (micro attributes)
  // Attribute 0 is the macro attribute "span"; the rest are micro
  // attributes "m1".. aggregated by mean.
  void validate() const;
};

// Builds the motif graph (node ids n0.., degree seed labels). Throws BadSpec.
Graph motif_graph(const std::string& motif);

// Family index is recorded in each graph's meta["family"]. Throws BadSpec.
Corpus gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// The three-family planted corpus used by the acceptance suite: path, star
// and clique motifs with overlapping attribute clouds.
SyntheticSpec planted_spec(int per_family = 30, double noise = 0.1);

std::vector<int> family_labels(const Corpus& c);

// ---- strategies -------------------------------------------------------------

enum class Strategy { Str, Attr, CCA, DC, IDC };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);
std::vector<Strategy> all_strategies();

// Principal-component scores of the centered matrix, `dims` columns.
RowMatrix pca_reduce(const RowMatrix& x, int dims);

struct StrategyOptions {
  CcaOptions cca;
  // Target dimension of the DC index (IDC uses half per view). Defaults
  // to the fused dimension 2m of the CCA model.
  std::optional<int> reduced_dim;
};

// Builds the matching index of one strategy. `structure` holds raw
// structure vectors, `attributes` raw attribute vectors (log flags of the
// schema are applied here).
EmbeddingIndex build_strategy_index(Strategy s, const Corpus& corpus, const RowMatrix& structure,
                                    const RowMatrix& attributes, const StrategyOptions& opts = {});

double attr_distance(const AttributeVector& a, const AttributeVector& b);
double attr_distance(const Vector& a, const Vector& b);

// ---- benchmark --------------------------------------------------------------

struct BenchParams {
  std::vector<Strategy> strategies = all_strategies();
  std::vector<int> k_values{5, 10, 15};
  int n_targets = 20;
  std::uint64_t seed = 1;
  int beam_width = kDefaultBeamWidth;
  StrategyOptions strategy;
  bool standardized_attr_distance = false;
};

struct BenchCell {
  int k = 0;
  std::string strategy;
  double str_sim = 0.0;   // mean GED between targets and their hits
  double attr_sim = 0.0;  // mean attribute distance
  bool operator==(const BenchCell&) const = default;
};

struct BenchReport {
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<std::string> targets;
  std::vector<std::string> strategies;
  std::vector<int> k_values;
  std::vector<BenchCell> rows;
  bool approximate_ged = false;  // some pair exceeded the exact-GED cap

  const BenchCell& cell(int k, const std::string& strategy) const;
  bool operator==(const BenchReport&) const = default;
};

// Draws `n_targets` distinct targets from the seed and evaluates every
// (strategy, k) cell on them.
BenchReport run_benchmark(const Corpus& corpus, const RowMatrix& structure, const BenchParams& params);

// Trains structure embeddings with `embed` then runs the benchmark.
BenchReport run_benchmark(const Corpus& corpus, const EmbedConfig& embed, const BenchParams& params);

nlohmann::json report_to_json(const BenchReport& r);
BenchReport report_from_json(const nlohmann::json& j);
// Aligned table: rows dataset x k x {Str-Sim, Attr-Sim}, one column per strategy.
std::string format_report_table(const BenchReport& r);

}  // namespace gmatch
