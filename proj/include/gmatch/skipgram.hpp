#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gmatch/graph.hpp"
#include "gmatch/linalg.hpp"
#include "gmatch/wl.hpp"

namespace gmatch {

struct EmbedConfig {
  int dim = 128;                 // N_S
  int epochs = 50;
  double learning_rate = 0.025;  // decays linearly to min_learning_rate
  double min_learning_rate = 0.0001;
  int negatives = 5;
  std::uint64_t seed = 1;
  int wl_degree = kDefaultWlDegree;
  double noise_power = 0.75;
  // 1 = deterministic; >1 = lock-free parallel updates, not reproducible.
  int threads = 1;

  void validate() const;
};

struct StructureVector {
  std::string graph_id;
  Vector values;
};

// PV-DBOW skip-gram model: graph vectors predict the subgraph tokens of
// their own context under a negative-sampling objective.
struct SkipGramModel {
  std::vector<std::string> graph_ids;
  RowMatrix graph_vectors;  // M x N_S
  RowMatrix token_vectors;  // V x N_S (output embeddings)
  Vocabulary vocab;
  std::vector<double> noise_distribution;  // unigram^power, normalized
  EmbedConfig config;

  std::vector<double> epoch_loss;  // surrogate loss per pair after each epoch, fixed negatives
  bool degenerate_vocabulary = false;

  std::size_t dim() const { return static_cast<std::size_t>(graph_vectors.cols()); }
  StructureVector structure_vector(std::size_t i) const {
    return {graph_ids[i], graph_vectors.row(static_cast<Eigen::Index>(i)).transpose()};
  }
};

// Throws EmptyCorpus; BadParams when a token is missing from `vocab`.
SkipGramModel train(std::span<const GraphContext> contexts, const Vocabulary& vocab,
                    const EmbedConfig& cfg);

// Convenience: contexts and vocabulary from graphs, then `train`.
SkipGramModel train_graphs(std::span<const Graph> graphs, const EmbedConfig& cfg);

// Optimizes a fresh graph vector against the frozen token vectors. Unseen
// tokens are skipped; throws NoKnownTokens when none are known.
StructureVector embed_new_graph(const Graph& g, const SkipGramModel& model, const EmbedConfig& cfg);

// Same, from a precomputed context.
StructureVector embed_context(const GraphContext& ctx, const SkipGramModel& model,
                              const EmbedConfig& cfg);

// Versioned binary persistence.
void write_skipgram(std::ostream& out, const SkipGramModel& m);
SkipGramModel read_skipgram(std::istream& in);
void save_skipgram(const std::string& path, const SkipGramModel& m);
SkipGramModel load_skipgram(const std::string& path);

}  // namespace gmatch
