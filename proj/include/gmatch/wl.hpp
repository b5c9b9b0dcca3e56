#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gmatch/graph.hpp"

namespace gmatch {

inline constexpr int kDefaultWlDegree = 2;

// A rooted subgraph of depth `degree` around one node. Degree-0 tokens are
// the node's seed label; deeper tokens are the hex digest of the canonical
// WL string (see `canonical_subgraph_string`).
struct SubgraphToken {
  std::string token;
  int degree = 0;

  bool operator==(const SubgraphToken&) const = default;
  auto operator<=>(const SubgraphToken&) const = default;
};

struct GraphContext {
  std::string graph_id;
  std::vector<SubgraphToken> tokens;  // node-major, degree-minor

  std::size_t length() const { return tokens.size(); }
};

// 64-bit FNV-1a; stable across runs and platforms.
std::uint64_t stable_hash64(std::string_view s);

// `d | own | n1 n2 ...` with neighbour tokens sorted lexicographically and
// joined by reserved control separators.
std::string canonical_subgraph_string(int degree, const std::string& own,
                                      std::vector<std::string> neighbour_tokens);

std::string hash_token(std::string_view canonical);

// Neighbourhood used for relabelling: all neighbours for undirected graphs,
// successors for directed graphs.
const std::vector<std::vector<std::size_t>>& wl_neighbours(const Graph& g, const Adjacency& adj);

// Recursive single-node evaluation. Throws UnknownNode, BadParams (d < 0).
SubgraphToken get_wl_subgraph(const std::string& node_id, const Graph& g, int degree);

// All tokens for degrees 0..max_degree, computed level by level.
GraphContext build_context(const Graph& g, int max_degree = kDefaultWlDegree);

std::vector<GraphContext> build_contexts(std::span<const Graph> graphs,
                                         int max_degree = kDefaultWlDegree);

// One token per line, as "<degree>\t<token>".
void write_context(std::ostream& out, const GraphContext& ctx);

class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::size_t> find(const std::string& token) const;
  std::size_t add(const std::string& token, std::uint64_t count = 1);

  const std::string& token(std::size_t i) const { return tokens_[i]; }
  std::uint64_t frequency(std::size_t i) const { return frequency_[i]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint64_t>& frequencies() const { return frequency_; }
  std::uint64_t total() const;

  bool operator==(const Vocabulary& o) const {
    return tokens_ == o.tokens_ && frequency_ == o.frequency_;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequency_;
};

// Indices follow first appearance over the contexts in order.
Vocabulary build_vocabulary(std::span<const GraphContext> contexts);

}  // namespace gmatch
