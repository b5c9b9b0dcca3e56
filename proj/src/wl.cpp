#include "gmatch/wl.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "gmatch/error.hpp"

namespace gmatch {

namespace {

constexpr char kFieldSep = '\x1e';
constexpr char kListSep = '\x1f';

SubgraphToken token_at(std::size_t v, int degree, const std::vector<std::string>& labels,
                       const std::vector<std::vector<std::size_t>>& nbrs) {
  if (degree == 0) return {labels[v], 0};
  const SubgraphToken own = token_at(v, degree - 1, labels, nbrs);
  std::vector<std::string> around;
  around.reserve(nbrs[v].size());
  for (std::size_t w : nbrs[v]) around.push_back(token_at(w, degree - 1, labels, nbrs).token);
  return {hash_token(canonical_subgraph_string(degree, own.token, std::move(around))), degree};
}

}  // namespace

std::uint64_t stable_hash64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_subgraph_string(int degree, const std::string& own,
                                      std::vector<std::string> neighbour_tokens) {
  std::sort(neighbour_tokens.begin(), neighbour_tokens.end());
  std::string s = std::to_string(degree);
  s += kFieldSep;
  s += own;
  s += kFieldSep;
  for (std::size_t i = 0; i < neighbour_tokens.size(); ++i) {
    if (i) s += kListSep;
    s += neighbour_tokens[i];
  }
  return s;
}

std::string hash_token(std::string_view canonical) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(stable_hash64(canonical)));
  return buf;
}

const std::vector<std::vector<std::size_t>>& wl_neighbours(const Graph& g, const Adjacency& adj) {
  return g.directed ? adj.out : adj.all;
}

SubgraphToken get_wl_subgraph(const std::string& node_id, const Graph& g, int degree) {
  if (degree < 0) throw BadParams("WL degree must be non-negative");
  const std::size_t v = g.node_index(node_id);
  const Adjacency adj = adjacency(g);
  std::vector<std::string> labels;
  labels.reserve(g.nodes.size());
  for (const Node& n : g.nodes) labels.push_back(n.label);
  return token_at(v, degree, labels, wl_neighbours(g, adj));
}

GraphContext build_context(const Graph& g, int max_degree) {
  if (max_degree < 0) throw BadParams("WL degree must be non-negative");
  const Adjacency adj = adjacency(g);
  const auto& nbrs = wl_neighbours(g, adj);
  const std::size_t n = g.nodes.size();
  const std::size_t levels = static_cast<std::size_t>(max_degree) + 1;

  // level[d][v] is the degree-d token of node v.
  std::vector<std::vector<std::string>> level(levels, std::vector<std::string>(n));
  for (std::size_t v = 0; v < n; ++v) level[0][v] = g.nodes[v].label;
  for (std::size_t d = 1; d < levels; ++d) {
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<std::string> around;
      around.reserve(nbrs[v].size());
      for (std::size_t w : nbrs[v]) around.push_back(level[d - 1][w]);
      level[d][v] = hash_token(
          canonical_subgraph_string(static_cast<int>(d), level[d - 1][v], std::move(around)));
    }
  }

  GraphContext ctx;
  ctx.graph_id = g.id;
  ctx.tokens.reserve(n * levels);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t d = 0; d < levels; ++d) ctx.tokens.push_back({level[d][v], static_cast<int>(d)});
  }
  return ctx;
}

std::vector<GraphContext> build_contexts(std::span<const Graph> graphs, int max_degree) {
  std::vector<GraphContext> out;
  out.reserve(graphs.size());
  for (const Graph& g : graphs) out.push_back(build_context(g, max_degree));
  return out;
}

void write_context(std::ostream& out, const GraphContext& ctx) {
  for (const auto& t : ctx.tokens) out << t.degree << '\t' << t.token << '\n';
}

std::optional<std::size_t> Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::add(const std::string& token, std::uint64_t count) {
  auto [it, inserted] = index_.try_emplace(token, tokens_.size());
  if (inserted) {
    tokens_.push_back(token);
    frequency_.push_back(0);
  }
  frequency_[it->second] += count;
  return it->second;
}

std::uint64_t Vocabulary::total() const {
  return std::accumulate(frequency_.begin(), frequency_.end(), std::uint64_t{0});
}

Vocabulary build_vocabulary(std::span<const GraphContext> contexts) {
  Vocabulary vocab;
  for (const auto& ctx : contexts) {
    for (const auto& t : ctx.tokens) vocab.add(t.token);
  }
  return vocab;
}

}  // namespace gmatch
