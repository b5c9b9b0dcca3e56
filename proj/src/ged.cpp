#include "gmatch/ged.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "gmatch/error.hpp"

namespace gmatch {

namespace {

constexpr int kDeleted = -1;

struct Dense {
  int n = 0;
  std::vector<int> label;
  std::vector<std::vector<char>> adj;  // adj[i][j]: edge i->j (symmetric if undirected)
};

struct Problem {
  Dense g1, g2;
  bool directed = false;
  std::vector<int> order;  // processing order of g1 nodes
  int label_count = 0;

  int edge_between(const Dense& g, int i, int j) const {
    return directed ? g.adj[i][j] + g.adj[j][i] : g.adj[i][j];
  }
};

Dense densify(const Graph& g, std::map<std::string, int>& labels) {
  Dense d;
  d.n = static_cast<int>(g.nodes.size());
  d.adj.assign(d.n, std::vector<char>(d.n, 0));
  for (const Node& v : g.nodes) {
    auto [it, _] = labels.try_emplace(v.label, static_cast<int>(labels.size()));
    d.label.push_back(it->second);
  }
  const Adjacency adj = adjacency(g);
  for (int i = 0; i < d.n; ++i) {
    for (std::size_t j : adj.out[i]) d.adj[i][j] = 1;
  }
  return d;
}

Problem make_problem(const Graph& a, const Graph& b) {
  if (a.directed != b.directed) throw BadParams("GED between a directed and an undirected graph");
  Problem p;
  std::map<std::string, int> labels;
  p.g1 = densify(a, labels);
  p.g2 = densify(b, labels);
  p.directed = a.directed;
  p.label_count = static_cast<int>(labels.size());
  p.order.resize(p.g1.n);
  std::iota(p.order.begin(), p.order.end(), 0);
  std::vector<int> deg(p.g1.n, 0);
  for (int i = 0; i < p.g1.n; ++i)
    for (int j = 0; j < p.g1.n; ++j) deg[i] += p.g1.adj[i][j] + p.g1.adj[j][i];
  std::stable_sort(p.order.begin(), p.order.end(), [&](int x, int y) { return deg[x] > deg[y]; });
  return p;
}

struct State {
  std::vector<int> image;    // image[k] = g2 node of order[k], or kDeleted
  std::vector<char> used;    // g2 nodes already taken
  int cost = 0;
};

// Cost of mapping g1 node order[k] to `v`, given the images of order[0..k).
int step_cost(const Problem& p, const State& s, int v) {
  const int u = p.order[s.image.size()];
  int c = 0;
  if (v == kDeleted) {
    c += 1;
    for (std::size_t q = 0; q < s.image.size(); ++q) c += p.edge_between(p.g1, u, p.order[q]);
    return c;
  }
  c += p.g1.label[u] != p.g2.label[v];
  for (std::size_t q = 0; q < s.image.size(); ++q) {
    const int u2 = p.order[q];
    const int v2 = s.image[q];
    if (v2 == kDeleted) {
      c += p.edge_between(p.g1, u, u2);
      continue;
    }
    c += p.g1.adj[u][u2] != p.g2.adj[v][v2];
    if (p.directed) c += p.g1.adj[u2][u] != p.g2.adj[v2][v];
  }
  return c;
}

// Insertion cost of the g2 nodes left unused once every g1 node is placed.
int completion_cost(const Problem& p, const State& s) {
  int c = 0;
  for (int w = 0; w < p.g2.n; ++w) {
    if (s.used[w]) continue;
    c += 1;
    for (int x = 0; x < p.g2.n; ++x) {
      if (x == w) continue;
      // Count each g2 edge once: edges between two unused nodes are
      // counted from the smaller endpoint.
      if (!s.used[x] && x < w) continue;
      c += p.edge_between(p.g2, w, x);
    }
  }
  return c;
}

int lower_bound(const Problem& p, const State& s) {
  const std::size_t k = s.image.size();
  std::vector<char> remaining1(p.g1.n, 0);
  for (std::size_t q = k; q < p.order.size(); ++q) remaining1[p.order[q]] = 1;

  std::vector<int> hist(p.label_count, 0);
  int r1 = 0, r2 = 0;
  for (int u = 0; u < p.g1.n; ++u) if (remaining1[u]) { ++r1; ++hist[p.g1.label[u]]; }
  int common = 0;
  for (int w = 0; w < p.g2.n; ++w) {
    if (s.used[w]) continue;
    ++r2;
    if (hist[p.g2.label[w]] > 0) {
      --hist[p.g2.label[w]];
      ++common;
    }
  }
  const int node_lb = std::max(r1, r2) - common;

  auto open_edges = [&](const Dense& g, auto&& open) {
    int e = 0;
    for (int i = 0; i < g.n; ++i) {
      for (int j = p.directed ? 0 : i + 1; j < g.n; ++j) {
        if (i != j && g.adj[i][j] && (open(i) || open(j))) ++e;
      }
    }
    return e;
  };
  const int e1 = open_edges(p.g1, [&](int u) { return remaining1[u] != 0; });
  const int e2 = open_edges(p.g2, [&](int w) { return s.used[w] == 0; });
  return node_lb + std::abs(e1 - e2);
}

// Candidate images for the next g1 node: same-label nodes first, then the
// rest, then deletion.
std::vector<int> candidates(const Problem& p, const State& s) {
  const int u = p.order[s.image.size()];
  std::vector<int> same, other;
  for (int w = 0; w < p.g2.n; ++w) {
    if (s.used[w]) continue;
    (p.g2.label[w] == p.g1.label[u] ? same : other).push_back(w);
  }
  same.insert(same.end(), other.begin(), other.end());
  same.push_back(kDeleted);
  return same;
}

State extend(const Problem& p, const State& s, int v) {
  State t = s;
  t.cost += step_cost(p, s, v);
  t.image.push_back(v);
  if (v != kDeleted) t.used[v] = 1;
  return t;
}

State root_state(const Problem& p) {
  State s;
  s.used.assign(p.g2.n, 0);
  return s;
}

int beam_search(const Problem& p, int width) {
  std::vector<State> beam{root_state(p)};
  for (std::size_t level = 0; level < p.order.size(); ++level) {
    std::vector<std::pair<int, State>> next;
    for (const State& s : beam) {
      for (int v : candidates(p, s)) {
        State t = extend(p, s, v);
        const int f = t.cost + lower_bound(p, t);
        next.emplace_back(f, std::move(t));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second.cost < b.second.cost;
    });
    if (next.size() > static_cast<std::size_t>(width)) next.resize(static_cast<std::size_t>(width));
    beam.clear();
    for (auto& [_, s] : next) beam.push_back(std::move(s));
  }
  int best = std::numeric_limits<int>::max();
  for (const State& s : beam) best = std::min(best, s.cost + completion_cost(p, s));
  return best;
}

void branch_and_bound(const Problem& p, State& s, int& best) {
  if (s.image.size() == p.order.size()) {
    best = std::min(best, s.cost + completion_cost(p, s));
    return;
  }
  for (int v : candidates(p, s)) {
    const int c = step_cost(p, s, v);
    s.cost += c;
    s.image.push_back(v);
    if (v != kDeleted) s.used[v] = 1;
    if (s.cost + lower_bound(p, s) < best) branch_and_bound(p, s, best);
    if (v != kDeleted) s.used[v] = 0;
    s.image.pop_back();
    s.cost -= c;
  }
}

}  // namespace

double ged(const Graph& a, const Graph& b, const GedOptions& opts) {
  const Problem p = make_problem(a, b);
  if (opts.mode == GedMode::Beam) {
    if (opts.beam_width < 1) throw BadParams("beam width must be >= 1");
    return beam_search(p, opts.beam_width);
  }
  if (std::max(a.nodes.size(), b.nodes.size()) > kExactGedNodeCap) {
    throw TooLargeForExact("exact GED is limited to graphs of at most " + std::to_string(kExactGedNodeCap) +
                           " nodes");
  }
  // A narrow beam seeds the incumbent so pruning starts early.
  int best = beam_search(p, 4) + 1;
  State s = root_state(p);
  branch_and_bound(p, s, best);
  return best;
}

double ged_auto(const Graph& a, const Graph& b, int beam_width, bool* exact) {
  const bool small = std::max(a.nodes.size(), b.nodes.size()) <= kExactGedNodeCap;
  if (exact) *exact = small;
  return ged(a, b, {small ? GedMode::Exact : GedMode::Beam, beam_width});
}

}  // namespace gmatch
