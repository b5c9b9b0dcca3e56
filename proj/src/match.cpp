#include "gmatch/match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "gmatch/attributes.hpp"
#include "gmatch/error.hpp"

namespace gmatch {

std::string to_string(Space s) {
  switch (s) {
    case Space::Structure: return "structure";
    case Space::Attribute: return "attribute";
    case Space::Fused: return "fused";
  }
  return "fused";
}

Space parse_space(const std::string& s) {
  if (s == "structure") return Space::Structure;
  if (s == "attribute") return Space::Attribute;
  if (s == "fused") return Space::Fused;
  throw BadParams("unknown space '" + s + "' (structure|attribute|fused)");
}

std::string to_string(MatchMethod m) { return m == MatchMethod::Knn ? "knn" : "cluster"; }

MatchMethod parse_match_method(const std::string& s) {
  if (s == "knn") return MatchMethod::Knn;
  if (s == "cluster") return MatchMethod::Cluster;
  throw BadParams("unknown match method '" + s + "' (knn|cluster)");
}

std::string to_string(ClusterMethod m) { return m == ClusterMethod::Dbscan ? "dbscan" : "kmeans"; }

ClusterMethod parse_cluster_method(const std::string& s) {
  if (s == "dbscan") return ClusterMethod::Dbscan;
  if (s == "kmeans") return ClusterMethod::Kmeans;
  throw BadParams("unknown cluster method '" + s + "' (dbscan|kmeans)");
}

std::size_t EmbeddingIndex::index_of(const std::string& graph_id) const {
  for (std::size_t i = 0; i < graph_ids.size(); ++i) {
    if (graph_ids[i] == graph_id) return i;
  }
  throw NotFound("index has no graph '" + graph_id + "'");
}

EmbeddingIndex make_index(Space space, RowMatrix matrix, std::vector<std::string> graph_ids) {
  if (matrix.rows() != static_cast<Eigen::Index>(graph_ids.size())) {
    throw DimensionMismatch("index has " + std::to_string(matrix.rows()) + " rows but " +
                            std::to_string(graph_ids.size()) + " ids");
  }
  if (!matrix.allFinite()) throw BadParams("index contains non-finite values");
  return {space, std::move(matrix), std::move(graph_ids)};
}

double euclidean(const Vector& a, const Vector& b) { return (a - b).norm(); }

namespace {

void sort_hits(std::vector<Hit>& hits) {
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.graph_id < b.graph_id;
  });
}

double row_distance(const RowMatrix& m, Eigen::Index i, const Vector& v) {
  return (m.row(i).transpose() - v).norm();
}

double squared_row_distance(const RowMatrix& m, Eigen::Index i, Eigen::Index j) {
  return (m.row(i) - m.row(j)).squaredNorm();
}

}  // namespace

MatchResult knn_match(const EmbeddingIndex& index, const Vector& target, int k,
                      const std::optional<std::string>& exclude_id) {
  if (index.size() == 0) throw EmptyIndex("cannot match against an empty index");
  if (k < 1) throw BadParams("k must be >= 1");
  if (static_cast<std::size_t>(target.size()) != index.dim()) {
    throw DimensionMismatch("target has dimension " + std::to_string(target.size()) + ", index has " +
                            std::to_string(index.dim()));
  }
  MatchResult r;
  r.target_id = exclude_id.value_or(kCustomTarget);
  r.space = index.space;
  r.k = k;
  r.method = MatchMethod::Knn;
  std::vector<Hit> all;
  all.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (exclude_id && index.graph_ids[i] == *exclude_id) continue;
    all.push_back({index.graph_ids[i], row_distance(index.matrix, static_cast<Eigen::Index>(i), target)});
  }
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  auto cmp = [](const Hit& a, const Hit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.graph_id < b.graph_id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), cmp);
  all.resize(take);
  r.hits = std::move(all);
  return r;
}

MatchResult knn_match(const EmbeddingIndex& index, const std::string& target_id, int k) {
  if (index.size() == 0) throw EmptyIndex("cannot match against an empty index");
  return knn_match(index, index.row(index.index_of(target_id)), k, target_id);
}

int ClusterLabels::cluster_count() const {
  int top = -1;
  for (int l : labels) top = std::max(top, l);
  return top + 1;
}

namespace {

ClusterLabels dbscan(const EmbeddingIndex& index, const ClusterParams& p) {
  const std::size_t n = index.size();
  const double eps2 = p.eps * p.eps;
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (squared_row_distance(index.matrix, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= eps2) {
        nbrs[i].push_back(j);
      }
    }
  }
  constexpr int kUnvisited = -2;
  ClusterLabels out;
  out.labels.assign(n, kUnvisited);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] != kUnvisited) continue;
    if (nbrs[i].size() < static_cast<std::size_t>(p.min_pts)) {
      out.labels[i] = kNoise;
      continue;
    }
    const int c = next++;
    out.labels[i] = c;
    std::vector<std::size_t> frontier(nbrs[i].begin(), nbrs[i].end());
    for (std::size_t f = 0; f < frontier.size(); ++f) {
      const std::size_t q = frontier[f];
      if (out.labels[q] == kNoise) out.labels[q] = c;  // border point
      if (out.labels[q] != kUnvisited) continue;
      out.labels[q] = c;
      if (nbrs[q].size() >= static_cast<std::size_t>(p.min_pts)) {
        frontier.insert(frontier.end(), nbrs[q].begin(), nbrs[q].end());
      }
    }
  }
  return out;
}

ClusterLabels kmeans_once(const EmbeddingIndex& index, const ClusterParams& p, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(index.size());
  const auto k = static_cast<Eigen::Index>(p.k);
  const RowMatrix& x = index.matrix;
  Rng rng(seed);

  // k-means++ seeding.
  RowMatrix centroids(k, x.cols());
  centroids.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n))));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (x.row(i) - centroids.row(0)).squaredNorm();
  for (Eigen::Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n)));
    }
    centroids.row(c) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (x.row(i) - centroids.row(c)).squaredNorm());
  }

  ClusterLabels out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  auto assign = [&] {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (x.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (out.labels[static_cast<std::size_t>(i)] != best) {
        out.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    return changed;
  };
  auto objective = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += (x.row(i) - centroids.row(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
    return s;
  };

  assign();
  out.objective_trace.push_back(objective());
  for (int it = 0; it < p.max_iterations; ++it) {
    RowMatrix sums = RowMatrix::Zero(k, x.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = out.labels[static_cast<std::size_t>(i)];
      sums.row(c) += x.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    // Empty clusters keep their previous centroid.
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)]) centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    out.iterations = it + 1;
    const bool changed = assign();
    out.objective_trace.push_back(objective());
    if (!changed) break;
  }
  return out;
}

// Independent k-means++ starts; the lowest final objective wins, earliest on ties.
ClusterLabels kmeans(const EmbeddingIndex& index, const ClusterParams& p) {
  ClusterLabels best = kmeans_once(index, p, p.seed);
  for (int r = 1; r < p.restarts; ++r) {
    ClusterLabels run = kmeans_once(index, p, derive_seed(p.seed, static_cast<std::uint64_t>(r)));
    if (run.objective_trace.back() < best.objective_trace.back()) best = std::move(run);
  }
  return best;
}

}  // namespace

ClusterLabels cluster(const EmbeddingIndex& index, ClusterMethod method, const ClusterParams& params) {
  if (index.size() == 0) throw EmptyIndex("cannot cluster an empty index");
  ClusterLabels out;
  if (method == ClusterMethod::Dbscan) {
    if (!(params.eps > 0) || params.min_pts < 1) throw BadParams("DBSCAN needs eps > 0 and minPts >= 1");
    out = dbscan(index, params);
  } else {
    if (params.k < 1 || static_cast<std::size_t>(params.k) > index.size()) {
      throw BadParams("k-means needs 1 <= k <= number of graphs");
    }
    if (params.max_iterations < 1) throw BadParams("k-means needs at least one iteration");
    if (params.restarts < 1) throw BadParams("k-means needs at least one restart");
    out = kmeans(index, params);
  }
  out.method = method;
  out.params = params;
  out.graph_ids = index.graph_ids;
  return out;
}

MatchResult cluster_match(const EmbeddingIndex& index, const ClusterLabels& labels, const std::string& target_id) {
  if (labels.labels.size() != index.size()) throw DimensionMismatch("cluster labels do not cover the index");
  const std::size_t t = index.index_of(target_id);
  const int label = labels.labels[t];
  if (label == kNoise) throw TargetIsNoise("graph '" + target_id + "' is a DBSCAN noise point");
  MatchResult r;
  r.target_id = target_id;
  r.space = index.space;
  r.method = MatchMethod::Cluster;
  const Vector target = index.row(t);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (i == t || labels.labels[i] != label) continue;
    r.hits.push_back({index.graph_ids[i], row_distance(index.matrix, static_cast<Eigen::Index>(i), target)});
  }
  sort_hits(r.hits);
  r.k = static_cast<int>(r.hits.size());
  return r;
}

// ---- t-SNE ----------------------------------------------------------------

double Projection::kl_after_exaggeration() const {
  if (kl_trace.empty()) return 0.0;
  const std::size_t i = exaggeration_iterations > 0 ? static_cast<std::size_t>(exaggeration_iterations) - 1 : 0;
  return kl_trace[std::min(i, kl_trace.size() - 1)];
}

namespace {

// Row-conditional affinities with per-point bandwidth matched to the
// perplexity by bisection on the precision beta.
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& d2, double perplexity) {
  const Eigen::Index n = d2.rows();
  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) if (j != i) dmin = std::min(dmin, d2(i, j));
    for (int step = 0; step < 200; ++step) {
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = std::exp(-beta * (d2(i, j) - dmin));
        p(i, j) = w;
        sum += w;
        weighted += w * (d2(i, j) - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-10) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

Projection project_tsne(const EmbeddingIndex& index, const TsneParams& params) {
  const auto n = static_cast<Eigen::Index>(index.size());
  if (n < 4) throw BadParams("t-SNE needs at least 4 graphs");
  if (!(params.perplexity > 0)) throw BadParams("perplexity must be positive");
  if (params.perplexity >= static_cast<double>(n - 1) / 3.0) {
    throw PerplexityTooLarge("perplexity " + std::to_string(params.perplexity) + " must be below (M-1)/3 = " +
                             std::to_string(static_cast<double>(n - 1) / 3.0));
  }
  if (params.iterations < 1) throw BadParams("t-SNE needs at least one iteration");

  Eigen::MatrixXd d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d2(i, j) = squared_row_distance(index.matrix, i, j);
  }
  Eigen::MatrixXd p = conditional_affinities(d2, params.perplexity);
  p = (p + p.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  const int exag_iters = params.exaggeration_iterations.value_or(params.iterations / 4);
  const double lr = params.learning_rate.value_or(std::max(static_cast<double>(n) / 12.0, 50.0));

  Rng rng(params.seed);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = 1e-4 * rng.normal();
    y(i, 1) = 1e-4 * rng.normal();
  }
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n);
  Eigen::MatrixXd grad(n, 2);

  Projection out;
  out.exaggeration_iterations = exag_iters;
  out.kl_trace.reserve(static_cast<std::size_t>(params.iterations));
  for (int iter = 0; iter < params.iterations; ++iter) {
    const double exag = iter < exag_iters ? params.exaggeration : 1.0;
    const double momentum = iter < exag_iters ? 0.5 : 0.8;

    double sum_num = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        num(i, j) = num(j, i) = v;
        sum_num += 2.0 * v;
      }
    }
    double kl = 0.0;
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(num(i, j) / sum_num, 1e-12);
        kl += p(i, j) * std::log(p(i, j) / q);
        const double mult = 4.0 * (exag * p(i, j) - q) * num(i, j);
        grad.row(i) += mult * (y.row(i) - y.row(j));
      }
    }
    out.kl_trace.push_back(kl);

    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        const bool same = (grad(i, c) > 0) == (update(i, c) > 0);
        gains(i, c) = std::max(same ? gains(i, c) * 0.8 : gains(i, c) + 0.2, 0.01);
        update(i, c) = momentum * update(i, c) - lr * gains(i, c) * grad(i, c);
        y(i, c) += update(i, c);
      }
    }
    y.rowwise() -= y.colwise().mean();
  }

  out.points.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.points.push_back({index.graph_ids[static_cast<std::size_t>(i)], y(i, 0), y(i, 1), std::nullopt});
  }
  return out;
}

ProjectionPoint place_out_of_sample(const EmbeddingIndex& index, const Projection& projection, const Vector& vec,
                                    int neighbours) {
  if (projection.points.size() != index.size()) throw DimensionMismatch("projection does not cover the index");
  const MatchResult nn = knn_match(index, vec, std::max(1, neighbours));
  ProjectionPoint out{kCustomTarget, 0.0, 0.0, std::nullopt};
  double wsum = 0.0;
  for (const Hit& h : nn.hits) {
    const auto& pt = projection.points[index.index_of(h.graph_id)];
    if (h.distance == 0.0) return {kCustomTarget, pt.x, pt.y, pt.cluster};
    const double w = 1.0 / h.distance;
    out.x += w * pt.x;
    out.y += w * pt.y;
    wsum += w;
  }
  out.x /= wsum;
  out.y /= wsum;
  return out;
}

void attach_clusters(Projection& projection, const ClusterLabels& labels) {
  std::map<std::string, int> by_id;
  for (std::size_t i = 0; i < labels.graph_ids.size(); ++i) by_id[labels.graph_ids[i]] = labels.labels[i];
  for (auto& p : projection.points) {
    auto it = by_id.find(p.graph_id);
    p.cluster = it == by_id.end() ? std::nullopt : std::optional<int>(it->second);
  }
}

std::vector<ScatterPoint> attribute_scatter(const Corpus& corpus, const std::string& x_attr, const std::string& y_attr) {
  for (const auto* name : {&x_attr, &y_attr}) {
    const bool structural = *name == "nodeCount" || *name == "edgeCount" || *name == "depth";
    if (!structural && !corpus.schema.has_macro(*name) && !corpus.schema.has_micro(*name)) {
      throw UnknownAttribute("unknown attribute '" + *name + "'");
    }
  }
  std::vector<ScatterPoint> out;
  out.reserve(corpus.size());
  for (const Graph& g : corpus.graphs) {
    out.push_back({g.id, named_value(g, corpus.schema, x_attr), named_value(g, corpus.schema, y_attr)});
  }
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("label vectors differ in length");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2.0; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [_, v] : table) index += c2(v);
  for (const auto& [_, v] : rows) sa += c2(v);
  for (const auto& [_, v] : cols) sb += c2(v);
  const double expected = sa * sb / c2(n);
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace gmatch
