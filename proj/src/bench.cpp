#include "gmatch/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gmatch/error.hpp"
#include "gmatch/wl.hpp"

namespace gmatch {

using nlohmann::json;

// ---- synthetic corpora ----------------------------------------------------

namespace {

std::vector<std::pair<int, int>> motif_edges(const std::string& motif, int& nodes) {
  const auto colon = motif.find(':');
  if (colon == std::string::npos) throw BadSpec("motif '" + motif + "' must look like kind:size");
  const std::string kind = motif.substr(0, colon);
  const std::string size = motif.substr(colon + 1);
  std::vector<std::pair<int, int>> e;
  auto parse_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw BadSpec("bad motif size in '" + motif + "'");
      return v;
    } catch (const std::logic_error&) {
      throw BadSpec("bad motif size in '" + motif + "'");
    }
  };
  if (kind == "grid") {
    const auto x = size.find('x');
    if (x == std::string::npos) throw BadSpec("grid motif must be grid:RxC");
    const int r = parse_int(size.substr(0, x)), c = parse_int(size.substr(x + 1));
    if (r < 1 || c < 1) throw BadSpec("grid dimensions must be positive");
    nodes = r * c;
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) {
        if (j + 1 < c) e.emplace_back(i * c + j, i * c + j + 1);
        if (i + 1 < r) e.emplace_back(i * c + j, (i + 1) * c + j);
      }
    }
    return e;
  }
  nodes = parse_int(size);
  if (nodes < 1) throw BadSpec("motif size must be positive");
  if (kind == "path") {
    for (int i = 0; i + 1 < nodes; ++i) e.emplace_back(i, i + 1);
  } else if (kind == "star") {
    for (int i = 1; i < nodes; ++i) e.emplace_back(0, i);
  } else if (kind == "cycle") {
    if (nodes < 3) throw BadSpec("cycle needs at least 3 nodes");
    for (int i = 0; i < nodes; ++i) e.emplace_back(i, (i + 1) % nodes);
  } else if (kind == "clique") {
    for (int i = 0; i < nodes; ++i)
      for (int j = i + 1; j < nodes; ++j) e.emplace_back(i, j);
  } else if (kind == "tree") {
    for (int i = 1; i < nodes; ++i) e.emplace_back((i - 1) / 2, i);
  } else if (kind == "wheel") {
    if (nodes < 4) throw BadSpec("wheel needs at least 4 nodes");
    for (int i = 1; i < nodes; ++i) {
      e.emplace_back(0, i);
      e.emplace_back(i, i + 1 < nodes ? i + 1 : 1);
    }
  } else {
    throw BadSpec("unknown motif kind '" + kind + "'");
  }
  return e;
}

std::string node_id(int i) { return "n" + std::to_string(i); }

AttributeSchema synthetic_schema(std::size_t dims) {
  AttributeSchema s;
  s.macro.push_back({"span", "graph-level span", false});
  for (std::size_t j = 1; j < dims; ++j) s.micro.push_back({"m" + std::to_string(j), Aggregator::Mean, false});
  return s;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (families.size() < 2) throw BadSpec("need at least 2 families");
  if (!(noise >= 0 && noise <= 1)) throw BadSpec("noise must lie in [0, 1]");
  if (!(attr_sigma >= 0) || !(node_sigma >= 0)) throw BadSpec("sigmas must be non-negative");
  const std::size_t dims = families.front().attr_center.size();
  if (dims == 0) throw BadSpec("attribute centers must be non-empty");
  for (const auto& f : families) {
    if (f.count < 2) throw BadSpec("family counts must be >= 2");
    if (f.attr_center.size() != dims) throw BadSpec("attribute centers differ in length");
    int n = 0;
    motif_edges(f.motif, n);
  }
}

Graph motif_graph(const std::string& motif) {
  int n = 0;
  const auto edges = motif_edges(motif, n);
  Graph g;
  g.id = motif;
  for (int i = 0; i < n; ++i) g.nodes.push_back({node_id(i), "x", {}});
  for (auto [a, b] : edges) g.edges.push_back({node_id(a), node_id(b), std::nullopt});
  canonicalize(g);
  assign_seed_labels(g, LabelSource{});
  return g;
}

Corpus gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Corpus c;
  c.name = "synthetic";
  const std::size_t dims = spec.families.front().attr_center.size();
  c.schema = synthetic_schema(dims);
  Rng rng(seed);

  for (std::size_t f = 0; f < spec.families.size(); ++f) {
    const FamilySpec& fam = spec.families[f];
    int n = 0;
    const auto motif = motif_edges(fam.motif, n);
    std::set<std::pair<int, int>> motif_set(motif.begin(), motif.end());
    std::vector<std::pair<int, int>> non_edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (!motif_set.count({i, j}) && !motif_set.count({j, i})) non_edges.emplace_back(i, j);
    // Additions match removals in expectation.
    const double add_p =
        non_edges.empty() ? 0.0
                          : std::min(1.0, spec.noise * static_cast<double>(motif.size()) / non_edges.size());

    for (int k = 0; k < fam.count; ++k) {
      Graph g;
      char id[32];
      std::snprintf(id, sizeof id, "f%zu-%03d", f, k);
      g.id = id;
      g.meta["family"] = std::to_string(f);
      g.meta["motif"] = fam.motif;

      std::vector<double> graph_values(dims);
      for (std::size_t j = 0; j < dims; ++j) graph_values[j] = fam.attr_center[j] + spec.attr_sigma * rng.normal();
      g.macro_attrs["span"] = graph_values[0];
      for (int i = 0; i < n; ++i) {
        Node node{node_id(i), "x", {}};
        for (std::size_t j = 1; j < dims; ++j) {
          node.attrs["m" + std::to_string(j)] = graph_values[j] + spec.node_sigma * rng.normal();
        }
        g.nodes.push_back(std::move(node));
      }
      for (auto [a, b] : motif) {
        if (rng.uniform() >= spec.noise) g.edges.push_back({node_id(a), node_id(b), std::nullopt});
      }
      for (auto [a, b] : non_edges) {
        if (rng.uniform() < add_p) g.edges.push_back({node_id(a), node_id(b), std::nullopt});
      }
      prepare_graph(g, c.schema);
      c.graphs.push_back(std::move(g));
    }
  }
  validate_corpus(c);
  return c;
}

SyntheticSpec planted_spec(int per_family, double noise) {
  SyntheticSpec s;
  s.noise = noise;
  s.attr_sigma = 4.0;
  s.node_sigma = 1.0;
  s.families = {
      {"path:8", {30.0, 20.0, 10.0}, per_family},
      {"star:8", {36.0, 26.0, 10.0}, per_family},
      {"clique:5", {30.0, 26.0, 16.0}, per_family},
  };
  return s;
}

std::vector<int> family_labels(const Corpus& c) {
  std::vector<int> out;
  out.reserve(c.size());
  for (const Graph& g : c.graphs) {
    auto it = g.meta.find("family");
    if (it == g.meta.end()) throw NotFound("graph '" + g.id + "' has no family label");
    out.push_back(std::stoi(it->second));
  }
  return out;
}

// ---- strategies -------------------------------------------------------------

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Str: return "Str";
    case Strategy::Attr: return "Attr";
    case Strategy::CCA: return "CCA";
    case Strategy::DC: return "DC";
    case Strategy::IDC: return "IDC";
  }
  return "CCA";
}

Strategy parse_strategy(const std::string& s) {
  for (Strategy x : all_strategies()) {
    if (to_string(x) == s) return x;
  }
  throw BadParams("unknown strategy '" + s + "' (Str|Attr|CCA|DC|IDC)");
}

std::vector<Strategy> all_strategies() {
  return {Strategy::Str, Strategy::Attr, Strategy::CCA, Strategy::DC, Strategy::IDC};
}

RowMatrix pca_reduce(const RowMatrix& x, int dims) {
  if (dims < 1 || dims > x.cols()) {
    throw BadParams("PCA target dimension " + std::to_string(dims) + " outside [1, " + std::to_string(x.cols()) + "]");
  }
  const RowMatrix centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(1, x.rows()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  // Eigenvalues ascend; take the last `dims` columns in descending order.
  Eigen::MatrixXd basis(x.cols(), dims);
  for (int i = 0; i < dims; ++i) {
    Eigen::VectorXd v = es.eigenvectors().col(x.cols() - 1 - i);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    basis.col(i) = v;
  }
  return centered * basis;
}

EmbeddingIndex build_strategy_index(Strategy s, const Corpus& corpus, const RowMatrix& structure,
                                    const RowMatrix& attributes, const StrategyOptions& opts) {
  const auto m = static_cast<Eigen::Index>(corpus.size());
  if (structure.rows() != m || attributes.rows() != m) throw DimensionMismatch("inputs do not match corpus size");
  std::vector<std::string> ids;
  for (const Graph& g : corpus.graphs) ids.push_back(g.id);
  const RowMatrix features = feature_transform(attributes, corpus.schema);

  switch (s) {
    case Strategy::Str:
      return make_index(Space::Structure, structure, std::move(ids));
    case Strategy::Attr:
      return make_index(Space::Attribute, standardize(features).first, std::move(ids));
    case Strategy::CCA: {
      const CcaModel model = fit_cca(structure, features, opts.cca);
      return make_index(Space::Fused, fuse_corpus(model, structure, features), std::move(ids));
    }
    case Strategy::DC:
    case Strategy::IDC:
      break;
  }
  int target = 0;
  if (opts.reduced_dim) {
    target = *opts.reduced_dim;
  } else {
    target = fit_cca(structure, features, opts.cca).fused_dim();
  }
  const RowMatrix s_std = standardize(structure).first;
  const RowMatrix a_std = standardize(features).first;
  if (s == Strategy::DC) {
    RowMatrix joint(m, s_std.cols() + a_std.cols());
    joint << s_std, a_std;
    return make_index(Space::Fused, pca_reduce(joint, target), std::move(ids));
  }
  if (target % 2 != 0) throw BadParams("IDC target dimension must be even");
  const int half = target / 2;
  RowMatrix joint(m, target);
  joint << pca_reduce(s_std, half), pca_reduce(a_std, half);
  return make_index(Space::Fused, std::move(joint), std::move(ids));
}

double attr_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("attribute vectors differ in length");
  return (a - b).norm();
}

double attr_distance(const AttributeVector& a, const AttributeVector& b) { return attr_distance(a.values, b.values); }

// ---- benchmark --------------------------------------------------------------

const BenchCell& BenchReport::cell(int k, const std::string& strategy) const {
  for (const auto& c : rows) {
    if (c.k == k && c.strategy == strategy) return c;
  }
  throw NotFound("report has no cell (k=" + std::to_string(k) + ", " + strategy + ")");
}

BenchReport run_benchmark(const Corpus& corpus, const RowMatrix& structure, const BenchParams& params) {
  const std::size_t m = corpus.size();
  if (params.n_targets < 1 || static_cast<std::size_t>(params.n_targets) > m) {
    throw BadParams("target count must lie in [1, number of graphs]");
  }
  if (params.k_values.empty() || params.strategies.empty()) throw BadParams("need at least one k and one strategy");
  for (int k : params.k_values) if (k < 1) throw BadParams("k values must be >= 1");

  const RowMatrix attributes = attribute_matrix(corpus);
  const RowMatrix attr_for_distance =
      params.standardized_attr_distance ? standardize(feature_transform(attributes, corpus.schema)).first : attributes;

  BenchReport report;
  report.dataset = corpus.name;
  report.seed = params.seed;
  report.k_values = params.k_values;

  Rng rng(params.seed);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  rng.shuffle(order);
  order.resize(static_cast<std::size_t>(params.n_targets));
  for (std::size_t t : order) report.targets.push_back(corpus.graphs[t].id);

  std::map<std::pair<std::size_t, std::size_t>, double> ged_cache;
  auto cached_ged = [&](std::size_t a, std::size_t b) {
    const auto key = std::minmax(a, b);
    auto it = ged_cache.find(key);
    if (it != ged_cache.end()) return it->second;
    bool exact = true;
    const double d = ged_auto(corpus.graphs[key.first], corpus.graphs[key.second], params.beam_width, &exact);
    if (!exact) report.approximate_ged = true;
    ged_cache.emplace(key, d);
    return d;
  };

  for (Strategy s : params.strategies) {
    report.strategies.push_back(to_string(s));
    const EmbeddingIndex index = build_strategy_index(s, corpus, structure, attributes, params.strategy);
    for (int k : params.k_values) {
      double str_total = 0.0, attr_total = 0.0;
      for (std::size_t t : order) {
        const MatchResult r = knn_match(index, corpus.graphs[t].id, k);
        double g_sum = 0.0, a_sum = 0.0;
        for (const Hit& h : r.hits) {
          const std::size_t j = corpus.index_of(h.graph_id);
          g_sum += cached_ged(t, j);
          a_sum += attr_distance(Vector(attr_for_distance.row(static_cast<Eigen::Index>(t)).transpose()),
                                 Vector(attr_for_distance.row(static_cast<Eigen::Index>(j)).transpose()));
        }
        const double hits = static_cast<double>(std::max<std::size_t>(1, r.hits.size()));
        str_total += g_sum / hits;
        attr_total += a_sum / hits;
      }
      report.rows.push_back({k, to_string(s), str_total / static_cast<double>(order.size()),
                             attr_total / static_cast<double>(order.size())});
    }
  }
  return report;
}

BenchReport run_benchmark(const Corpus& corpus, const EmbedConfig& embed, const BenchParams& params) {
  const SkipGramModel model = train_graphs(corpus.graphs, embed);
  return run_benchmark(corpus, model.graph_vectors, params);
}

json report_to_json(const BenchReport& r) {
  json rows = json::array();
  for (const auto& c : r.rows) {
    rows.push_back({{"k", c.k}, {"strategy", c.strategy}, {"strSim", c.str_sim}, {"attrSim", c.attr_sim}});
  }
  return {{"dataset", r.dataset}, {"seed", r.seed},          {"targets", r.targets},
          {"strategies", r.strategies}, {"kValues", r.k_values}, {"rows", rows},
          {"approximateGed", r.approximate_ged}};
}

BenchReport report_from_json(const json& j) {
  try {
    BenchReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.targets = j.at("targets").get<std::vector<std::string>>();
    r.strategies = j.at("strategies").get<std::vector<std::string>>();
    r.k_values = j.at("kValues").get<std::vector<int>>();
    r.approximate_ged = j.value("approximateGed", false);
    for (const auto& c : j.at("rows")) {
      r.rows.push_back({c.at("k").get<int>(), c.at("strategy").get<std::string>(), c.at("strSim").get<double>(),
                        c.at("attrSim").get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bench report: ") + e.what());
  }
}

std::string format_report_table(const BenchReport& r) {
  std::ostringstream os;
  char buf[64];
  auto cell = [&](const std::string& s, int width) {
    std::snprintf(buf, sizeof buf, "%*s", width, s.c_str());
    os << buf;
  };
  const int w = 10;
  cell("Dataset", 12);
  cell("k", 5);
  cell("Type", 10);
  for (const auto& s : r.strategies) cell(s, w);
  os << '\n';
  for (int k : r.k_values) {
    for (int which = 0; which < 2; ++which) {
      cell(r.dataset.substr(0, 11), 12);
      cell(std::to_string(k), 5);
      cell(which == 0 ? "Str-Sim" : "Attr-Sim", 10);
      for (const auto& s : r.strategies) {
        const BenchCell& c = r.cell(k, s);
        char num[32];
        std::snprintf(num, sizeof num, "%.2f", which == 0 ? c.str_sim : c.attr_sim);
        cell(num, w);
      }
      os << '\n';
    }
  }
  if (r.approximate_ged) os << "(GED approximated by beam search for graphs above the exact-size cap)\n";
  return os.str();
}

}  // namespace gmatch
