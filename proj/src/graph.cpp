#include "gmatch/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gmatch/error.hpp"

namespace gmatch {

using nlohmann::json;

std::size_t Graph::node_index(const std::string& node_id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == node_id) return i;
  }
  throw UnknownNode("graph '" + id + "' has no node '" + node_id + "'");
}

Adjacency adjacency(const Graph& g) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) index.emplace(g.nodes[i].id, i);

  Adjacency adj;
  const std::size_t n = g.nodes.size();
  adj.out.resize(n);
  adj.in.resize(n);
  adj.all.resize(n);
  for (const Edge& e : g.edges) {
    auto s = index.find(e.source);
    auto t = index.find(e.target);
    if (s == index.end() || t == index.end()) {
      throw ValidationError("graph '" + g.id + "': edge references missing node '" +
                            (s == index.end() ? e.source : e.target) + "'");
    }
    adj.all[s->second].push_back(t->second);
    adj.all[t->second].push_back(s->second);
    if (g.directed) {
      adj.out[s->second].push_back(t->second);
      adj.in[t->second].push_back(s->second);
    }
  }
  if (!g.directed) {
    adj.out = adj.all;
    adj.in = adj.all;
  }
  return adj;
}

std::string to_string(Aggregator a) {
  switch (a) {
    case Aggregator::Sum: return "sum";
    case Aggregator::Mean: return "mean";
    case Aggregator::Min: return "min";
    case Aggregator::Max: return "max";
    case Aggregator::Count: return "count";
  }
  return "mean";
}

Aggregator parse_aggregator(const std::string& s) {
  if (s == "sum") return Aggregator::Sum;
  if (s == "mean") return Aggregator::Mean;
  if (s == "min") return Aggregator::Min;
  if (s == "max") return Aggregator::Max;
  if (s == "count") return Aggregator::Count;
  throw ParseError("unknown aggregator '" + s + "'");
}

LabelSource LabelSource::parse(const std::string& s) {
  if (s.empty() || s == "degree") return {};
  if (s == "label") return {Kind::Field, {}};
  if (s.rfind("attr:", 0) == 0 && s.size() > 5) return {Kind::Attribute, s.substr(5)};
  throw ParseError("unknown labelSource '" + s + "'");
}

std::string LabelSource::str() const {
  switch (kind) {
    case Kind::Degree: return "degree";
    case Kind::Field: return "label";
    case Kind::Attribute: return "attr:" + attribute;
  }
  return "degree";
}

std::vector<std::string> AttributeSchema::attribute_names() const {
  std::vector<std::string> names;
  names.reserve(dimension());
  for (const auto& a : macro) names.push_back(a.name);
  for (const auto& a : micro) names.push_back(a.name);
  return names;
}

bool AttributeSchema::has_micro(const std::string& name) const {
  return std::any_of(micro.begin(), micro.end(), [&](const auto& a) { return a.name == name; });
}

bool AttributeSchema::has_macro(const std::string& name) const {
  return std::any_of(macro.begin(), macro.end(), [&](const auto& a) { return a.name == name; });
}

void AttributeSchema::validate() const {
  if (dimension() == 0) throw ValidationError("schema declares no attributes");
  std::set<std::string> seen;
  for (const auto& name : attribute_names()) {
    if (name.empty()) throw ValidationError("schema attribute with empty name");
    if (!seen.insert(name).second) throw ValidationError("duplicate schema attribute '" + name + "'");
  }
  if (label_source.kind == LabelSource::Kind::Attribute && !has_micro(label_source.attribute)) {
    throw ValidationError("labelSource references unknown micro attribute '" +
                          label_source.attribute + "'");
  }
}

std::size_t Corpus::index_of(const std::string& graph_id) const {
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].id == graph_id) return i;
  }
  throw NotFound("corpus has no graph '" + graph_id + "'");
}

void canonicalize(Graph& g) {
  if (g.directed) return;
  for (Edge& e : g.edges) {
    if (e.target < e.source) std::swap(e.source, e.target);
  }
}

namespace {

std::string format_label_value(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

void assign_seed_labels(Graph& g, const LabelSource& source) {
  switch (source.kind) {
    case LabelSource::Kind::Field:
      return;
    case LabelSource::Kind::Degree: {
      const Adjacency adj = adjacency(g);
      for (std::size_t i = 0; i < g.nodes.size(); ++i) g.nodes[i].label = std::to_string(adj.degree(i));
      return;
    }
    case LabelSource::Kind::Attribute:
      for (Node& n : g.nodes) {
        auto it = n.attrs.find(source.attribute);
        if (it == n.attrs.end()) {
          throw MissingAttribute("graph '" + g.id + "' node '" + n.id + "' lacks label attribute '" +
                                 source.attribute + "'");
        }
        n.label = format_label_value(it->second);
      }
      return;
  }
}

void validate_graph(const Graph& g, const AttributeSchema& schema) {
  auto fail = [&](const std::string& why) {
    throw ValidationError("graph '" + g.id + "': " + why);
  };
  if (g.id.empty()) throw ValidationError("graph with empty id");

  std::unordered_set<std::string> ids;
  for (const Node& n : g.nodes) {
    if (n.id.empty()) fail("node with empty id");
    if (!ids.insert(n.id).second) fail("duplicate node id '" + n.id + "'");
    if (n.label.empty()) fail("node '" + n.id + "' has an empty label");
    for (const auto& [name, value] : n.attrs) {
      if (!schema.has_micro(name)) fail("node '" + n.id + "' has unknown attribute '" + name + "'");
      if (!std::isfinite(value)) fail("node '" + n.id + "' attribute '" + name + "' is not finite");
    }
  }

  std::set<std::pair<std::string, std::string>> seen;
  for (const Edge& e : g.edges) {
    if (!ids.count(e.source)) fail("edge references missing node '" + e.source + "'");
    if (!ids.count(e.target)) fail("edge references missing node '" + e.target + "'");
    if (e.source == e.target) fail("self-loop on node '" + e.source + "'");
    if (e.weight && (!std::isfinite(*e.weight) || *e.weight < 0)) {
      fail("edge " + e.source + "-" + e.target + " has an invalid weight");
    }
    auto key = std::make_pair(e.source, e.target);
    if (!g.directed && key.second < key.first) std::swap(key.first, key.second);
    if (!seen.insert(key).second) fail("duplicate edge " + e.source + "-" + e.target);
  }

  for (const auto& [name, value] : g.macro_attrs) {
    if (!schema.has_macro(name)) fail("unknown macro attribute '" + name + "'");
    if (!std::isfinite(value)) fail("macro attribute '" + name + "' is not finite");
  }
}

void validate_corpus(const Corpus& c) {
  c.schema.validate();
  std::unordered_set<std::string> ids;
  for (const Graph& g : c.graphs) {
    validate_graph(g, c.schema);
    if (!ids.insert(g.id).second) throw ValidationError("duplicate graph id '" + g.id + "'");
  }
}

void prepare_graph(Graph& g, const AttributeSchema& schema) {
  canonicalize(g);
  // Endpoint checks must precede degree labelling, which builds adjacency.
  std::unordered_set<std::string> ids;
  for (const Node& n : g.nodes) ids.insert(n.id);
  for (const Edge& e : g.edges) {
    for (const auto* end : {&e.source, &e.target}) {
      if (!ids.count(*end)) {
        throw ValidationError("graph '" + g.id + "': edge references missing node '" + *end + "'");
      }
    }
  }
  assign_seed_labels(g, schema.label_source);
  validate_graph(g, schema);
}

StatsRecord graph_stats(const Graph& g) {
  const Adjacency adj = adjacency(g);
  const std::size_t n = g.nodes.size();
  StatsRecord r;
  r.node_count = n;
  r.edge_count = g.edges.size();
  for (std::size_t v = 0; v < n; ++v) ++r.degree_histogram[adj.degree(v)];

  auto bfs_ecc = [&](std::size_t src, const std::vector<std::vector<std::size_t>>& nbrs) {
    std::vector<std::size_t> dist(n, SIZE_MAX);
    std::queue<std::size_t> q;
    dist[src] = 0;
    q.push(src);
    std::size_t far = 0;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      far = std::max(far, dist[u]);
      for (std::size_t w : nbrs[u]) {
        if (dist[w] == SIZE_MAX) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return far;
  };

  if (!g.directed) {
    for (std::size_t v = 0; v < n; ++v) r.depth = std::max(r.depth, bfs_ecc(v, adj.all));
    return r;
  }

  // Longest path over a topological order; cyclic graphs fall back to the
  // BFS depth reachable from the roots.
  std::vector<std::size_t> indeg(n);
  for (std::size_t v = 0; v < n; ++v) indeg[v] = adj.in[v].size();
  std::vector<std::size_t> order;
  std::queue<std::size_t> q;
  for (std::size_t v = 0; v < n; ++v) if (indeg[v] == 0) q.push(v);
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    order.push_back(u);
    for (std::size_t w : adj.out[u]) if (--indeg[w] == 0) q.push(w);
  }
  if (order.size() == n) {
    std::vector<std::size_t> longest(n, 0);
    for (std::size_t u : order) {
      for (std::size_t w : adj.out[u]) longest[w] = std::max(longest[w], longest[u] + 1);
      r.depth = std::max(r.depth, longest[u]);
    }
    return r;
  }
  bool any_root = false;
  for (std::size_t v = 0; v < n; ++v) {
    if (adj.in[v].empty()) {
      any_root = true;
      r.depth = std::max(r.depth, bfs_ecc(v, adj.out));
    }
  }
  if (!any_root) {
    for (std::size_t v = 0; v < n; ++v) r.depth = std::max(r.depth, bfs_ecc(v, adj.out));
  }
  return r;
}

// ---- serialization ------------------------------------------------------

namespace {

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field '" + key + "': " + e.what());
  }
}

double finite_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(where + ": non-finite number");
  return d;
}

}  // namespace

json schema_to_json(const AttributeSchema& s) {
  json macro = json::array();
  for (const auto& a : s.macro) {
    json m = {{"name", a.name}, {"description", a.description}};
    if (a.log_transform) m["log"] = true;
    macro.push_back(std::move(m));
  }
  json micro = json::array();
  for (const auto& a : s.micro) {
    json m = {{"name", a.name}, {"aggregator", to_string(a.aggregator)}};
    if (a.log_transform) m["log"] = true;
    micro.push_back(std::move(m));
  }
  return {{"macro", macro}, {"micro", micro}, {"labelSource", s.label_source.str()}};
}

AttributeSchema schema_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("schema: expected an object");
  AttributeSchema s;
  if (j.contains("macro")) {
    for (const auto& m : j.at("macro")) {
      MacroAttribute a;
      a.name = required<std::string>(m, "name", "schema.macro");
      a.description = m.value("description", std::string{});
      a.log_transform = m.value("log", false);
      s.macro.push_back(std::move(a));
    }
  }
  if (j.contains("micro")) {
    for (const auto& m : j.at("micro")) {
      MicroAttribute a;
      a.name = required<std::string>(m, "name", "schema.micro");
      a.aggregator = parse_aggregator(m.value("aggregator", std::string{"mean"}));
      a.log_transform = m.value("log", false);
      s.micro.push_back(std::move(a));
    }
  }
  if (j.contains("labelSource") && !j.at("labelSource").is_null()) {
    s.label_source = LabelSource::parse(j.at("labelSource").get<std::string>());
  }
  return s;
}

json graph_to_json(const Graph& g) {
  json nodes = json::array();
  for (const Node& n : g.nodes) {
    json attrs = json::object();
    for (const auto& [k, v] : n.attrs) attrs[k] = v;
    nodes.push_back({{"id", n.id}, {"label", n.label}, {"attrs", attrs}});
  }
  json edges = json::array();
  for (const Edge& e : g.edges) {
    json r = {{"s", e.source}, {"t", e.target}};
    if (e.weight) r["w"] = *e.weight;
    edges.push_back(std::move(r));
  }
  json macro = json::object();
  for (const auto& [k, v] : g.macro_attrs) macro[k] = v;
  json out = {{"id", g.id}, {"directed", g.directed}, {"nodes", nodes}, {"edges", edges},
              {"macroAttrs", macro}};
  if (!g.meta.empty()) out["meta"] = g.meta;
  return out;
}

Graph graph_from_json(const json& j) {
  Graph g;
  g.id = required<std::string>(j, "id", "graph");
  const std::string where = "graph '" + g.id + "'";
  g.directed = j.value("directed", false);
  if (!j.contains("nodes") || !j.at("nodes").is_array()) throw ParseError(where + ": missing nodes array");
  for (const auto& n : j.at("nodes")) {
    Node node;
    node.id = required<std::string>(n, "id", where);
    node.label = n.value("label", std::string{});
    if (n.contains("attrs")) {
      if (!n.at("attrs").is_object()) throw ParseError(where + ": node attrs must be an object");
      for (const auto& [k, v] : n.at("attrs").items()) {
        node.attrs[k] = finite_number(v, where + " node '" + node.id + "' attr '" + k + "'");
      }
    }
    g.nodes.push_back(std::move(node));
  }
  if (j.contains("edges")) {
    if (!j.at("edges").is_array()) throw ParseError(where + ": edges must be an array");
    for (const auto& e : j.at("edges")) {
      Edge edge;
      edge.source = required<std::string>(e, "s", where);
      edge.target = required<std::string>(e, "t", where);
      if (e.contains("w") && !e.at("w").is_null()) edge.weight = finite_number(e.at("w"), where + " edge weight");
      g.edges.push_back(std::move(edge));
    }
  }
  if (j.contains("macroAttrs")) {
    for (const auto& [k, v] : j.at("macroAttrs").items()) {
      g.macro_attrs[k] = finite_number(v, where + " macro attr '" + k + "'");
    }
  }
  if (j.contains("meta")) {
    for (const auto& [k, v] : j.at("meta").items()) {
      g.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return g;
}

Corpus read_corpus(std::istream& in, const std::optional<AttributeSchema>& schema) {
  Corpus c;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      if (!rec.is_object() || !rec.contains("schema")) {
        throw ParseError("line " + std::to_string(lineno) + ": expected header record with 'schema'");
      }
      c.schema = schema ? *schema : schema_from_json(rec.at("schema"));
      c.name = rec.value("name", std::string{});
      have_header = true;
      continue;
    }
    try {
      c.graphs.push_back(graph_from_json(rec));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError("corpus file is empty");
  c.schema.validate();
  for (Graph& g : c.graphs) prepare_graph(g, c.schema);
  validate_corpus(c);
  return c;
}

void write_corpus(std::ostream& out, const Corpus& c) {
  out << json{{"schema", schema_to_json(c.schema)}, {"name", c.name}}.dump() << '\n';
  for (const Graph& g : c.graphs) out << graph_to_json(g).dump() << '\n';
}

Corpus load_corpus(const std::string& path, const std::optional<AttributeSchema>& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file '" + path + "'");
  return read_corpus(in, schema);
}

void save_corpus(const std::string& path, const Corpus& c) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write corpus file '" + path + "'");
  write_corpus(out, c);
}

}  // namespace gmatch
