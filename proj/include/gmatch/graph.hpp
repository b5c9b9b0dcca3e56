#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gmatch {

struct Node {
  std::string id;
  std::string label;  // WL seed label
  std::map<std::string, double> attrs;

  bool operator==(const Node&) const = default;
};

struct Edge {
  std::string source;
  std::string target;
  std::optional<double> weight;

  bool operator==(const Edge&) const = default;
};

// A small attributed graph. Undirected edges are stored with the
// lexicographically smaller endpoint first (see `canonicalize`).
struct Graph {
  std::string id;
  bool directed = false;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::map<std::string, double> macro_attrs;
  // Free-form string metadata, e.g. the planted family of synthetic graphs.
  std::map<std::string, std::string> meta;

  bool operator==(const Graph&) const = default;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t edge_count() const { return edges.size(); }

  // Index of node `node_id` in `nodes`; throws UnknownNode.
  std::size_t node_index(const std::string& node_id) const;
};

// Index-based neighbourhood view of a Graph. For undirected graphs `out`
// and `in` are identical and equal `all`.
struct Adjacency {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::vector<std::size_t>> in;
  std::vector<std::vector<std::size_t>> all;

  std::size_t degree(std::size_t v) const { return all[v].size(); }
};

Adjacency adjacency(const Graph& g);

enum class Aggregator { Sum, Mean, Min, Max, Count };

std::string to_string(Aggregator a);
Aggregator parse_aggregator(const std::string& s);

struct MacroAttribute {
  std::string name;
  std::string description;
  bool log_transform = false;

  bool operator==(const MacroAttribute&) const = default;
};

struct MicroAttribute {
  std::string name;
  Aggregator aggregator = Aggregator::Mean;
  bool log_transform = false;

  bool operator==(const MicroAttribute&) const = default;
};

// Rule producing each node's WL seed label:
//   "degree"      node degree (default)
//   "label"       the label stored in the corpus file
//   "attr:<name>" the node's value of micro attribute <name>
struct LabelSource {
  enum class Kind { Degree, Field, Attribute };
  Kind kind = Kind::Degree;
  std::string attribute;

  static LabelSource parse(const std::string& s);
  std::string str() const;
  bool operator==(const LabelSource&) const = default;
};

struct AttributeSchema {
  std::vector<MacroAttribute> macro;
  std::vector<MicroAttribute> micro;
  LabelSource label_source;

  bool operator==(const AttributeSchema&) const = default;

  // N_A: macro attributes first, then micro, in declaration order.
  std::size_t dimension() const { return macro.size() + micro.size(); }
  std::vector<std::string> attribute_names() const;
  bool has_micro(const std::string& name) const;
  bool has_macro(const std::string& name) const;

  // Throws ValidationError on duplicate names or an empty schema.
  void validate() const;
};

struct Corpus {
  std::string name;
  AttributeSchema schema;
  std::vector<Graph> graphs;

  bool operator==(const Corpus&) const = default;

  std::size_t size() const { return graphs.size(); }
  // Throws NotFound.
  std::size_t index_of(const std::string& graph_id) const;
  const Graph& graph(const std::string& graph_id) const { return graphs[index_of(graph_id)]; }
};

// Sorts undirected edge endpoints so duplicate detection is order free.
void canonicalize(Graph& g);

// Overwrites node labels according to `source`. Labels of kind Field are
// left untouched.
void assign_seed_labels(Graph& g, const LabelSource& source);

// Checks the structural invariants of one graph and that its attributes
// conform to `schema`. Throws ValidationError naming the graph.
void validate_graph(const Graph& g, const AttributeSchema& schema);

// Validates every graph, schema, and uniqueness of graph ids.
void validate_corpus(const Corpus& c);

// Canonicalizes, assigns seed labels, and validates a graph about to join
// (or be compared against) a corpus with `schema`.
void prepare_graph(Graph& g, const AttributeSchema& schema);

struct StatsRecord {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t depth = 0;
  std::map<std::size_t, std::size_t> degree_histogram;

  bool operator==(const StatsRecord&) const = default;
};

// depth: longest path from a root (in-degree 0) for directed graphs, the
// diameter (over finite distances) otherwise.
StatsRecord graph_stats(const Graph& g);

// ---- corpus file format -------------------------------------------------
// Line-delimited JSON: a header record {"schema": {...}, "name": ...}
// followed by one record per graph.

nlohmann::json schema_to_json(const AttributeSchema& s);
AttributeSchema schema_from_json(const nlohmann::json& j);
nlohmann::json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);

Corpus read_corpus(std::istream& in, const std::optional<AttributeSchema>& schema = std::nullopt);
void write_corpus(std::ostream& out, const Corpus& c);

// When `schema` is given it replaces the schema stored in the header.
Corpus load_corpus(const std::string& path,
                   const std::optional<AttributeSchema>& schema = std::nullopt);
void save_corpus(const std::string& path, const Corpus& c);

}  // namespace gmatch
