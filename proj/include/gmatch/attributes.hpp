#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmatch/graph.hpp"
#include "gmatch/linalg.hpp"

namespace gmatch {

struct AttributeVector {
  std::string graph_id;
  Vector values;  // schema order: macro then micro
};

// Per-column affine normalization fitted on a corpus.
struct NormalizationStats {
  Vector means;
  Vector stdevs;  // strictly positive

  std::size_t dimension() const { return static_cast<std::size_t>(means.size()); }
  Vector apply(const Vector& x) const;
  RowMatrix apply(const RowMatrix& x) const;
  bool operator==(const NormalizationStats& o) const { return means == o.means && stdevs == o.stdevs; }
};

// Raw attribute values. Throws MissingAttribute, EmptyGraph.
AttributeVector extract_attributes(const Graph& g, const AttributeSchema& schema);

// M x N_A raw matrix, one row per graph in corpus order.
RowMatrix attribute_matrix(const Corpus& c);

// Applies per-attribute log1p flags; values must exceed -1 where flagged.
Vector feature_transform(const Vector& raw, const AttributeSchema& schema);
RowMatrix feature_transform(const RowMatrix& raw, const AttributeSchema& schema);

// Column-wise zero mean / unit population variance. Constant columns map
// to zeros with stdev recorded as 1.
std::pair<RowMatrix, NormalizationStats> standardize(const RowMatrix& x);
std::pair<RowMatrix, NormalizationStats> standardize(std::span<const AttributeVector> vectors);

// Raw value of a named quantity for one graph: a schema attribute or one
// of the structural statistics nodeCount, edgeCount, depth.
double named_value(const Graph& g, const AttributeSchema& schema, const std::string& name);

}  // namespace gmatch
