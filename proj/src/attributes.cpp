#include "gmatch/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmatch/error.hpp"

namespace gmatch {

namespace {

double aggregate(const Graph& g, const MicroAttribute& attr) {
  std::vector<double> values;
  values.reserve(g.nodes.size());
  for (const Node& n : g.nodes) {
    auto it = n.attrs.find(attr.name);
    if (it == n.attrs.end()) {
      if (attr.aggregator == Aggregator::Count) continue;
      throw MissingAttribute("graph '" + g.id + "' node '" + n.id + "' lacks attribute '" + attr.name + "'");
    }
    values.push_back(it->second);
  }
  switch (attr.aggregator) {
    case Aggregator::Count:
      return static_cast<double>(values.size());
    case Aggregator::Sum: {
      double s = 0.0;
      for (double v : values) s += v;
      return s;
    }
    case Aggregator::Mean:
    case Aggregator::Min:
    case Aggregator::Max:
      break;
  }
  if (values.empty()) {
    throw EmptyGraph("graph '" + g.id + "' has no nodes to aggregate '" + attr.name + "' over");
  }
  if (attr.aggregator == Aggregator::Min) return *std::min_element(values.begin(), values.end());
  if (attr.aggregator == Aggregator::Max) return *std::max_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

}  // namespace

Vector NormalizationStats::apply(const Vector& x) const {
  if (x.size() != means.size()) {
    throw DimensionMismatch("vector of length " + std::to_string(x.size()) + " vs stats of length " +
                            std::to_string(means.size()));
  }
  return ((x - means).array() / stdevs.array()).matrix();
}

RowMatrix NormalizationStats::apply(const RowMatrix& x) const {
  if (x.cols() != means.size()) {
    throw DimensionMismatch("matrix with " + std::to_string(x.cols()) + " columns vs stats of length " +
                            std::to_string(means.size()));
  }
  RowMatrix out = x.rowwise() - means.transpose();
  out.array().rowwise() /= stdevs.transpose().array();
  return out;
}

AttributeVector extract_attributes(const Graph& g, const AttributeSchema& schema) {
  AttributeVector out{g.id, Vector(static_cast<Eigen::Index>(schema.dimension()))};
  Eigen::Index j = 0;
  for (const auto& attr : schema.macro) {
    auto it = g.macro_attrs.find(attr.name);
    if (it == g.macro_attrs.end()) {
      throw MissingAttribute("graph '" + g.id + "' lacks macro attribute '" + attr.name + "'");
    }
    out.values[j++] = it->second;
  }
  for (const auto& attr : schema.micro) out.values[j++] = aggregate(g, attr);
  return out;
}

RowMatrix attribute_matrix(const Corpus& c) {
  RowMatrix m(static_cast<Eigen::Index>(c.size()), static_cast<Eigen::Index>(c.schema.dimension()));
  for (std::size_t i = 0; i < c.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = extract_attributes(c.graphs[i], c.schema).values.transpose();
  }
  return m;
}

Vector feature_transform(const Vector& raw, const AttributeSchema& schema) {
  RowMatrix m = raw.transpose();
  return feature_transform(m, schema).row(0).transpose();
}

RowMatrix feature_transform(const RowMatrix& raw, const AttributeSchema& schema) {
  if (raw.cols() != static_cast<Eigen::Index>(schema.dimension())) {
    throw DimensionMismatch("attribute matrix width does not match schema");
  }
  RowMatrix out = raw;
  std::vector<bool> flags;
  for (const auto& a : schema.macro) flags.push_back(a.log_transform);
  for (const auto& a : schema.micro) flags.push_back(a.log_transform);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    if (!flags[static_cast<std::size_t>(j)]) continue;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      if (!(out(i, j) > -1.0)) throw BadParams("log-transformed attribute value must exceed -1");
      out(i, j) = std::log1p(out(i, j));
    }
  }
  return out;
}

std::pair<RowMatrix, NormalizationStats> standardize(const RowMatrix& x) {
  const Eigen::Index m = x.rows();
  if (m < 2) throw BadParams("standardize needs at least 2 rows");
  NormalizationStats stats;
  stats.means = x.colwise().mean().transpose();
  stats.stdevs.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - stats.means[j]).square().mean();
    const double sd = std::sqrt(var);
    // Relative threshold: a column is constant when its spread is at
    // rounding level compared with its magnitude.
    const double scale = std::max(1.0, std::abs(stats.means[j]));
    stats.stdevs[j] = sd > 1e-12 * scale ? sd : 1.0;
  }
  RowMatrix out = stats.apply(x);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (stats.stdevs[j] == 1.0 && (x.col(j).array() == x(0, j)).all()) out.col(j).setZero();
  }
  return {std::move(out), std::move(stats)};
}

std::pair<RowMatrix, NormalizationStats> standardize(std::span<const AttributeVector> vectors) {
  if (vectors.empty()) throw BadParams("standardize needs at least 2 rows");
  RowMatrix x(static_cast<Eigen::Index>(vectors.size()), vectors.front().values.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != x.cols()) throw DimensionMismatch("attribute vectors differ in length");
    x.row(static_cast<Eigen::Index>(i)) = vectors[i].values.transpose();
  }
  return standardize(x);
}

double named_value(const Graph& g, const AttributeSchema& schema, const std::string& name) {
  if (name == "nodeCount") return static_cast<double>(g.node_count());
  if (name == "edgeCount") return static_cast<double>(g.edge_count());
  if (name == "depth") return static_cast<double>(graph_stats(g).depth);
  for (const auto& a : schema.macro) {
    if (a.name == name) {
      auto it = g.macro_attrs.find(name);
      if (it == g.macro_attrs.end()) throw MissingAttribute("graph '" + g.id + "' lacks macro attribute '" + name + "'");
      return it->second;
    }
  }
  for (const auto& a : schema.micro) {
    if (a.name == name) return aggregate(g, a);
  }
  throw UnknownAttribute("unknown attribute '" + name + "'");
}

}  // namespace gmatch
