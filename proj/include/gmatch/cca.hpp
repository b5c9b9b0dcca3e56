#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "gmatch/attributes.hpp"
#include "gmatch/linalg.hpp"
#include "gmatch/skipgram.hpp"

namespace gmatch {

struct CcaOptions {
  // Number of canonical pairs; default min(N_A, effective rank).
  std::optional<int> pairs;
  // Absolute ridge applied to both views; default 1e-6 * trace(C_XX) / dim
  // computed per view.
  std::optional<double> ridge;
  // Scale fused component i by its canonical correlation.
  bool weighted = false;
};

// Fitted CCA between a structure view S (N_S columns) and an attribute view
// A (N_A columns). Inputs are standardized with the stored stats before
// projection; H_S and H_A rows are the canonical basis vectors, normalized
// to unit variance under the ridge-regularized covariance.
struct CcaModel {
  RowMatrix h_s;  // m x N_S
  RowMatrix h_a;  // m x N_A
  Vector correlations;  // gamma, non-increasing
  NormalizationStats struct_stats;
  NormalizationStats attr_stats;
  double ridge_s = 0.0;
  double ridge_a = 0.0;
  bool weighted = false;
  bool rank_deficient = false;  // m was truncated to the effective rank

  // Canonical scores of the training rows (not persisted).
  RowMatrix fitted_struct_scores;
  RowMatrix fitted_attr_scores;

  int pairs() const { return static_cast<int>(correlations.size()); }
  int struct_dim() const { return static_cast<int>(h_s.cols()); }
  int attr_dim() const { return static_cast<int>(h_a.cols()); }
  int fused_dim() const { return 2 * pairs(); }
};

struct FusedVector {
  std::string graph_id;
  Vector values;  // [S'; A'], length 2m
};

// Throws DimensionMismatch, BadParams.
CcaModel fit_cca(const RowMatrix& structure, const RowMatrix& attributes, const CcaOptions& opts = {});

FusedVector transform(const CcaModel& model, const StructureVector& s, const AttributeVector& a);
Vector transform(const CcaModel& model, const Vector& s, const Vector& a);

// Row i is the fused vector of graph i.
RowMatrix fuse_corpus(const CcaModel& model, const RowMatrix& structure, const RowMatrix& attributes);

void write_cca(std::ostream& out, const CcaModel& m);
CcaModel read_cca(std::istream& in);
void save_cca(const std::string& path, const CcaModel& m);
CcaModel load_cca(const std::string& path);

}  // namespace gmatch
