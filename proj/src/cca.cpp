#include "gmatch/cca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "gmatch/error.hpp"

namespace gmatch {

namespace {

constexpr char kMagic[] = "GMCCAMD\n";
constexpr std::uint32_t kVersion = 1;

struct Whitener {
  Eigen::MatrixXd inv_sqrt;  // (C + ridge I)^(-1/2)
  int rank = 0;              // effective rank of the unregularized C
};

Whitener whitener(const Eigen::MatrixXd& cov, double ridge) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> raw(cov, Eigen::EigenvaluesOnly);
  const double top = std::max(raw.eigenvalues().maxCoeff(), 0.0);
  Whitener w;
  w.rank = static_cast<int>((raw.eigenvalues().array() > 1e-10 * std::max(top, 1e-300)).count());

  const Eigen::MatrixXd reg = cov + ridge * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reg);
  Eigen::VectorXd d = es.eigenvalues();
  const double dtop = std::max(d.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    // Directions with no variance even after regularization get zero weight.
    d[i] = d[i] > 1e-14 * std::max(dtop, 1e-300) ? 1.0 / std::sqrt(d[i]) : 0.0;
  }
  w.inv_sqrt = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
  return w;
}

double default_ridge(const Eigen::MatrixXd& cov) {
  return 1e-6 * cov.trace() / static_cast<double>(cov.rows());
}

}  // namespace

CcaModel fit_cca(const RowMatrix& structure, const RowMatrix& attributes, const CcaOptions& opts) {
  if (structure.rows() != attributes.rows()) {
    throw DimensionMismatch("structure and attribute matrices have " + std::to_string(structure.rows()) + " and " +
                            std::to_string(attributes.rows()) + " rows");
  }
  const Eigen::Index m_rows = structure.rows();
  const Eigen::Index ns = structure.cols();
  const Eigen::Index na = attributes.cols();
  if (m_rows < 3) throw BadParams("CCA needs at least 3 graphs");
  if (ns < 1 || na < 1) throw DimensionMismatch("both views need at least one column");
  if (opts.pairs && (*opts.pairs < 1 || *opts.pairs > std::min(ns, na))) {
    throw BadParams("pair count must lie in [1, min(N_S, N_A)]");
  }
  if (opts.ridge && !(*opts.ridge >= 0)) throw BadParams("ridge must be non-negative");

  CcaModel model;
  model.weighted = opts.weighted;
  auto [xs, s_stats] = standardize(structure);
  auto [xa, a_stats] = standardize(attributes);
  model.struct_stats = std::move(s_stats);
  model.attr_stats = std::move(a_stats);

  const double inv_m = 1.0 / static_cast<double>(m_rows);
  const Eigen::MatrixXd css = inv_m * (xs.transpose() * xs);
  const Eigen::MatrixXd caa = inv_m * (xa.transpose() * xa);
  const Eigen::MatrixXd csa = inv_m * (xs.transpose() * xa);

  model.ridge_s = opts.ridge ? *opts.ridge : default_ridge(css);
  model.ridge_a = opts.ridge ? *opts.ridge : default_ridge(caa);
  const Whitener ws = whitener(css, model.ridge_s);
  const Whitener wa = whitener(caa, model.ridge_a);

  const int effective = std::min({ws.rank, wa.rank, static_cast<int>(ns), static_cast<int>(na)});
  if (effective < 1) throw BadParams("both views are constant; no canonical pairs exist");
  int pairs = opts.pairs ? *opts.pairs : std::min(static_cast<int>(na), effective);
  if (pairs > effective) {
    model.rank_deficient = true;
    pairs = effective;
  }

  const Eigen::MatrixXd t = ws.inv_sqrt * csa * wa.inv_sqrt;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);

  model.correlations = svd.singularValues().head(pairs);
  model.h_s.resize(pairs, ns);
  model.h_a.resize(pairs, na);
  for (int i = 0; i < pairs; ++i) {
    Eigen::VectorXd hs = ws.inv_sqrt * svd.matrixU().col(i);
    Eigen::VectorXd ha = wa.inv_sqrt * svd.matrixV().col(i);
    Eigen::Index arg = 0;
    hs.cwiseAbs().maxCoeff(&arg);
    if (hs[arg] < 0) {
      hs = -hs;
      ha = -ha;
    }
    model.h_s.row(i) = hs.transpose();
    model.h_a.row(i) = ha.transpose();
  }
  model.fitted_struct_scores = xs * model.h_s.transpose();
  model.fitted_attr_scores = xa * model.h_a.transpose();
  return model;
}

Vector transform(const CcaModel& model, const Vector& s, const Vector& a) {
  if (s.size() != model.h_s.cols() || a.size() != model.h_a.cols()) {
    throw DimensionMismatch("input dims (" + std::to_string(s.size()) + ", " + std::to_string(a.size()) +
                            ") do not match model (" + std::to_string(model.h_s.cols()) + ", " +
                            std::to_string(model.h_a.cols()) + ")");
  }
  const Eigen::Index m = model.correlations.size();
  Vector out(2 * m);
  out.head(m) = model.h_s * model.struct_stats.apply(s);
  out.tail(m) = model.h_a * model.attr_stats.apply(a);
  if (model.weighted) {
    out.head(m).array() *= model.correlations.array();
    out.tail(m).array() *= model.correlations.array();
  }
  return out;
}

FusedVector transform(const CcaModel& model, const StructureVector& s, const AttributeVector& a) {
  return {s.graph_id, transform(model, s.values, a.values)};
}

RowMatrix fuse_corpus(const CcaModel& model, const RowMatrix& structure, const RowMatrix& attributes) {
  if (model.pairs() < 1) throw BadParams("CCA model has no canonical pairs");
  if (structure.rows() != attributes.rows()) throw DimensionMismatch("row counts differ");
  if (structure.cols() != model.h_s.cols() || attributes.cols() != model.h_a.cols()) {
    throw DimensionMismatch("input widths do not match the CCA model");
  }
  const Eigen::Index m = model.pairs();
  RowMatrix out(structure.rows(), 2 * m);
  out.leftCols(m) = model.struct_stats.apply(structure) * model.h_s.transpose();
  out.rightCols(m) = model.attr_stats.apply(attributes) * model.h_a.transpose();
  if (model.weighted) {
    out.leftCols(m).array().rowwise() *= model.correlations.transpose().array();
    out.rightCols(m).array().rowwise() *= model.correlations.transpose().array();
  }
  return out;
}

// ---- persistence --------------------------------------------------------

void write_cca(std::ostream& out, const CcaModel& m) {
  out.write(kMagic, sizeof kMagic - 1);
  binio::put<std::uint32_t>(out, kVersion);
  binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.pairs()));
  binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.struct_dim()));
  binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.attr_dim()));
  binio::put<double>(out, m.ridge_s);
  binio::put<double>(out, m.ridge_a);
  binio::put<std::uint8_t>(out, m.weighted ? 1 : 0);
  binio::put<std::uint8_t>(out, m.rank_deficient ? 1 : 0);
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  binio::put_vector(out, vec(m.correlations));
  binio::put_matrix(out, m.h_s);
  binio::put_matrix(out, m.h_a);
  binio::put_vector(out, vec(m.struct_stats.means));
  binio::put_vector(out, vec(m.struct_stats.stdevs));
  binio::put_vector(out, vec(m.attr_stats.means));
  binio::put_vector(out, vec(m.attr_stats.stdevs));
}

CcaModel read_cca(std::istream& in) {
  binio::expect_magic(in, std::string(kMagic, sizeof kMagic - 1));
  const auto version = binio::get<std::uint32_t>(in);
  if (version != kVersion) throw FormatError("unsupported CCA model version " + std::to_string(version));
  const auto pairs = binio::get<std::uint64_t>(in);
  const auto ns = binio::get<std::uint64_t>(in);
  const auto na = binio::get<std::uint64_t>(in);
  CcaModel m;
  m.ridge_s = binio::get<double>(in);
  m.ridge_a = binio::get<double>(in);
  m.weighted = binio::get<std::uint8_t>(in) != 0;
  m.rank_deficient = binio::get<std::uint8_t>(in) != 0;
  auto vec = [](const std::vector<double>& v) { return Vector(Eigen::Map<const Vector>(v.data(), v.size())); };
  m.correlations = vec(binio::get_vector(in, pairs));
  m.h_s = binio::get_matrix(in, pairs, ns);
  m.h_a = binio::get_matrix(in, pairs, na);
  m.struct_stats.means = vec(binio::get_vector(in, ns));
  m.struct_stats.stdevs = vec(binio::get_vector(in, ns));
  m.attr_stats.means = vec(binio::get_vector(in, na));
  m.attr_stats.stdevs = vec(binio::get_vector(in, na));
  return m;
}

void save_cca(const std::string& path, const CcaModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model file '" + path + "'");
  write_cca(out, m);
}

CcaModel load_cca(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file '" + path + "'");
  return read_cca(in);
}

}  // namespace gmatch
