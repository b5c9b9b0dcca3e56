#include <doctest.h>

#include <sstream>

#include "gmatch/cca.hpp"
#include "gmatch/error.hpp"
#include "oracles.hpp"

using namespace gmatch;

namespace {

std::vector<double> gammas(const CcaModel& m) { return {m.correlations.data(), m.correlations.data() + m.pairs()}; }

// S and A sharing a few latent directions plus noise.
std::pair<RowMatrix, RowMatrix> correlated(Rng& rng, Eigen::Index rows, Eigen::Index ns, Eigen::Index na) {
  const RowMatrix z = oracle::gaussian(rng, rows, 3);
  RowMatrix s = z * oracle::gaussian(rng, 3, ns) + oracle::gaussian(rng, rows, ns);
  RowMatrix a = z * oracle::gaussian(rng, 3, na) + 2.0 * oracle::gaussian(rng, rows, na);
  return {s, a};
}

Eigen::MatrixXd cov(const RowMatrix& x, const RowMatrix& y) {
  const Eigen::MatrixXd a = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd b = y.rowwise() - y.colwise().mean();
  return a.transpose() * b / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("correlations match the generalized eigenproblem oracle") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    auto [s, a] = correlated(rng, 50, 8, 5);
    const CcaModel m = fit_cca(s, a);
    REQUIRE(m.pairs() == 5);
    const auto ref = oracle::cca_generalized_eigen(s, a, m.ridge_s, m.ridge_a, 5);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(m.correlations[i] - ref[i]) < 1e-8);
  }
}

TEST_CASE("canonical variates are uncorrelated except pairwise") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    auto [s, a] = correlated(rng, 50, 8, 5);
    const CcaModel m = fit_cca(s, a, {std::nullopt, 0.0, false});
    const RowMatrix& ss = m.fitted_struct_scores;
    const RowMatrix& aa = m.fitted_attr_scores;
    for (int i = 0; i < m.pairs(); ++i) {
      for (int j = 0; j < m.pairs(); ++j) {
        const double cross = oracle::pearson(ss.col(i), aa.col(j));
        CHECK(std::abs(cross - (i == j ? m.correlations[i] : 0.0)) < 1e-6);
        if (i != j) {
          CHECK(std::abs(oracle::pearson(ss.col(i), ss.col(j))) < 1e-6);
          CHECK(std::abs(oracle::pearson(aa.col(i), aa.col(j))) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("unit variance under the regularized covariance") {
  Rng rng(5);
  auto [s, a] = correlated(rng, 60, 6, 4);
  const CcaModel m = fit_cca(s, a);
  const RowMatrix xs = m.struct_stats.apply(s), xa = m.attr_stats.apply(a);
  const Eigen::MatrixXd css = cov(xs, xs) + m.ridge_s * Eigen::MatrixXd::Identity(6, 6);
  const Eigen::MatrixXd caa = cov(xa, xa) + m.ridge_a * Eigen::MatrixXd::Identity(4, 4);
  for (int i = 0; i < m.pairs(); ++i) {
    const Eigen::VectorXd hs = m.h_s.row(i).transpose(), ha = m.h_a.row(i).transpose();
    CHECK(std::abs(hs.dot(css * hs) - 1) < 1e-6);
    CHECK(std::abs(ha.dot(caa * ha) - 1) < 1e-6);
  }
}

TEST_CASE("perfectly dependent 1D views") {
  Rng rng(9);
  const RowMatrix s = oracle::gaussian(rng, 40, 1);
  const RowMatrix a = 2.0 * s;
  const CcaModel m = fit_cca(s, a, {std::nullopt, 0.0, false});
  CHECK(std::abs(m.correlations[0] - 1.0) < 1e-9);
}

TEST_CASE("independent Gaussian views") {
  Rng rng(10);
  const RowMatrix s = oracle::gaussian(rng, 5000, 3), a = oracle::gaussian(rng, 5000, 3);
  const CcaModel m = fit_cca(s, a, {std::nullopt, 0.0, false});
  for (int i = 0; i < m.pairs(); ++i) CHECK(m.correlations[i] < 0.1);
}

TEST_CASE("affine invariance of correlations") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto [s, a] = correlated(rng, 80, 6, 4);
    Eigen::MatrixXd w = oracle::gaussian(rng, 4, 4) + 3 * Eigen::MatrixXd::Identity(4, 4);
    const Eigen::RowVectorXd b = oracle::gaussian(rng, 1, 4) * 50;
    RowMatrix a2 = (a * w.transpose()).rowwise() + b;
    const CcaModel m1 = fit_cca(s, a, {std::nullopt, 0.0, false});
    const CcaModel m2 = fit_cca(s, a2, {std::nullopt, 0.0, false});
    for (int i = 0; i < m1.pairs(); ++i) CHECK(std::abs(m1.correlations[i] - m2.correlations[i]) < 1e-6);
  }
}

TEST_CASE("swapping views gives the same correlations") {
  Rng rng(12);
  auto [s, a] = correlated(rng, 50, 5, 5);
  const CcaModel m1 = fit_cca(s, a), m2 = fit_cca(a, s);
  for (int i = 0; i < m1.pairs(); ++i) CHECK(std::abs(m1.correlations[i] - m2.correlations[i]) < 1e-9);
}

TEST_CASE("correlations sorted and bounded, sign convention applied") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    auto [s, a] = correlated(rng, 30, 40, 5);  // N_S > M needs the ridge
    const CcaModel m = fit_cca(s, a);
    const auto g = gammas(m);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g[i] >= 0);
      CHECK(g[i] <= 1 + 1e-9);
      if (i > 0) CHECK(g[i] <= g[i - 1]);
      Eigen::Index arg = 0;
      m.h_s.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff(&arg);
      CHECK(m.h_s(static_cast<Eigen::Index>(i), arg) > 0);
    }
    CHECK(m.h_s.allFinite());
  }
}

TEST_CASE("transform reproduces fitted scores") {
  Rng rng(14);
  auto [s, a] = correlated(rng, 50, 8, 5);
  const CcaModel m = fit_cca(s, a);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const Vector f = transform(m, Vector(s.row(i).transpose()), Vector(a.row(i).transpose()));
    CHECK(f.size() == 10);
    CHECK((f.head(5) - m.fitted_struct_scores.row(i).transpose()).norm() < 1e-9);
    CHECK((f.tail(5) - m.fitted_attr_scores.row(i).transpose()).norm() < 1e-9);
  }
  // batch equals the per-row loop
  const RowMatrix batch = fuse_corpus(m, s, a);
  for (Eigen::Index i = 0; i < 50; ++i) {
    CHECK((batch.row(i).transpose() - transform(m, Vector(s.row(i).transpose()), Vector(a.row(i).transpose())))
              .norm() < 1e-12);
  }
  // inputs equal to the means map to zero
  CHECK(transform(m, m.struct_stats.means, m.attr_stats.means).norm() < 1e-12);
}

TEST_CASE("hand built identity projection") {
  CcaModel m;
  m.h_s = RowMatrix::Zero(1, 3);
  m.h_s(0, 0) = 1;
  m.h_a = RowMatrix::Zero(1, 2);
  m.h_a(0, 0) = 1;
  m.correlations = Vector::Constant(1, 0.5);
  m.struct_stats = {Vector::Constant(3, 1.0), Vector::Constant(3, 2.0)};
  m.attr_stats = {Vector::Constant(2, 0.0), Vector::Constant(2, 4.0)};
  Vector s(3), a(2);
  s << 5, 9, 9;
  a << 8, 1;
  const Vector f = transform(m, s, a);
  CHECK(f[0] == 2);
  CHECK(f[1] == 2);
  m.weighted = true;
  CHECK(transform(m, s, a)[0] == 1);
  CHECK_THROWS_AS(transform(m, a, s), DimensionMismatch);
}

TEST_CASE("parameter errors and rank deficiency") {
  Rng rng(15);
  auto [s, a] = correlated(rng, 20, 4, 3);
  CHECK_THROWS_AS(fit_cca(s, a.topRows(10)), DimensionMismatch);
  CHECK_THROWS_AS(fit_cca(s, a, {0, std::nullopt, false}), BadParams);
  CHECK_THROWS_AS(fit_cca(s, a, {4, std::nullopt, false}), BadParams);
  CHECK_THROWS_AS(fit_cca(s, a, {std::nullopt, -1.0, false}), BadParams);
  CHECK_THROWS_AS(fit_cca(s.topRows(2), a.topRows(2)), BadParams);

  // structure view of rank 1 spread across 4 columns
  RowMatrix low(20, 4);
  for (Eigen::Index i = 0; i < 20; ++i) low.row(i).setConstant(s(i, 0)), low(i, 1) *= 2, low(i, 2) *= -1;
  const CcaModel m = fit_cca(low, a, {3, std::nullopt, false});
  CHECK(m.rank_deficient);
  CHECK(m.pairs() == 1);
}

TEST_CASE("model file round trip") {
  Rng rng(16);
  auto [s, a] = correlated(rng, 30, 6, 3);
  const CcaModel m = fit_cca(s, a, {2, std::nullopt, true});
  std::stringstream buf;
  write_cca(buf, m);
  const CcaModel r = read_cca(buf);
  CHECK(r.h_s == m.h_s);
  CHECK(r.h_a == m.h_a);
  CHECK(r.correlations == m.correlations);
  CHECK(r.struct_stats == m.struct_stats);
  CHECK(r.attr_stats == m.attr_stats);
  CHECK(r.ridge_s == m.ridge_s);
  CHECK(r.weighted);
  std::istringstream junk("GMCCAMD\nxx");
  CHECK_THROWS_AS(read_cca(junk), FormatError);
}
