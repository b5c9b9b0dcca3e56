#include <doctest.h>

#include <cmath>

#include "gmatch/attributes.hpp"
#include "gmatch/bench.hpp"
#include "gmatch/error.hpp"
#include "oracles.hpp"

using namespace gmatch;

namespace {

Graph people(std::vector<double> ages) {
  Graph g;
  g.id = "fam";
  for (std::size_t i = 0; i < ages.size(); ++i) g.nodes.push_back({"p" + std::to_string(i), "x", {{"age", ages[i]}}});
  return g;
}

AttributeSchema age_schema(Aggregator agg) { return {{}, {{"age", agg, false}}, {}}; }

}  // namespace

TEST_CASE("micro aggregators") {
  const Graph g = people({20, 40});
  CHECK(extract_attributes(g, age_schema(Aggregator::Mean)).values[0] == 30);
  CHECK(extract_attributes(g, age_schema(Aggregator::Sum)).values[0] == 60);
  CHECK(extract_attributes(g, age_schema(Aggregator::Min)).values[0] == 20);
  CHECK(extract_attributes(g, age_schema(Aggregator::Max)).values[0] == 40);
  CHECK(extract_attributes(g, age_schema(Aggregator::Count)).values[0] == 2);
}

TEST_CASE("macro attribute is read from the graph record") {
  Graph g = people({1});
  const double first_birth = 1800, last_death = 1900;
  g.macro_attrs["TS"] = last_death - first_birth;
  const AttributeSchema s{{{"TS", "timespan of the family", false}}, {{"age", Aggregator::Mean, false}}, {}};
  const AttributeVector v = extract_attributes(g, s);
  CHECK(v.values.size() == 2);
  CHECK(v.values[0] == 100);  // macro first
  CHECK(v.values[1] == 1);
}

TEST_CASE("missing and empty inputs") {
  Graph g = people({20, 40});
  g.nodes[1].attrs.clear();
  CHECK_THROWS_AS(extract_attributes(g, age_schema(Aggregator::Mean)), MissingAttribute);
  // count tolerates missing node values
  CHECK(extract_attributes(g, age_schema(Aggregator::Count)).values[0] == 1);

  const Graph empty = people({});
  CHECK_THROWS_AS(extract_attributes(empty, age_schema(Aggregator::Mean)), EmptyGraph);
  CHECK_THROWS_AS(extract_attributes(empty, age_schema(Aggregator::Max)), EmptyGraph);
  CHECK(extract_attributes(empty, age_schema(Aggregator::Sum)).values[0] == 0);

  const AttributeSchema macro{{{"TS", "", false}}, {}, {}};
  CHECK_THROWS_AS(extract_attributes(people({1}), macro), MissingAttribute);
}

TEST_CASE("synthetic corpus vectors match a naive recomputation") {
  const Corpus c = gen_synthetic(planted_spec(5, 0.1), 4);
  REQUIRE(c.size() == 15);
  const RowMatrix x = attribute_matrix(c);
  const auto names = c.schema.attribute_names();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Graph& g = c.graphs[i];
    std::size_t col = 0;
    for (const auto& m : c.schema.macro) CHECK(x(i, col++) == g.macro_attrs.at(m.name));
    for (const auto& m : c.schema.micro) {
      double total = 0;
      for (const auto& n : g.nodes) total += n.attrs.at(m.name);
      CHECK(x(i, col++) == doctest::Approx(total / g.nodes.size()).epsilon(1e-12));
    }
  }
}

TEST_CASE("extraction ignores node order") {
  Rng rng(8);
  const Corpus c = gen_synthetic(planted_spec(3, 0.1), 4);
  for (const Graph& g : c.graphs) {
    Graph h = g;
    rng.shuffle(h.nodes);
    CHECK((extract_attributes(h, c.schema).values - extract_attributes(g, c.schema).values).norm() < 1e-12);
  }
}

TEST_CASE("standardize examples") {
  RowMatrix two(2, 1);
  two << 1, 3;
  auto [z, stats] = standardize(two);
  CHECK(z(0, 0) == -1);
  CHECK(z(1, 0) == 1);
  CHECK(stats.means[0] == 2);
  CHECK(stats.stdevs[0] == 1);

  RowMatrix constant(3, 1);
  constant << 5, 5, 5;
  auto [zc, sc] = standardize(constant);
  CHECK(zc.isZero());
  CHECK(sc.stdevs[0] == 1);
}

TEST_CASE("random matrix moments, idempotence and stored stats") {
  Rng rng(21);
  RowMatrix x = oracle::gaussian(rng, 100, 6);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i).array() = x.row(i).array() * 7 + 3;
  auto [z, stats] = standardize(x);
  for (Eigen::Index j = 0; j < 6; ++j) {
    double mean = 0, var = 0;
    for (Eigen::Index i = 0; i < 100; ++i) mean += z(i, j);
    mean /= 100;
    for (Eigen::Index i = 0; i < 100; ++i) var += (z(i, j) - mean) * (z(i, j) - mean);
    var /= 100;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1) < 1e-9);
  }
  auto [zz, _] = standardize(z);
  CHECK((zz - z).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(stats.apply(x) == z);
  CHECK(stats.apply(Vector(x.row(5).transpose())) == Vector(z.row(5).transpose()));
}

TEST_CASE("log transform flag") {
  RowMatrix raw(2, 2);
  raw << 0, 10, std::exp(1.0) - 1, 20;
  const AttributeSchema s{{{"count", "", true}, {"year", "", false}}, {}, {}};
  const RowMatrix t = feature_transform(raw, s);
  CHECK(t(0, 0) == 0);
  CHECK(t(1, 0) == doctest::Approx(1.0));
  CHECK(t(1, 1) == 20);
}

TEST_CASE("named values") {
  const Corpus c = gen_synthetic(planted_spec(2, 0.0), 1);
  const Graph& g = c.graphs[0];
  CHECK(named_value(g, c.schema, "nodeCount") == g.nodes.size());
  CHECK(named_value(g, c.schema, "edgeCount") == g.edges.size());
  CHECK(named_value(g, c.schema, "depth") == graph_stats(g).depth);
  CHECK(named_value(g, c.schema, "span") == g.macro_attrs.at("span"));
  CHECK_THROWS_AS(named_value(g, c.schema, "nope"), UnknownAttribute);
}
