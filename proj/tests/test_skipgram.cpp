#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "gmatch/bench.hpp"
#include "gmatch/error.hpp"
#include "gmatch/skipgram.hpp"
#include "oracles.hpp"

using namespace gmatch;

namespace {

double cosine(const Vector& a, const Vector& b) { return a.dot(b) / (a.norm() * b.norm()); }

EmbedConfig small_cfg(std::uint64_t seed = 1) {
  EmbedConfig c;
  c.dim = 16;
  c.epochs = 40;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  EmbedConfig c;
  CHECK_NOTHROW(c.validate());
  c.dim = 1;
  CHECK_THROWS_AS(c.validate(), BadParams);
  c = {};
  c.negatives = 0;
  CHECK_THROWS_AS(c.validate(), BadParams);
  c = {};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), BadParams);
  CHECK_THROWS_AS(train_graphs(std::vector<Graph>{}, EmbedConfig{}), EmptyCorpus);
}

TEST_CASE("smallest trainable instance: one graph, one token") {
  Graph g;
  g.id = "solo";
  g.nodes = {{"a", "L", {}}};
  EmbedConfig cfg;
  cfg.dim = 4;
  cfg.wl_degree = 0;
  cfg.epochs = 20;
  const SkipGramModel m = train_graphs(std::vector<Graph>{g}, cfg);
  CHECK(m.degenerate_vocabulary);
  CHECK(m.vocab.size() == 1);
  CHECK(m.graph_vectors.allFinite());
  CHECK(m.token_vectors.allFinite());
  REQUIRE(m.epoch_loss.size() == 20);
  for (std::size_t e = 1; e < m.epoch_loss.size(); ++e) CHECK(m.epoch_loss[e] < m.epoch_loss[e - 1]);
}

TEST_CASE("identical graphs embed closer than an unrelated random graph") {
  Rng rng(4);
  Graph a = oracle::random_graph(rng, 8, 0.35, 1, false, "a");
  Graph b = oracle::permuted(a, rng);
  b.id = "b";
  Graph c = oracle::random_graph(rng, 30, 0.2, 1, false, "c");
  const AttributeSchema schema{{{"z", "", false}}, {}, {}};
  for (Graph* g : {&a, &b, &c}) {
    g->macro_attrs["z"] = 0;
    prepare_graph(*g, schema);
  }
  // contexts of a and b are equal multisets
  auto ca = build_context(a, 2).tokens, cb = build_context(b, 2).tokens;
  std::sort(ca.begin(), ca.end());
  std::sort(cb.begin(), cb.end());
  REQUIRE(ca == cb);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SkipGramModel m = train_graphs(std::vector<Graph>{a, b, c}, small_cfg(seed));
    const Vector s1 = m.graph_vectors.row(0), s2 = m.graph_vectors.row(1), s3 = m.graph_vectors.row(2);
    CHECK(cosine(s1, s2) > cosine(s1, s3));
  }
}

TEST_CASE("per-epoch loss is non-increasing within 1%") {
  const Corpus c = gen_synthetic(planted_spec(10, 0.1), 2);
  EmbedConfig cfg = small_cfg();
  cfg.epochs = 50;
  const SkipGramModel m = train_graphs(c.graphs, cfg);
  REQUIRE(m.epoch_loss.size() == 50);
  for (std::size_t e = 1; e < m.epoch_loss.size(); ++e) CHECK(m.epoch_loss[e] <= m.epoch_loss[e - 1] * 1.01);
  CHECK(m.epoch_loss.back() < m.epoch_loss.front());
}

TEST_CASE("single-threaded training is seed deterministic") {
  const Corpus c = gen_synthetic(planted_spec(5, 0.1), 3);
  const SkipGramModel a = train_graphs(c.graphs, small_cfg(7));
  const SkipGramModel b = train_graphs(c.graphs, small_cfg(7));
  CHECK(a.graph_vectors == b.graph_vectors);
  CHECK(a.token_vectors == b.token_vectors);
  CHECK(a.epoch_loss == b.epoch_loss);
  const SkipGramModel d = train_graphs(c.graphs, small_cfg(8));
  CHECK(a.graph_vectors != d.graph_vectors);
}

TEST_CASE("hogwild training still yields finite vectors") {
  const Corpus c = gen_synthetic(planted_spec(5, 0.1), 3);
  EmbedConfig cfg = small_cfg();
  cfg.threads = 3;
  const SkipGramModel m = train_graphs(c.graphs, cfg);
  CHECK(m.graph_vectors.allFinite());
  CHECK(m.graph_vectors.rows() == 15);
}

TEST_CASE("noise distribution is unigram to the 3/4") {
  const Corpus c = gen_synthetic(planted_spec(4, 0.1), 5);
  const SkipGramModel m = train_graphs(c.graphs, small_cfg());
  double z = 0;
  for (std::size_t i = 0; i < m.vocab.size(); ++i) z += std::pow(static_cast<double>(m.vocab.frequency(i)), 0.75);
  for (std::size_t i = 0; i < m.vocab.size(); ++i) {
    CHECK(m.noise_distribution[i] ==
          doctest::Approx(std::pow(static_cast<double>(m.vocab.frequency(i)), 0.75) / z).epsilon(1e-12));
  }
}

TEST_CASE("embed_new_graph") {
  Corpus c = gen_synthetic(planted_spec(10, 0.1), 6);
  const EmbedConfig cfg = small_cfg();
  const SkipGramModel m = train_graphs(c.graphs, cfg);

  SUBCASE("novel labels give NoKnownTokens") {
    Graph g = c.graphs[0];
    for (auto& n : g.nodes) n.label = "never-seen";
    CHECK_THROWS_AS(embed_new_graph(g, m, cfg), NoKnownTokens);
  }

  SUBCASE("a corpus twin lands below the median pairwise distance") {
    std::vector<double> pair;
    for (Eigen::Index i = 0; i < m.graph_vectors.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < m.graph_vectors.rows(); ++j) {
        pair.push_back((m.graph_vectors.row(i) - m.graph_vectors.row(j)).norm());
      }
    }
    std::nth_element(pair.begin(), pair.begin() + pair.size() / 2, pair.end());
    const double median = pair[pair.size() / 2];
    for (std::size_t k : {0, 11, 25}) {
      Graph twin = c.graphs[k];
      twin.id = "twin";
      const StructureVector v = embed_new_graph(twin, m, cfg);
      CHECK(v.values.size() == 16);
      CHECK((v.values - m.graph_vectors.row(k).transpose()).norm() < median);
    }
  }

  SUBCASE("equal contexts infer equal vectors") {
    Rng rng(1);
    Graph a = c.graphs[3];
    Graph b = oracle::permuted(a, rng);
    const StructureVector va = embed_new_graph(a, m, cfg), vb = embed_new_graph(b, m, cfg);
    CHECK(va.values == vb.values);
  }

  SUBCASE("token vectors stay frozen") {
    const RowMatrix before = m.token_vectors;
    embed_new_graph(c.graphs[1], m, cfg);
    CHECK(m.token_vectors == before);
  }
}

TEST_CASE("model file round-trip and validation") {
  const Corpus c = gen_synthetic(planted_spec(3, 0.1), 2);
  const SkipGramModel m = train_graphs(c.graphs, small_cfg());
  std::stringstream buf;
  write_skipgram(buf, m);
  const std::string bytes = buf.str();
  std::istringstream in(bytes);
  const SkipGramModel r = read_skipgram(in);
  CHECK(r.graph_ids == m.graph_ids);
  CHECK(r.graph_vectors == m.graph_vectors);
  CHECK(r.token_vectors == m.token_vectors);
  CHECK(r.vocab == m.vocab);
  CHECK(r.noise_distribution == m.noise_distribution);
  CHECK(r.config.dim == m.config.dim);
  CHECK(r.config.seed == m.config.seed);
  CHECK(r.epoch_loss == m.epoch_loss);

  std::istringstream bad_magic("NOTAMODEL" + bytes.substr(9));
  CHECK_THROWS_AS(read_skipgram(bad_magic), FormatError);
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_skipgram(truncated), FormatError);
}
