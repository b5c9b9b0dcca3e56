#include "gmatch/skipgram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "binary_io.hpp"
#include "gmatch/error.hpp"

namespace gmatch {

namespace {

constexpr char kMagic[] = "GMSKIPG\n";
constexpr std::uint32_t kVersion = 1;

// -log(sigmoid(x)), stable for large |x|.
double neg_log_sigmoid(double x) {
  return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

class NoiseSampler {
 public:
  explicit NoiseSampler(const std::vector<double>& probs) : cdf_(probs.size()) {
    std::partial_sum(probs.begin(), probs.end(), cdf_.begin());
    if (!cdf_.empty()) cdf_.back() = 1.0;
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

struct Pair {
  std::uint32_t graph;
  std::uint32_t token;
};

// One negative-sampling step. The graph vector update is accumulated and
// applied after all samples; token vectors are updated in place unless
// frozen. Returns the surrogate loss of this pair.
double sgd_step(double* graph_vec, RowMatrix& tokens, std::size_t positive, const NoiseSampler& noise,
                int negatives, double lr, bool freeze_tokens, Rng& rng, std::vector<double>& grad) {
  const Eigen::Index dim = tokens.cols();
  Eigen::Map<Eigen::VectorXd> gv(graph_vec, dim);
  Eigen::Map<Eigen::VectorXd> acc(grad.data(), dim);
  acc.setZero();
  double loss = 0.0;
  for (int s = 0; s <= negatives; ++s) {
    std::size_t target = positive;
    double label = 1.0;
    if (s > 0) {
      target = noise.draw(rng);
      if (target == positive) continue;
      label = 0.0;
    }
    auto tv = tokens.row(static_cast<Eigen::Index>(target));
    const double f = gv.dot(tv.transpose());
    loss += label > 0 ? neg_log_sigmoid(f) : neg_log_sigmoid(-f);
    const double g = (label - sigmoid(f)) * lr;
    acc.noalias() += g * tv.transpose();
    if (!freeze_tokens) tv.noalias() += g * gv.transpose();
  }
  gv += acc;
  return loss;
}

std::vector<double> noise_distribution(const Vocabulary& vocab, double power) {
  std::vector<double> p(vocab.size());
  double total = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    p[i] = std::pow(static_cast<double>(vocab.frequency(i)), power);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

// Surrogate loss of the current model over every training pair, each with
// the same negatives at every call (drawn from a fixed stream). Unlike the
// running loss collected during an epoch this is free of sampling noise,
// so consecutive epochs are comparable.
double evaluate_loss(const RowMatrix& graphs, const RowMatrix& tokens, const std::vector<Pair>& pairs,
                     const NoiseSampler& noise, int negatives, std::uint64_t seed) {
  Rng rng(seed);
  double total = 0.0;
  for (const Pair& p : pairs) {
    const auto gv = graphs.row(p.graph);
    total += neg_log_sigmoid(gv.dot(tokens.row(p.token)));
    for (int s = 0; s < negatives; ++s) {
      const std::size_t w = noise.draw(rng);
      if (w == p.token) continue;
      total += neg_log_sigmoid(-gv.dot(tokens.row(static_cast<Eigen::Index>(w))));
    }
  }
  return total / static_cast<double>(pairs.size());
}

void init_graph_vector(double* v, int dim, Rng& rng) {
  const double half = 0.5 / dim;
  for (int k = 0; k < dim; ++k) v[k] = rng.uniform(-half, half);
}

}  // namespace

void EmbedConfig::validate() const {
  if (dim < 2) throw BadParams("embedding dimension must be >= 2");
  if (epochs < 1) throw BadParams("epochs must be positive");
  if (!(learning_rate > 0)) throw BadParams("learning rate must be positive");
  if (min_learning_rate < 0 || min_learning_rate > learning_rate) {
    throw BadParams("min learning rate must lie in [0, learning rate]");
  }
  if (negatives < 1) throw BadParams("negatives must be >= 1");
  if (wl_degree < 0) throw BadParams("WL degree must be non-negative");
  if (threads < 1) throw BadParams("threads must be >= 1");
}

SkipGramModel train(std::span<const GraphContext> contexts, const Vocabulary& vocab, const EmbedConfig& cfg) {
  cfg.validate();
  if (contexts.empty()) throw EmptyCorpus("no graph contexts to train on");

  SkipGramModel model;
  model.config = cfg;
  model.vocab = vocab;
  model.degenerate_vocabulary = vocab.size() <= 1;
  model.noise_distribution = noise_distribution(vocab, cfg.noise_power);

  const auto m = static_cast<Eigen::Index>(contexts.size());
  const auto v = static_cast<Eigen::Index>(vocab.size());
  model.graph_vectors.resize(m, cfg.dim);
  model.token_vectors = RowMatrix::Zero(v, cfg.dim);

  Rng rng(cfg.seed);
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    model.graph_ids.push_back(contexts[i].graph_id);
    init_graph_vector(model.graph_vectors.row(static_cast<Eigen::Index>(i)).data(), cfg.dim, rng);
    for (const auto& t : contexts[i].tokens) {
      const auto idx = vocab.find(t.token);
      if (!idx) throw BadParams("token of graph '" + contexts[i].graph_id + "' missing from vocabulary");
      pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(*idx)});
    }
  }
  if (pairs.empty()) throw EmptyCorpus("graph contexts contain no tokens");

  const NoiseSampler noise(model.noise_distribution);
  const std::vector<Pair> eval_pairs = pairs;
  const std::uint64_t eval_seed = derive_seed(cfg.seed, 0x6c6f7373);
  const double total_steps = static_cast<double>(pairs.size()) * cfg.epochs;
  auto rate_at = [&](double step) {
    return std::max(cfg.min_learning_rate,
                    cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) * step / total_steps);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(pairs);
    const double base = static_cast<double>(epoch) * pairs.size();
    if (cfg.threads == 1) {
      std::vector<double> grad(cfg.dim);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        sgd_step(model.graph_vectors.row(pairs[p].graph).data(), model.token_vectors,
                               pairs[p].token, noise, cfg.negatives, rate_at(base + p), false, rng, grad);
      }
    } else {
      // Hogwild: racy row updates are accepted in this mode.
      std::vector<std::thread> workers;
      const std::size_t chunk = (pairs.size() + cfg.threads - 1) / cfg.threads;
      for (int t = 0; t < cfg.threads; ++t) {
        workers.emplace_back([&, t] {
          Rng local(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) * 1024 + t));
          std::vector<double> grad(cfg.dim);
          const std::size_t lo = t * chunk, hi = std::min(pairs.size(), lo + chunk);
          for (std::size_t p = lo; p < hi; ++p) {
            sgd_step(model.graph_vectors.row(pairs[p].graph).data(), model.token_vectors,
                                   pairs[p].token, noise, cfg.negatives, rate_at(base + p), false, local, grad);
          }
        });
      }
      for (auto& w : workers) w.join();
    }
    model.epoch_loss.push_back(
        evaluate_loss(model.graph_vectors, model.token_vectors, eval_pairs, noise, cfg.negatives, eval_seed));
  }
  return model;
}

SkipGramModel train_graphs(std::span<const Graph> graphs, const EmbedConfig& cfg) {
  cfg.validate();
  const auto contexts = build_contexts(graphs, cfg.wl_degree);
  const Vocabulary vocab = build_vocabulary(contexts);
  return train(contexts, vocab, cfg);
}

StructureVector embed_context(const GraphContext& ctx, const SkipGramModel& model, const EmbedConfig& cfg) {
  cfg.validate();
  if (cfg.dim != static_cast<int>(model.dim())) {
    throw DimensionMismatch("config dimension " + std::to_string(cfg.dim) + " differs from model dimension " +
                            std::to_string(model.dim()));
  }
  std::vector<std::size_t> known;
  for (const auto& t : ctx.tokens) {
    if (auto idx = model.vocab.find(t.token)) known.push_back(*idx);
  }
  if (known.empty()) {
    throw NoKnownTokens("graph '" + ctx.graph_id + "' shares no rooted subgraph with the corpus");
  }
  // Equal context multisets must yield equal example streams.
  std::sort(known.begin(), known.end());

  // Token vectors stay frozen; copy so the shared model is never written.
  RowMatrix tokens = model.token_vectors;
  const NoiseSampler noise(model.noise_distribution);
  Rng rng(cfg.seed);
  Vector vec(cfg.dim);
  init_graph_vector(vec.data(), cfg.dim, rng);
  std::vector<double> grad(cfg.dim);

  const double total_steps = static_cast<double>(known.size()) * cfg.epochs;
  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(known);
    for (std::size_t idx : known) {
      const double lr = std::max(cfg.min_learning_rate, cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) *
                                                                                static_cast<double>(step++) / total_steps);
      sgd_step(vec.data(), tokens, idx, noise, cfg.negatives, lr, true, rng, grad);
    }
  }
  return {ctx.graph_id, vec};
}

StructureVector embed_new_graph(const Graph& g, const SkipGramModel& model, const EmbedConfig& cfg) {
  return embed_context(build_context(g, model.config.wl_degree), model, cfg);
}

// ---- persistence --------------------------------------------------------

void write_skipgram(std::ostream& out, const SkipGramModel& m) {
  out.write(kMagic, sizeof kMagic - 1);
  binio::put<std::uint32_t>(out, kVersion);
  binio::put<std::uint64_t>(out, m.graph_ids.size());
  binio::put<std::uint64_t>(out, m.vocab.size());
  binio::put<std::uint64_t>(out, m.dim());
  binio::put<std::uint64_t>(out, m.config.seed);
  binio::put<std::int32_t>(out, m.config.epochs);
  binio::put<double>(out, m.config.learning_rate);
  binio::put<double>(out, m.config.min_learning_rate);
  binio::put<std::int32_t>(out, m.config.negatives);
  binio::put<std::int32_t>(out, m.config.wl_degree);
  binio::put<double>(out, m.config.noise_power);
  binio::put<std::int32_t>(out, m.config.threads);
  binio::put<std::uint8_t>(out, m.degenerate_vocabulary ? 1 : 0);
  for (const auto& id : m.graph_ids) binio::put_string(out, id);
  for (std::size_t i = 0; i < m.vocab.size(); ++i) {
    binio::put_string(out, m.vocab.token(i));
    binio::put<std::uint64_t>(out, m.vocab.frequency(i));
  }
  binio::put_vector(out, m.noise_distribution);
  binio::put_vector(out, m.epoch_loss);
  binio::put_matrix(out, m.graph_vectors);
  binio::put_matrix(out, m.token_vectors);
}

SkipGramModel read_skipgram(std::istream& in) {
  binio::expect_magic(in, std::string(kMagic, sizeof kMagic - 1));
  const auto version = binio::get<std::uint32_t>(in);
  if (version != kVersion) throw FormatError("unsupported skip-gram model version " + std::to_string(version));
  SkipGramModel m;
  const auto n_graphs = binio::get<std::uint64_t>(in);
  const auto n_tokens = binio::get<std::uint64_t>(in);
  const auto dim = binio::get<std::uint64_t>(in);
  m.config.dim = static_cast<int>(dim);
  m.config.seed = binio::get<std::uint64_t>(in);
  m.config.epochs = binio::get<std::int32_t>(in);
  m.config.learning_rate = binio::get<double>(in);
  m.config.min_learning_rate = binio::get<double>(in);
  m.config.negatives = binio::get<std::int32_t>(in);
  m.config.wl_degree = binio::get<std::int32_t>(in);
  m.config.noise_power = binio::get<double>(in);
  m.config.threads = binio::get<std::int32_t>(in);
  m.degenerate_vocabulary = binio::get<std::uint8_t>(in) != 0;
  for (std::uint64_t i = 0; i < n_graphs; ++i) m.graph_ids.push_back(binio::get_string(in));
  for (std::uint64_t i = 0; i < n_tokens; ++i) {
    auto tok = binio::get_string(in);
    m.vocab.add(tok, binio::get<std::uint64_t>(in));
  }
  if (m.vocab.size() != n_tokens) throw FormatError("duplicate tokens in model vocabulary");
  m.noise_distribution = binio::get_vector(in, n_tokens);
  const auto n_loss = binio::get<std::uint64_t>(in);
  if (n_loss > (1ULL << 24)) throw FormatError("implausible epoch count in model file");
  for (std::uint64_t i = 0; i < n_loss; ++i) m.epoch_loss.push_back(binio::get<double>(in));
  m.graph_vectors = binio::get_matrix(in, n_graphs, dim);
  m.token_vectors = binio::get_matrix(in, n_tokens, dim);
  m.config.validate();
  return m;
}

void save_skipgram(const std::string& path, const SkipGramModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model file '" + path + "'");
  write_skipgram(out, m);
}

SkipGramModel load_skipgram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file '" + path + "'");
  return read_skipgram(in);
}

}  // namespace gmatch
