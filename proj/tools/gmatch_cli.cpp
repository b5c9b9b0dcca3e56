// gmatch: headless pipeline driver and HTTP server.
//
//   gmatch gen     --per-family 30 --noise 0.1 --seed 1 -o corpus.jsonl
//   gmatch ingest  corpus.jsonl
//   gmatch embed   corpus.jsonl --dim 16 --epochs 50 --seed 1 -o structure.bin
//   gmatch fuse    corpus.jsonl --embedding structure.bin --m 2 -o cca.bin
//   gmatch project corpus.jsonl --embedding .. --cca .. --perplexity 10 -o projection.json
//   gmatch cluster corpus.jsonl --embedding .. --cca .. --method kmeans --k 3
//   gmatch match   corpus.jsonl --embedding .. --cca .. --target f0-000 --k 5
//   gmatch bench   corpus.jsonl --embedding .. --k 5,10,15 --targets 20 -o report.json
//   gmatch serve   --port 8080 [--corpus corpus.jsonl] [--static dir]

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gmatch/api.hpp"
#include "gmatch/bench.hpp"
#include "gmatch/error.hpp"
#include "gmatch/session.hpp"

using namespace gmatch;
using nlohmann::json;

namespace {

struct PipelineFiles {
  std::string corpus;
  std::string embedding;
  std::string cca;
};

void add_corpus(CLI::App* cmd, PipelineFiles& f) {
  cmd->add_option("corpus", f.corpus, "corpus file (line-delimited JSON)")->required()->envname("GMATCH_CORPUS");
}

void add_models(CLI::App* cmd, PipelineFiles& f, bool need_cca) {
  cmd->add_option("--embedding", f.embedding, "structure embedding model file")->envname("GMATCH_EMBEDDING");
  auto* c = cmd->add_option("--cca", f.cca, "CCA model file")->envname("GMATCH_CCA");
  if (need_cca) c->required();
}

// Corpus plus whatever model files were given, installed into a Session.
std::unique_ptr<Session> open_session(const PipelineFiles& f) {
  auto s = std::make_unique<Session>(load_corpus(f.corpus));
  if (!f.embedding.empty()) s->adopt_embedding(load_skipgram(f.embedding));
  if (!f.cca.empty()) s->adopt_cca(load_cca(f.cca));
  return s;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw BadParams("not an integer list: " + s);
    }
  }
  return out;
}

ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribute-structure graph matching"};
  app.require_subcommand(1);

  // gen
  int per_family = 30;
  double noise = 0.1;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "write the planted synthetic corpus");
  gen->add_option("--per-family", per_family)->check(CLI::PositiveNumber);
  gen->add_option("--noise", noise)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", gen_seed)->envname("GMATCH_SEED");
  gen->add_option("-o,--out", gen_out);

  // ingest
  PipelineFiles ingest_files;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "validate a corpus and summarize it");
  add_corpus(ingest, ingest_files);
  ingest->add_option("-o,--out", ingest_out, "write the canonicalized corpus");

  // embed
  PipelineFiles embed_files;
  EmbedConfig embed_cfg;
  std::string embed_out;
  auto* embed = app.add_subcommand("embed", "train structure embeddings");
  add_corpus(embed, embed_files);
  embed->add_option("--dim", embed_cfg.dim);
  embed->add_option("--epochs", embed_cfg.epochs);
  embed->add_option("--lr", embed_cfg.learning_rate);
  embed->add_option("--negatives", embed_cfg.negatives);
  embed->add_option("--wl-degree", embed_cfg.wl_degree);
  embed->add_option("--threads", embed_cfg.threads);
  embed->add_option("--seed", embed_cfg.seed)->envname("GMATCH_SEED");
  embed->add_option("-o,--out", embed_out)->required();

  // fuse
  PipelineFiles fuse_files;
  std::optional<int> fuse_m;
  std::optional<double> fuse_ridge;
  bool fuse_weighted = false;
  std::string fuse_out;
  auto* fuse = app.add_subcommand("fuse", "fit CCA between structure and attribute views");
  add_corpus(fuse, fuse_files);
  fuse->add_option("--embedding", fuse_files.embedding)->required()->envname("GMATCH_EMBEDDING");
  fuse->add_option("--m", fuse_m);
  fuse->add_option("--ridge", fuse_ridge);
  fuse->add_flag("--weighted", fuse_weighted);
  fuse->add_option("-o,--out", fuse_out)->required();

  // project
  PipelineFiles project_files;
  TsneParams tsne;
  std::string project_space = "fused", project_out;
  auto* project = app.add_subcommand("project", "t-SNE projection of one space");
  add_corpus(project, project_files);
  add_models(project, project_files, false);
  project->add_option("--space", project_space);
  project->add_option("--perplexity", tsne.perplexity);
  project->add_option("--iterations", tsne.iterations);
  project->add_option("--seed", tsne.seed)->envname("GMATCH_SEED");
  project->add_option("-o,--out", project_out);

  // cluster
  PipelineFiles cluster_files;
  ClusterParams cparams;
  std::string cluster_space = "fused", cluster_method = "kmeans", cluster_out;
  auto* clus = app.add_subcommand("cluster", "cluster one space");
  add_corpus(clus, cluster_files);
  add_models(clus, cluster_files, false);
  clus->add_option("--space", cluster_space);
  clus->add_option("--method", cluster_method);
  clus->add_option("--eps", cparams.eps);
  clus->add_option("--minpts", cparams.min_pts);
  clus->add_option("--k", cparams.k);
  clus->add_option("--restarts", cparams.restarts, "k-means++ starts, best objective kept");
  clus->add_option("--seed", cparams.seed)->envname("GMATCH_SEED");
  clus->add_option("-o,--out", cluster_out);

  // match
  PipelineFiles match_files;
  std::string match_space = "fused", match_method = "knn", match_target, match_target_file, match_out;
  int match_k = 5;
  ClusterParams match_cparams;
  auto* match = app.add_subcommand("match", "retrieve graphs similar to a target");
  add_corpus(match, match_files);
  add_models(match, match_files, false);
  match->add_option("--space", match_space);
  match->add_option("--method", match_method);
  match->add_option("--k", match_k);
  auto* tgt = match->add_option("--target", match_target, "corpus graph id");
  match->add_option("--target-file", match_target_file, "custom target JSON {sketch, attrRanges, filterByRange}")
      ->excludes(tgt);
  match->add_option("--cluster-k", match_cparams.k, "k-means clusters for --method cluster");
  match->add_option("--cluster-seed", match_cparams.seed)->envname("GMATCH_SEED");
  match->add_option("-o,--out", match_out);

  // bench
  PipelineFiles bench_files;
  BenchParams bparams;
  std::string bench_strategies = "Str,Attr,CCA,DC,IDC", bench_k = "5,10,15", bench_out;
  EmbedConfig bench_embed;
  bench_embed.dim = 16;
  std::optional<int> bench_m;
  auto* bench = app.add_subcommand("bench", "strategy comparison by GED and attribute distance");
  add_corpus(bench, bench_files);
  bench->add_option("--embedding", bench_files.embedding, "trained model; trains one when absent")
      ->envname("GMATCH_EMBEDDING");
  bench->add_option("--strategies", bench_strategies);
  bench->add_option("--k", bench_k);
  bench->add_option("--targets", bparams.n_targets);
  bench->add_option("--seed", bparams.seed)->envname("GMATCH_SEED");
  bench->add_option("--beam-width", bparams.beam_width);
  bench->add_option("--m", bench_m);
  bench->add_option("--dim", bench_embed.dim);
  bench->add_option("--epochs", bench_embed.epochs);
  bench->add_option("--embed-seed", bench_embed.seed);
  bench->add_flag("--standardized-attr", bparams.standardized_attr_distance);
  bench->add_option("-o,--out", bench_out, "JSON report path");

  // serve
  std::string host = "127.0.0.1", static_dir, serve_corpus;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--host", host)->envname("GMATCH_HOST");
  serve->add_option("--port", port)->envname("GMATCH_PORT");
  serve->add_option("--static", static_dir, "directory served at /")->envname("GMATCH_STATIC");
  serve->add_option("--corpus", serve_corpus, "preload a session from this corpus");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      SyntheticSpec spec = planted_spec(per_family, noise);
      std::ostringstream out;
      write_corpus(out, gen_synthetic(spec, gen_seed));
      emit(gen_out, out.str());
    } else if (*ingest) {
      Corpus c = load_corpus(ingest_files.corpus);
      if (!ingest_out.empty()) save_corpus(ingest_out, c);
      std::size_t nodes = 0, edges = 0;
      for (const Graph& g : c.graphs) {
        nodes += g.nodes.size();
        edges += g.edges.size();
      }
      json summary = {{"dataset", c.name}, {"graphs", c.size()}, {"nodes", nodes}, {"edges", edges},
                      {"attributes", c.schema.attribute_names()}};
      std::cout << summary.dump() << "\n";
    } else if (*embed) {
      embed_cfg.validate();
      Corpus c = load_corpus(embed_files.corpus);
      SkipGramModel m = train_graphs(c.graphs, embed_cfg);
      save_skipgram(embed_out, m);
      std::cout << json{{"graphs", m.graph_ids.size()}, {"vocabulary", m.vocab.size()}, {"dim", m.dim()},
                        {"finalLoss", m.epoch_loss.empty() ? 0.0 : m.epoch_loss.back()}}.dump()
                << "\n";
    } else if (*fuse) {
      auto s = open_session(fuse_files);
      json summary = s->run_fuse({fuse_m, fuse_ridge, fuse_weighted});
      save_cca(fuse_out, *s->cca_model());
      std::cout << summary.dump() << "\n";
    } else if (*project) {
      auto s = open_session(project_files);
      s->run_project(parse_space(project_space), tsne);
      emit(project_out, to_json(*s->projection()).dump() + "\n");
    } else if (*clus) {
      auto s = open_session(cluster_files);
      s->run_cluster(parse_space(cluster_space), parse_cluster_method(cluster_method), cparams);
      emit(cluster_out, to_json(*s->cluster_labels()).dump() + "\n");
    } else if (*match) {
      auto s = open_session(match_files);
      MatchRequest req;
      req.space = parse_space(match_space);
      req.method = parse_match_method(match_method);
      req.k = match_k;
      if (!match_target_file.empty()) {
        std::ifstream in(match_target_file);
        if (!in) throw NotFound("cannot open " + match_target_file);
        json j;
        try {
          j = json::parse(in);
        } catch (const json::parse_error& e) {
          throw ParseError(e.what());
        }
        req.target = custom_target_from_json(j, s->corpus().schema);
      } else if (!match_target.empty()) {
        req.target = match_target;
      } else {
        throw BadParams("match needs --target or --target-file");
      }
      if (req.method == MatchMethod::Cluster) s->run_cluster(req.space, ClusterMethod::Kmeans, match_cparams);
      const MatchResponse r = s->match(req);
      std::string text;
      for (const Hit& h : r.result.hits) text += nlohmann::ordered_json{{"graphId", h.graph_id}, {"distance", h.distance}}.dump() + "\n";
      emit(match_out, text);
    } else if (*bench) {
      bparams.strategies.clear();
      std::stringstream ss(bench_strategies);
      for (std::string item; std::getline(ss, item, ',');) bparams.strategies.push_back(parse_strategy(item));
      bparams.k_values = parse_int_list(bench_k);
      bparams.strategy.cca.pairs = bench_m;
      Session s(load_corpus(bench_files.corpus));
      if (!bench_files.embedding.empty()) {
        s.adopt_embedding(load_skipgram(bench_files.embedding));
      } else {
        s.run_embed(bench_embed);
      }
      const BenchReport r = s.bench(bparams);
      if (!bench_out.empty()) emit(bench_out, report_to_json(r).dump(2) + "\n");
      std::cout << format_report_table(r);
    } else if (*serve) {
      ApiServer server(static_dir);
      if (!serve_corpus.empty()) {
        std::cerr << "session " << server.create_session(load_corpus(serve_corpus)) << " preloaded\n";
      }
      const int bound = server.bind(host, port);
      std::cerr << "listening on http://" << host << ":" << bound << "/api/v1\n";
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}
