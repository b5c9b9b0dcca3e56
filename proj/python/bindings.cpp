#include <sstream>
#include <thread>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gmatch/api.hpp"
#include "gmatch/bench.hpp"
#include "gmatch/cca.hpp"
#include "gmatch/error.hpp"
#include "gmatch/ged.hpp"
#include "gmatch/match.hpp"
#include "gmatch/session.hpp"
#include "gmatch/skipgram.hpp"
#include "gmatch/wl.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace gmatch;

namespace {

// JSON crosses the boundary as text; the json module does the rest.
py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
  if (o.is_none()) return json::object();
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Graph graph_from_py(const py::handle& o) {
  json j = from_py(o);
  if (!j.contains("id")) j["id"] = kCustomTarget;
  Graph g = graph_from_json(j);
  canonicalize(g);
  return g;
}

EmbeddingIndex index_of(const RowMatrix& x, const std::vector<std::string>& ids) {
  return make_index(Space::Fused, x, ids);
}

py::list hits_to_py(const std::vector<Hit>& hits) {
  py::list out;
  for (const Hit& h : hits) out.append(py::make_tuple(h.graph_id, h.distance));
  return out;
}

// Background HTTP server owned by Python.
struct Server {
  explicit Server(std::string static_dir) : api(std::move(static_dir)) {}
  ~Server() { stop(); }
  int bind(const std::string& host, int port) { return api.bind(host, port); }
  void start() {
    if (!worker.joinable()) worker = std::thread([this] { api.listen(); });
  }
  void stop() {
    api.stop();
    if (worker.joinable()) worker.join();
  }
  ApiServer api;
  std::thread worker;
};

}  // namespace

PYBIND11_MODULE(_gmatch, m) {
  m.doc() = "Graph matching over fused structure and attribute vectors";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::exception<Error>(m, "GmatchError", PyExc_RuntimeError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = error_type.get_stored();
      py::object inst = type(std::string(e.kind()) + ": " + e.what());
      inst.attr("kind") = e.kind();
      PyErr_SetObject(type.ptr(), inst.ptr());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  // ---- corpus ----
  py::class_<Corpus>(m, "Corpus")
      .def_static("from_text",
                  [](const std::string& text) {
                    std::istringstream in(text);
                    return read_corpus(in);
                  })
      .def_static("load", [](const std::string& path) { return load_corpus(path); })
      .def("save", [](const Corpus& c, const std::string& path) { save_corpus(path, c); })
      .def("to_text",
           [](const Corpus& c) {
             std::ostringstream out;
             write_corpus(out, c);
             return out.str();
           })
      .def("__len__", &Corpus::size)
      .def_readonly("name", &Corpus::name)
      .def_property_readonly("graph_ids",
                             [](const Corpus& c) {
                               std::vector<std::string> ids;
                               for (const Graph& g : c.graphs) ids.push_back(g.id);
                               return ids;
                             })
      .def_property_readonly("attribute_names", [](const Corpus& c) { return c.schema.attribute_names(); })
      .def("graph", [](const Corpus& c, const std::string& id) { return to_py(graph_to_json(c.graph(id))); })
      .def("stats", [](const Corpus& c, const std::string& id) { return to_py(to_json(graph_stats(c.graph(id)))); })
      .def("attribute_matrix", [](const Corpus& c) { return attribute_matrix(c); })
      .def("family_labels", [](const Corpus& c) { return family_labels(c); });

  m.def(
      "gen_synthetic",
      [](int per_family, double noise, std::uint64_t seed) { return gen_synthetic(planted_spec(per_family, noise), seed); },
      py::arg("per_family") = 30, py::arg("noise") = 0.1, py::arg("seed") = 1,
      "Planted corpus: path, star and clique families with overlapping attribute centres.");

  // ---- structure ----
  m.def(
      "build_context",
      [](const py::dict& graph, int max_degree) {
        const GraphContext ctx = build_context(graph_from_py(graph), max_degree);
        std::vector<std::pair<int, std::string>> out;
        for (const auto& t : ctx.tokens) out.emplace_back(t.degree, t.token);
        return out;
      },
      py::arg("graph"), py::arg("max_degree") = kDefaultWlDegree, "(degree, token) pairs, node-major.");

  m.def(
      "ged",
      [](const py::dict& a, const py::dict& b, const std::string& mode, int beam_width) {
        GedOptions o{GedMode::Exact, beam_width};
        if (mode == "beam") {
          o.mode = GedMode::Beam;
        } else if (mode != "exact") {
          throw BadParams("mode must be exact or beam");
        }
        return ged(graph_from_py(a), graph_from_py(b), o);
      },
      py::arg("a"), py::arg("b"), py::arg("mode") = "exact", py::arg("beam_width") = kDefaultBeamWidth);

  py::class_<SkipGramModel>(m, "SkipGramModel")
      .def_static(
          "train",
          [](const Corpus& c, int dim, int epochs, double learning_rate, int negatives, std::uint64_t seed,
             int wl_degree, int threads) {
            EmbedConfig cfg;
            cfg.dim = dim;
            cfg.epochs = epochs;
            cfg.learning_rate = learning_rate;
            cfg.negatives = negatives;
            cfg.seed = seed;
            cfg.wl_degree = wl_degree;
            cfg.threads = threads;
            py::gil_scoped_release release;
            return train_graphs(c.graphs, cfg);
          },
          py::arg("corpus"), py::arg("dim") = 128, py::arg("epochs") = 50, py::arg("learning_rate") = 0.025,
          py::arg("negatives") = 5, py::arg("seed") = 1, py::arg("wl_degree") = kDefaultWlDegree,
          py::arg("threads") = 1)
      .def_static("load", [](const std::string& path) { return load_skipgram(path); })
      .def("save", [](const SkipGramModel& s, const std::string& path) { save_skipgram(path, s); })
      .def_readonly("graph_ids", &SkipGramModel::graph_ids)
      .def_readonly("graph_vectors", &SkipGramModel::graph_vectors)
      .def_readonly("epoch_loss", &SkipGramModel::epoch_loss)
      .def_property_readonly("vocabulary_size", [](const SkipGramModel& s) { return s.vocab.size(); })
      .def(
          "embed",
          [](const SkipGramModel& s, const py::dict& graph) {
            return Vector(embed_new_graph(graph_from_py(graph), s, s.config).values);
          },
          "Infer a vector for an unseen graph against the frozen token vectors.");

  // ---- fusion ----
  py::class_<CcaModel>(m, "CcaModel")
      .def_static("load", [](const std::string& path) { return load_cca(path); })
      .def("save", [](const CcaModel& c, const std::string& path) { save_cca(path, c); })
      .def_readonly("h_s", &CcaModel::h_s)
      .def_readonly("h_a", &CcaModel::h_a)
      .def_readonly("correlations", &CcaModel::correlations)
      .def_readonly("ridge_s", &CcaModel::ridge_s)
      .def_readonly("ridge_a", &CcaModel::ridge_a)
      .def_readonly("weighted", &CcaModel::weighted)
      .def_readonly("rank_deficient", &CcaModel::rank_deficient)
      .def_readonly("fitted_struct_scores", &CcaModel::fitted_struct_scores)
      .def_readonly("fitted_attr_scores", &CcaModel::fitted_attr_scores)
      .def("transform", [](const CcaModel& c, const Vector& s, const Vector& a) { return transform(c, s, a); })
      .def("fuse", [](const CcaModel& c, const RowMatrix& s, const RowMatrix& a) { return fuse_corpus(c, s, a); });

  m.def(
      "fit_cca",
      [](const RowMatrix& s, const RowMatrix& a, std::optional<int> pairs, std::optional<double> ridge, bool weighted) {
        return fit_cca(s, a, {pairs, ridge, weighted});
      },
      py::arg("structure"), py::arg("attributes"), py::arg("m") = py::none(), py::arg("ridge") = py::none(),
      py::arg("weighted") = false);

  // ---- matching ----
  m.def(
      "knn",
      [](const RowMatrix& x, const std::vector<std::string>& ids, const std::string& target, int k) {
        return hits_to_py(knn_match(index_of(x, ids), target, k).hits);
      },
      py::arg("matrix"), py::arg("ids"), py::arg("target"), py::arg("k"),
      "k nearest rows to the row named `target`, itself excluded: [(id, distance)].");
  m.def(
      "knn",
      [](const RowMatrix& x, const std::vector<std::string>& ids, const Vector& target, int k) {
        return hits_to_py(knn_match(index_of(x, ids), target, k).hits);
      },
      py::arg("matrix"), py::arg("ids"), py::arg("target"), py::arg("k"));

  m.def(
      "cluster",
      [](const RowMatrix& x, const std::vector<std::string>& ids, const std::string& method, const py::kwargs& kw) {
        const ClusterParams p = cluster_params_from_json(from_py(kw));
        return cluster(index_of(x, ids), parse_cluster_method(method), p).labels;
      },
      py::arg("matrix"), py::arg("ids"), py::arg("method") = "kmeans",
      "Labels per row (-1 = DBSCAN noise). Keywords: k, seed, restarts, maxIterations, eps, minPts.");

  m.def(
      "tsne",
      [](const RowMatrix& x, const std::vector<std::string>& ids, double perplexity, int iterations,
         std::uint64_t seed) {
        TsneParams p;
        p.perplexity = perplexity;
        p.iterations = iterations;
        p.seed = seed;
        const EmbeddingIndex idx = index_of(x, ids);
        Projection proj;
        {
          py::gil_scoped_release release;
          proj = project_tsne(idx, p);
        }
        RowMatrix out(static_cast<Eigen::Index>(proj.points.size()), 2);
        for (std::size_t i = 0; i < proj.points.size(); ++i) out.row(static_cast<Eigen::Index>(i)) << proj.points[i].x, proj.points[i].y;
        return out;
      },
      py::arg("matrix"), py::arg("ids"), py::arg("perplexity") = 30.0, py::arg("iterations") = 1000,
      py::arg("seed") = 1);

  m.def("adjusted_rand_index", &adjusted_rand_index);

  m.def(
      "run_benchmark",
      [](const Corpus& c, const RowMatrix& structure, const py::kwargs& kw) {
        const BenchParams p = bench_params_from_json(from_py(kw));
        BenchReport r;
        {
          py::gil_scoped_release release;
          r = run_benchmark(c, structure, p);
        }
        json j = report_to_json(r);
        j["table"] = format_report_table(r);
        return to_py(j);
      },
      py::arg("corpus"), py::arg("structure"),
      "Keywords as in the HTTP bench request: strategies, kValues, targets, seed, beamWidth.");

  // ---- session: same requests and answers as the HTTP API ----
  py::class_<Session, std::shared_ptr<Session>>(m, "Session")
      .def(py::init([](const Corpus& c) { return std::make_shared<Session>(c); }))
      .def("embed",
           [](Session& s, const py::kwargs& kw) {
             const EmbedConfig cfg = embed_config_from_json(from_py(kw));
             json out;
             {
               py::gil_scoped_release release;
               out = s.run_embed(cfg);
             }
             return to_py(out);
           })
      .def("fuse", [](Session& s, const py::kwargs& kw) { return to_py(s.run_fuse(cca_options_from_json(from_py(kw)))); })
      .def(
          "cluster",
          [](Session& s, const std::string& space, const std::string& method, const py::kwargs& kw) {
            json out = s.run_cluster(parse_space(space), parse_cluster_method(method), cluster_params_from_json(from_py(kw)));
            out["labels"] = to_json(*s.cluster_labels())["labels"];
            return to_py(out);
          },
          py::arg("space") = "fused", py::arg("method") = "kmeans")
      .def(
          "project",
          [](Session& s, const std::string& space, const py::kwargs& kw) {
            const TsneParams p = tsne_params_from_json(from_py(kw));
            json out;
            {
              py::gil_scoped_release release;
              out = s.run_project(parse_space(space), p);
            }
            return to_py(out);
          },
          py::arg("space") = "fused")
      .def("projection",
           [](const Session& s) -> py::object {
             auto p = s.projection();
             return p ? to_py(to_json(*p)) : py::none();
           })
      .def(
          "match",
          [](const Session& s, const py::object& target, const std::string& space, const std::string& method, int k) {
            json req = {{"target", from_py(target)}, {"space", space}, {"method", method}, {"k", k}};
            const MatchResponse r = s.match(match_request_from_json(req, s.corpus().schema));
            json graphs = json::array();
            for (const Graph& g : r.hit_graphs) graphs.push_back({{"graph", graph_to_json(g)}, {"stats", to_json(graph_stats(g))}});
            return to_py({{"result", to_json(r.result)}, {"graphs", graphs}});
          },
          py::arg("target"), py::arg("space") = "fused", py::arg("method") = "knn", py::arg("k") = 5,
          "target: a graph id, or {sketch, attrRanges, filterByRange}.")
      .def("graph_detail", [](const Session& s, const std::string& id) { return to_py(s.graph_detail(id)); })
      .def(
          "parallel_coords",
          [](const Session& s, const std::vector<std::string>& ids, int bins) { return to_py(s.parallel_coords(ids, bins)); },
          py::arg("graph_ids"), py::arg("bins") = 20)
      .def("bench",
           [](Session& s, const py::kwargs& kw) {
             const BenchParams p = bench_params_from_json(from_py(kw));
             BenchReport r;
             {
               py::gil_scoped_release release;
               r = s.bench(p);
             }
             json j = report_to_json(r);
             j["table"] = format_report_table(r);
             return to_py(j);
           })
      .def("status", [](const Session& s) { return to_py(s.status()); })
      .def("index", [](const Session& s, const std::string& space) { return s.index(parse_space(space)).matrix; });

  py::class_<Server>(m, "Server")
      .def(py::init<std::string>(), py::arg("static_dir") = "")
      .def("bind", &Server::bind, py::arg("host") = "127.0.0.1", py::arg("port") = 0, "Returns the bound port.")
      .def("start", &Server::start, "Serve from a background thread.")
      .def("stop", &Server::stop, py::call_guard<py::gil_scoped_release>())
      .def("create_session", [](Server& s, const Corpus& c) { return s.api.create_session(c); });

  m.attr("CUSTOM_TARGET") = kCustomTarget;
}
