#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "lgcn/checkpoint.hpp"
#include "lgcn/dataset_io.hpp"
#include "lgcn/generator.hpp"
#include "lgcn/metrics.hpp"
#include "lgcn/models.hpp"
#include "lgcn/train.hpp"
#include "lgcn/transport.hpp"

namespace py = pybind11;
using namespace lgcn;

namespace {

py::array_t<double> to_numpy(const ad::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

template <typename T>
std::string json_text(const T& value) {
  nlohmann::json j = value;
  return j.dump();
}

// A trained model together with the graph context it was fitted on.
struct Fitted {
  Model model;
  ad::Adam optimizer;
  RunReport report;
  CheckpointInfo info;
};

}  // namespace

PYBIND11_MODULE(_lgcn, m) {
  m.doc() = "Latent-relation graph convolution for multigraph node classification";

  py::class_<Multigraph>(m, "Multigraph")
      .def_property_readonly("kind", [](const Multigraph& g) { return std::string(to_string(g.kind())); })
      .def_property_readonly("num_vertices", &Multigraph::num_vertices)
      .def_property_readonly("num_edges", &Multigraph::num_edges)
      .def_property_readonly("num_features", &Multigraph::num_features)
      .def_property_readonly("num_classes", &Multigraph::num_classes)
      .def_property_readonly("total_transactions",
                             [](const Multigraph& g) { return g.sequences().total_length(); })
      .def_property_readonly("mule_count", [](const Multigraph& g) { return g.info().mule_count; })
      .def_property_readonly("normalized", [](const Multigraph& g) { return g.info().normalized; })
      .def_property_readonly("labels",
                             [](const Multigraph& g) { return std::vector<int>(g.labels().begin(), g.labels().end()); })
      .def_property_readonly("features",
                             [](const Multigraph& g) {
                               const auto& vt = g.vertices();
                               py::array_t<double> out({vt.size(), vt.num_features});
                               std::copy(vt.features.begin(), vt.features.end(), out.mutable_data());
                               return out;
                             })
      .def("edges",
           [](const Multigraph& g) {
             std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
             out.reserve(g.num_edges());
             for (const auto& e : g.edges()) out.emplace_back(e.src, e.dst);
             return out;
           })
      .def("sequence_length", [](const Multigraph& g, std::size_t e) { return g.sequences().length(e); })
      .def("__eq__", [](const Multigraph& a, const Multigraph& b) { return a == b; });

  m.def(
      "generate_financial",
      [](std::size_t n_vertices_init, std::size_t n_edges_target, double fraud_ratio, bool two_hop, std::uint64_t seed,
         double mutation_prob) {
        gen::GenConfig c;
        c.n_vertices_init = n_vertices_init;
        c.n_edges_target = n_edges_target;
        c.fraud_ratio = fraud_ratio;
        c.two_hop = two_hop;
        c.seed = seed;
        c.mutation_prob = mutation_prob;
        py::gil_scoped_release release;
        return gen::generate_financial(c);
      },
      py::arg("n_vertices_init") = 50000, py::arg("n_edges_target") = 125000, py::arg("fraud_ratio") = 0.1,
      py::arg("two_hop") = false, py::arg("seed") = 0, py::arg("mutation_prob") = 1.0 / 3.0,
      "Raw synthetic transaction multigraph.");
  m.def(
      "normalize", [](const Multigraph& raw) { return gen::normalize_dataset(raw); }, py::arg("raw"),
      "Model-ready copy: scaled features, log inter-arrival times and amounts.");
  m.def(
      "generate_transport_toy",
      [](std::size_t n_vertices, std::size_t n_edges, bool class_correlated, double noise, std::uint64_t seed) {
        return transport::generate_toy({n_vertices, n_edges, class_correlated, noise, seed});
      },
      py::arg("n_vertices") = 300, py::arg("n_edges") = 1500, py::arg("class_correlated") = true,
      py::arg("noise") = 0.05, py::arg("seed") = 0);
  m.def(
      "aggregate_profile",
      [](const std::vector<double>& weekly) {
        const auto a = transport::aggregate_profile(weekly);
        return std::vector<double>(a.begin(), a.end());
      },
      py::arg("weekly"));
  m.def(
      "save_dataset", [](const Multigraph& g, const std::string& dir) { save_dataset(g, dir); }, py::arg("graph"),
      py::arg("directory"));
  m.def(
      "load_dataset", [](const std::string& dir) { return load_dataset(dir); }, py::arg("directory"));

  m.def(
      "parameter_count",
      [](const std::string& label, const std::string& kind) {
        return Model(ModelSpec::from_name(label, parse_dataset_kind(kind))).num_parameters();
      },
      py::arg("label"), py::arg("kind") = "financial-1hop");

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        std::vector<std::size_t> mask(labels.size());
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = i;
        return auc(scores, labels, mask);
      },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "macro_f1",
      [](const std::vector<int>& predictions, const std::vector<int>& labels, std::size_t classes) {
        std::vector<std::size_t> mask(labels.size());
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = i;
        return macro_f1(predictions, labels, mask, classes);
      },
      py::arg("predictions"), py::arg("labels"), py::arg("classes"));

  py::class_<Fitted>(m, "Fitted")
      .def_property_readonly("report_json", [](const Fitted& f) { return json_text(f.report); })
      .def_property_readonly("num_parameters", [](const Fitted& f) { return f.model.num_parameters(); })
      .def("predict", [](Fitted& f, const Multigraph& g) { return to_numpy(f.model.predict(make_context(g))); })
      .def("edge_embeddings",
           [](Fitted& f, const Multigraph& g) { return to_numpy(f.model.edge_embeddings(make_context(g))); })
      .def(
          "inductive_json",
          [](Fitted& f, const Multigraph& fresh, std::uint64_t seed) {
            return json_text(inductive_eval(f.model, fresh, seed));
          },
          py::arg("fresh"), py::arg("seed") = 0)
      .def(
          "save",
          [](const Fitted& f, const std::string& path) { save_checkpoint(path, f.model, f.optimizer, f.info); },
          py::arg("path"));

  m.def(
      "train",
      [](const std::string& label, const Multigraph& g, std::size_t epochs, double learning_rate, double weight_decay,
         std::uint64_t seed, std::uint64_t split_seed) {
        const ModelSpec spec = ModelSpec::from_name(label, g.kind());
        TrainConfig cfg = TrainConfig::for_kind(g.kind());
        cfg.epochs = epochs;
        if (learning_rate >= 0.0) cfg.learning_rate = learning_rate;
        if (weight_decay >= 0.0) cfg.weight_decay = weight_decay;
        cfg.init_seed = seed;
        const SplitRatios ratios = is_financial(g.kind()) ? SplitRatios{} : SplitRatios{0.6, 0.2, 0.2};
        py::gil_scoped_release release;
        const GraphContext ctx = make_context(g);
        const SplitMask splits = make_splits(g.num_vertices(), ratios, split_seed);
        TrainResult r = train(spec, g, ctx, splits, cfg);
        return Fitted{std::move(r.model), std::move(r.optimizer), std::move(r.report), {g.kind(), cfg, split_seed, ratios}};
      },
      py::arg("label"), py::arg("graph"), py::arg("epochs") = 2000, py::arg("learning_rate") = -1.0,
      py::arg("weight_decay") = -1.0, py::arg("seed") = 0, py::arg("split_seed") = 0,
      "Full-batch training; negative rates select the dataset defaults.");

  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
}
