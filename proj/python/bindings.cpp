#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bmgcn/commands.hpp"
#include "bmgcn/dataset.hpp"
#include "bmgcn/synthgen.hpp"

namespace py = pybind11;
using namespace bmgcn;

namespace {

LabelAssignment to_labels(const std::vector<int>& ids, int num_classes) {
  return LabelAssignment::from_ids(ids, num_classes);
}

std::vector<int> label_ids(const LabelAssignment& y) {
  std::vector<int> ids(y.size());
  for (NodeId v = 0; v < y.size(); ++v) ids[v] = y.known(v) ? y[v] : -1;
  return ids;
}

Mask to_mask(const std::vector<bool>& m) { return Mask(m.begin(), m.end()); }
std::vector<bool> from_mask(const Mask& m) { return std::vector<bool>(m.begin(), m.end()); }

py::dict history_dict(const History& h) {
  py::dict d;
  std::vector<double> loss_mlp, loss_gcn, loss_final, train, val, test;
  for (const auto& e : h) {
    loss_mlp.push_back(e.loss_mlp);
    loss_gcn.push_back(e.loss_gcn);
    loss_final.push_back(e.loss_final);
    train.push_back(e.train_acc);
    val.push_back(e.val_acc);
    test.push_back(e.test_acc);
  }
  d["loss_mlp"] = loss_mlp;
  d["loss_gcn"] = loss_gcn;
  d["loss_final"] = loss_final;
  d["train_acc"] = train;
  d["val_acc"] = val;
  d["test_acc"] = test;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Block-guided graph convolution with a built-in reverse-mode engine";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Graph>(m, "Graph")
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def("degrees", &Graph::degrees)
      .def("edge_list", &Graph::edge_list)
      .def("neighbors", [](const Graph& g, NodeId v) {
        if (v < 0 || v >= g.num_nodes()) throw py::index_error("node out of range");
        auto s = g.neighbors(v);
        return std::vector<NodeId>(s.begin(), s.end());
      });

  m.def("load_graph",
        [](const std::vector<std::pair<NodeId, NodeId>>& edges, NodeId n) { return load_graph(edges, n); },
        py::arg("edges"), py::arg("n"), "Symmetrized, deduplicated graph without self-loops.");

  m.def("homophily_ratio",
        [](const Graph& g, const std::vector<int>& labels, int num_classes) {
          return homophily_ratio(g, to_labels(labels, num_classes));
        },
        py::arg("graph"), py::arg("labels"), py::arg("num_classes"),
        "Mean same-class neighbor fraction over non-isolated nodes; -1 marks unlabeled nodes.");

  m.def("one_hot",
        [](const std::vector<int>& labels, int num_classes) { return one_hot(to_labels(labels, num_classes)); },
        py::arg("labels"), py::arg("num_classes"));

  m.def("planted_homophily",
        [](const std::vector<NodeId>& class_sizes, const Matrix& edge_prob) {
          SbmSpec spec;
          spec.class_sizes = class_sizes;
          spec.edge_prob = edge_prob;
          spec.feature_dim = static_cast<int>(class_sizes.size());
          return planted_homophily(spec);
        },
        py::arg("class_sizes"), py::arg("edge_prob"));

  py::class_<NodeData>(m, "Dataset")
      .def_readonly("graph", &NodeData::graph)
      .def_property_readonly("labels", [](const NodeData& d) { return label_ids(d.labels); })
      .def_property_readonly("num_classes", &NodeData::num_classes)
      .def_readonly("features", &NodeData::features);

  m.def("generate_dataset",
        [](NodeId n, int classes, double p_in, double p_out, int dim, double flip_prob, std::uint64_t seed) {
          return generate_dataset({n, classes, p_in, p_out, dim, flip_prob, seed, {}});
        },
        py::arg("n"), py::arg("classes"), py::arg("p_in"), py::arg("p_out"), py::arg("dim") = 64,
        py::arg("flip_prob") = 0.3, py::arg("seed") = 0,
        "Planted-partition SBM graph with binary prototype features.");
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("save_dataset", &save_dataset, py::arg("path"), py::arg("dataset"));

  m.def("block_matrix",
        [](const Matrix& assembled, const Graph& g) { return block_matrix(assembled, g); },
        py::arg("assembled_labels"), py::arg("graph"));
  m.def("similarity_matrix",
        [](const Matrix& h, double alpha) { return similarity_matrix(h, alpha); },
        py::arg("block"), py::arg("alpha") = 1.0);
  m.def("refine_topology",
        [](const Matrix& b, const Matrix& q, const Graph& g, double beta) {
          const RefinedWeights r = refine_topology(b, q, g, beta);
          return r.pattern->to_dense(r.weights);
        },
        py::arg("soft_labels"), py::arg("similarity"), py::arg("graph"), py::arg("beta") = 1.0,
        "Dense n x n view of the softmax-normalized refined adjacency.");

  m.def("stratified_split",
        [](const std::vector<int>& labels, int num_classes, std::uint64_t seed) {
          const SplitMask s = stratified_split(to_labels(labels, num_classes), seed);
          return py::make_tuple(from_mask(s.train), from_mask(s.validation), from_mask(s.test));
        },
        py::arg("labels"), py::arg("num_classes"), py::arg("seed"));

  m.def("evaluate",
        [](const Matrix& logits, const std::vector<int>& labels, int num_classes, const std::vector<bool>& mask) {
          return evaluate(logits, to_labels(labels, num_classes), to_mask(mask));
        },
        py::arg("logits"), py::arg("labels"), py::arg("num_classes"), py::arg("mask"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("layers", &TrainConfig::layers)
      .def_readwrite("hidden", &TrainConfig::hidden)
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("beta", &TrainConfig::beta)
      .def_readwrite("lambda_", &TrainConfig::lambda)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay)
      .def_readwrite("dropout", &TrainConfig::dropout)
      .def_readwrite("pretrain_epochs", &TrainConfig::pretrain_epochs)
      .def_readwrite("joint_epochs", &TrainConfig::joint_epochs)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("stop_gradient", &TrainConfig::stop_gradient)
      .def_readwrite("seed", &TrainConfig::seed);

  m.def("train",
        [](const std::string& model, const NodeData& data, const TrainConfig& config, std::uint64_t split_seed) {
          const SplitMask split = stratified_split(data.labels, split_seed);
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train_model(parse_model_kind(model), data, split, config);
          }
          py::dict out;
          out["test_acc"] = r.test_acc;
          out["history"] = history_dict(r.history);
          if (parse_model_kind(model) == ModelKind::kBmGcn) {
            out["logits"] = bmgcn_logits(r.model, data, split, config);
            out["block_matrix"] = learned_block_matrix(r.model.mlp, data, split, config);
          }
          return out;
        },
        py::arg("model"), py::arg("dataset"), py::arg("config"), py::arg("split_seed") = 0,
        "Train one model ('bmgcn', 'gcn' or 'mlp') on one stratified split.");

  m.def("run_splits",
        [](const std::string& model, const NodeData& data, const TrainConfig& config, int n_splits, int jobs) {
          SplitSummary s;
          {
            py::gil_scoped_release release;
            s = run_splits(parse_model_kind(model), data, config, n_splits, jobs);
          }
          std::vector<double> accs;
          for (const auto& r : s.runs) accs.push_back(r.result.test_acc);
          py::dict out;
          out["mean_acc"] = s.mean_acc;
          out["std_acc"] = s.std_acc;
          out["test_accs"] = accs;
          return out;
        },
        py::arg("model"), py::arg("dataset"), py::arg("config"), py::arg("n_splits") = 10,
        py::arg("jobs") = 1);
}
