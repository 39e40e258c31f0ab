#include "bmgcn/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

#include "bmgcn/rng.hpp"

namespace bmgcn {

void TrainConfig::validate() const {
  if (layers < 1) throw ConfigError("layers must be at least 1");
  if (hidden < 1) throw ConfigError("hidden must be at least 1");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (pretrain_epochs < 0 || joint_epochs < 0) throw ConfigError("epoch counts must be non-negative");
  if (patience < 0) throw ConfigError("patience must be non-negative");
}

void NodeData::validate() const {
  const NodeId n = graph.num_nodes();
  if (labels.size() != n) throw DataError("label count does not match node count");
  if (features.rows() != n) throw DataError("feature row count does not match node count");
  if (features.cols() < 1) throw DataError("features need at least one column");
  if (!features.allFinite()) throw DataError("features contain non-finite values");
  labels.validate();
}

Matrix glorot(std::int64_t in, std::int64_t out, std::uint64_t seed) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  Rng rng(seed);
  Matrix w(in, out);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = bound * (2.0 * rng.uniform() - 1.0);
  return w;
}

MlpParams MlpParams::init(int in, int hidden, int classes, std::uint64_t seed) {
  return {glorot(in, hidden, mix_seed(seed, 1)), Matrix::Zero(1, hidden),
          glorot(hidden, classes, mix_seed(seed, 2)), Matrix::Zero(1, classes)};
}

GcnParams GcnParams::init(int in, int hidden, int classes, int depth, std::uint64_t seed) {
  GcnParams p;
  for (int k = 0; k < depth; ++k) {
    const int fan_in = k == 0 ? in : hidden;
    const int fan_out = k == depth - 1 ? classes : hidden;
    p.layers.push_back({glorot(fan_in, fan_out, mix_seed(seed, 2 * k)),
                        glorot(fan_in, fan_out, mix_seed(seed, 2 * k + 1))});
  }
  return p;
}

std::vector<Matrix*> GcnParams::refs() {
  std::vector<Matrix*> out;
  for (auto& layer : layers) {
    out.push_back(&layer.self_weight);
    out.push_back(&layer.neighbor_weight);
  }
  return out;
}

namespace {

Var leaf(Tape& tape, const Matrix& m, bool trainable) {
  return trainable ? tape.variable(m) : tape.constant(m);
}

Var mlp_pre_activation(Var x, const MlpVars& p, double rate, bool train, std::uint64_t seed) {
  const Var hidden = relu(add_row(matmul(dropout(x, rate, train, mix_seed(seed, 1)), p.w1), p.b1));
  return add_row(matmul(dropout(hidden, rate, train, mix_seed(seed, 2)), p.w2), p.b2);
}

}  // namespace

MlpVars bind(Tape& tape, const MlpParams& p, bool trainable) {
  return {leaf(tape, p.w1, trainable), leaf(tape, p.b1, trainable), leaf(tape, p.w2, trainable),
          leaf(tape, p.b2, trainable)};
}

GcnVars bind(Tape& tape, const GcnParams& p, bool trainable) {
  GcnVars vars;
  for (const auto& layer : p.layers) {
    vars.layers.emplace_back(leaf(tape, layer.self_weight, trainable),
                             leaf(tape, layer.neighbor_weight, trainable));
  }
  return vars;
}

MlpOutput mlp_forward(Var x, const MlpVars& p, double dropout_rate, bool train, std::uint64_t seed) {
  const Var logits = relu(mlp_pre_activation(x, p, dropout_rate, train, seed));
  return {logits, row_softmax(logits)};
}

Var conv_layer(Var z, const RefinedAdjacency& adjacency, Var self_weight, Var neighbor_weight) {
  return add(matmul(z, self_weight),
             matmul(spmm(adjacency.pattern, adjacency.weights, z), neighbor_weight));
}

ForwardResult forward_full(Tape& tape, const NodeData& data, const BlockGraph& bg,
                           const SplitMask& split, const MlpVars& mlp, const GcnVars& gcn,
                           const TrainConfig& config, bool train, std::uint64_t seed) {
  if (gcn.layers.empty()) throw std::invalid_argument("forward_full: no convolution layers");
  const Var x = tape.constant(data.features);
  ForwardResult r;
  r.mlp = mlp_forward(x, mlp, config.dropout, train, mix_seed(seed, 0));

  const Var soft = config.stop_gradient ? detach(r.mlp.soft) : r.mlp.soft;
  const AssembledLabels assembled = assemble_labels(soft, data.labels, split.train);
  r.block = block_matrix(assembled.values, bg);
  r.similarity = similarity_matrix(r.block, config.alpha);
  r.adjacency = refine_topology(soft, r.similarity, bg);

  Var z = x;
  const auto depth = gcn.layers.size();
  for (std::size_t k = 0; k < depth; ++k) {
    z = dropout(z, config.dropout, train, mix_seed(seed, 100 + k));
    z = conv_layer(z, r.adjacency, gcn.layers[k].first, gcn.layers[k].second);
    if (k + 1 < depth) z = relu(z);
  }
  r.logits = z;

  const Matrix targets = one_hot(data.labels);
  r.loss_mlp = softmax_cross_entropy_masked(r.mlp.logits, targets, split.train);
  r.loss_gcn = softmax_cross_entropy_masked(r.logits, targets, split.train);
  r.loss_final = add(scale(r.loss_gcn, config.lambda), scale(r.loss_mlp, 1.0 - config.lambda));
  return r;
}

double evaluate(const Matrix& logits, const LabelAssignment& y, const Mask& mask) {
  if (logits.rows() != y.size() || mask.size() != static_cast<std::size_t>(y.size())) {
    throw std::invalid_argument("evaluate: logits, labels and mask must agree in length");
  }
  std::size_t total = 0, correct = 0;
  for (NodeId v = 0; v < y.size(); ++v) {
    if (!mask[v]) continue;
    if (!y.known(v)) throw DataError("evaluation node " + std::to_string(v) + " has no label");
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(v, k) > logits(v, best)) best = k;
    }
    ++total;
    correct += best == y[v];
  }
  if (total == 0) throw DataError("evaluation mask is empty");
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

double accuracy_or_zero(const Matrix& logits, const LabelAssignment& y, const Mask& mask) {
  return count(mask) == 0 ? 0.0 : evaluate(logits, y, mask);
}

struct StepOutput {
  Var loss;
  Var logits;
  double loss_mlp = 0.0;
  double loss_gcn = 0.0;
  std::vector<Var> params;  // same order as the parameter refs
};

using StepFn = std::function<StepOutput(Tape&, bool train, std::uint64_t seed)>;

// Shared training loop: Adam on the step loss, eval-mode accuracies each epoch,
// snapshot of the parameters at the best validation accuracy.
History fit(const std::vector<Matrix*>& params, const StepFn& step, const NodeData& data,
            const SplitMask& split, const TrainConfig& config, int epochs, int patience,
            std::uint64_t seed, std::vector<Matrix>& best, double& best_test) {
  AdamState adam(config.adam());
  History history;
  best.clear();
  for (const Matrix* p : params) best.push_back(*p);
  best_test = 0.0;
  const bool has_val = count(split.validation) > 0;
  double best_val = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    {
      Tape tape;
      const StepOutput out = step(tape, true, mix_seed(seed, static_cast<std::uint64_t>(epoch)));
      if (!std::isfinite(out.loss.value()(0, 0))) {
        throw NumericalError("loss is not finite at epoch " + std::to_string(epoch));
      }
      tape.backward(out.loss);
      std::vector<Matrix> grads;
      grads.reserve(out.params.size());
      for (const Var& v : out.params) grads.push_back(tape.grad(v));
      adam_step(params, grads, adam);
      rec.loss_final = out.loss.value()(0, 0);
      rec.loss_mlp = out.loss_mlp;
      rec.loss_gcn = out.loss_gcn;
    }
    {
      Tape tape;
      const StepOutput out = step(tape, false, 0);
      const Matrix& logits = out.logits.value();
      rec.train_acc = accuracy_or_zero(logits, data.labels, split.train);
      rec.val_acc = accuracy_or_zero(logits, data.labels, split.validation);
      rec.test_acc = accuracy_or_zero(logits, data.labels, split.test);
    }
    for (const Matrix* p : params) {
      if (!p->allFinite()) throw NumericalError("parameters diverged at epoch " + std::to_string(epoch));
    }
    history.push_back(rec);

    if (!has_val || rec.val_acc > best_val) {
      best_val = rec.val_acc;
      best_test = rec.test_acc;
      for (std::size_t k = 0; k < params.size(); ++k) best[k] = *params[k];
      since_best = 0;
    } else if (patience > 0 && ++since_best >= patience) {
      break;
    }
  }
  return history;
}

void restore(const std::vector<Matrix*>& params, const std::vector<Matrix>& saved) {
  for (std::size_t k = 0; k < params.size(); ++k) *params[k] = saved[k];
}

std::vector<Var> flatten(const MlpVars& m) { return {m.w1, m.b1, m.w2, m.b2}; }

std::vector<Var> flatten(const GcnVars& g) {
  std::vector<Var> out;
  for (const auto& [self, nbr] : g.layers) {
    out.push_back(self);
    out.push_back(nbr);
  }
  return out;
}

}  // namespace

MlpParams pretrain_mlp(const MlpParams& init, const NodeData& data, const SplitMask& split,
                       const TrainConfig& config, int epochs, History* history) {
  MlpParams p = init;
  if (epochs <= 0) return p;
  const Matrix targets = one_hot(data.labels);
  const StepFn step = [&](Tape& tape, bool train, std::uint64_t seed) {
    const MlpVars vars = bind(tape, p, train);
    const MlpOutput out = mlp_forward(tape.constant(data.features), vars, config.dropout, train, seed);
    const Var loss = softmax_cross_entropy_masked(out.logits, targets, split.train);
    return StepOutput{loss, out.logits, loss.value()(0, 0), 0.0, flatten(vars)};
  };
  std::vector<Matrix> best;
  double best_test = 0.0;
  History h = fit(p.refs(), step, data, split, config, epochs, 0, mix_seed(config.seed, 31), best,
                  best_test);
  restore(p.refs(), best);
  if (history) *history = std::move(h);
  return p;
}

TrainResult train_joint(const BmGcnModel& init, const NodeData& data, const SplitMask& split,
                        const TrainConfig& config) {
  config.validate();
  TrainResult result{init, {}, 0.0};
  BmGcnModel& m = result.model;
  const BlockGraph bg(data.graph, config.beta);
  const StepFn step = [&](Tape& tape, bool train, std::uint64_t seed) {
    const MlpVars mv = bind(tape, m.mlp, train);
    const GcnVars gv = bind(tape, m.gcn, train);
    const ForwardResult f = forward_full(tape, data, bg, split, mv, gv, config, train, seed);
    auto params = flatten(mv);
    for (const Var& v : flatten(gv)) params.push_back(v);
    return StepOutput{f.loss_final, f.logits, f.loss_mlp.value()(0, 0), f.loss_gcn.value()(0, 0),
                      std::move(params)};
  };
  auto refs = m.mlp.refs();
  for (Matrix* r : m.gcn.refs()) refs.push_back(r);
  std::vector<Matrix> best;
  result.history = fit(refs, step, data, split, config, config.joint_epochs, config.patience,
                       mix_seed(config.seed, 32), best, result.test_acc);
  restore(refs, best);
  return result;
}

TrainResult train_bmgcn(const NodeData& data, const SplitMask& split, const TrainConfig& config) {
  config.validate();
  data.validate();
  split.validate(data.labels);
  const auto d = static_cast<int>(data.features.cols());
  const int c = data.num_classes();
  BmGcnModel init{MlpParams::init(d, config.hidden, c, mix_seed(config.seed, 1)),
                  GcnParams::init(d, config.hidden, c, config.layers, mix_seed(config.seed, 2))};
  init.mlp = pretrain_mlp(init.mlp, data, split, config, config.pretrain_epochs);
  return train_joint(init, data, split, config);
}

Matrix bmgcn_logits(const BmGcnModel& model, const NodeData& data, const SplitMask& split,
                    const TrainConfig& config) {
  Tape tape;
  const BlockGraph bg(data.graph, config.beta);
  const ForwardResult f = forward_full(tape, data, bg, split, bind(tape, model.mlp, false),
                                       bind(tape, model.gcn, false), config, false, 0);
  return f.logits.value();
}

Matrix learned_block_matrix(const MlpParams& mlp, const NodeData& data, const SplitMask& split,
                            const TrainConfig& config) {
  Tape tape;
  const BlockGraph bg(data.graph, config.beta);
  const MlpOutput out =
      mlp_forward(tape.constant(data.features), bind(tape, mlp, false), config.dropout, false, 0);
  return block_matrix(assemble_labels(out.soft, data.labels, split.train).values, bg).value();
}

TrainResult train_baseline_gcn(const NodeData& data, const SplitMask& split,
                               const TrainConfig& config) {
  config.validate();
  data.validate();
  split.validate(data.labels);
  const Graph& g = data.graph;
  const NodeId n = g.num_nodes();
  auto pattern = std::make_shared<const SparsePattern>(SparsePattern::from_graph(g, Mask(n, 1)));
  Matrix norm(pattern->nnz(), 1);
  for (NodeId i = 0; i < n; ++i) {
    for (auto e = pattern->offsets[i]; e < pattern->offsets[i + 1]; ++e) {
      const NodeId j = pattern->columns[e];
      norm(e, 0) = 1.0 / std::sqrt(static_cast<double>((g.degree(i) + 1) * (g.degree(j) + 1)));
    }
  }

  const auto d = static_cast<int>(data.features.cols());
  const int c = data.num_classes();
  // Same container shape as the MLP: w1/b1 for layer one, w2/b2 for layer two.
  MlpParams p = MlpParams::init(d, config.hidden, c, mix_seed(config.seed, 3));
  const Matrix targets = one_hot(data.labels);
  const StepFn step = [&](Tape& tape, bool train, std::uint64_t seed) {
    const MlpVars v = bind(tape, p, train);
    const Var a = tape.constant(norm);
    const Var x = dropout(tape.constant(data.features), config.dropout, train, mix_seed(seed, 1));
    const Var h = relu(add_row(spmm(pattern, a, matmul(x, v.w1)), v.b1));
    const Var z = add_row(spmm(pattern, a, matmul(dropout(h, config.dropout, train, mix_seed(seed, 2)), v.w2)),
                          v.b2);
    const Var loss = softmax_cross_entropy_masked(z, targets, split.train);
    return StepOutput{loss, z, 0.0, loss.value()(0, 0), flatten(v)};
  };
  TrainResult result;
  std::vector<Matrix> best;
  result.history = fit(p.refs(), step, data, split, config, config.joint_epochs, config.patience,
                       mix_seed(config.seed, 33), best, result.test_acc);
  return result;
}

TrainResult train_baseline_mlp(const NodeData& data, const SplitMask& split,
                               const TrainConfig& config) {
  config.validate();
  data.validate();
  split.validate(data.labels);
  MlpParams p = MlpParams::init(static_cast<int>(data.features.cols()), config.hidden,
                                data.num_classes(), mix_seed(config.seed, 4));
  const Matrix targets = one_hot(data.labels);
  const StepFn step = [&](Tape& tape, bool train, std::uint64_t seed) {
    const MlpVars v = bind(tape, p, train);
    const Var z = mlp_pre_activation(tape.constant(data.features), v, config.dropout, train, seed);
    const Var loss = softmax_cross_entropy_masked(z, targets, split.train);
    return StepOutput{loss, z, loss.value()(0, 0), 0.0, flatten(v)};
  };
  TrainResult result;
  std::vector<Matrix> best;
  result.history = fit(p.refs(), step, data, split, config, config.joint_epochs, config.patience,
                       mix_seed(config.seed, 34), best, result.test_acc);
  return result;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBmGcn: return "bmgcn";
    case ModelKind::kGcn: return "gcn";
    case ModelKind::kMlp: return "mlp";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "bmgcn") return ModelKind::kBmGcn;
  if (name == "gcn") return ModelKind::kGcn;
  if (name == "mlp") return ModelKind::kMlp;
  throw ConfigError("unknown model '" + name + "' (expected bmgcn, gcn or mlp)");
}

TrainResult train_model(ModelKind kind, const NodeData& data, const SplitMask& split,
                        const TrainConfig& config) {
  switch (kind) {
    case ModelKind::kBmGcn: return train_bmgcn(data, split, config);
    case ModelKind::kGcn: return train_baseline_gcn(data, split, config);
    case ModelKind::kMlp: return train_baseline_mlp(data, split, config);
  }
  throw std::invalid_argument("unhandled model kind");
}

std::uint64_t split_seed(std::uint64_t seed, int split) {
  return mix_seed(seed, 0x5e11700 + static_cast<std::uint64_t>(split));
}

SplitSummary run_splits(ModelKind kind, const NodeData& data, const TrainConfig& config,
                        int n_splits, int jobs) {
  if (n_splits < 1) throw ConfigError("n_splits must be at least 1");
  config.validate();
  data.validate();

  auto run_one = [&](int s) {
    const SplitMask split = stratified_split(data.labels, split_seed(config.seed, s));
    TrainConfig cfg = config;
    cfg.seed = mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(s));
    return SplitRun{s, train_model(kind, data, split, cfg)};
  };

  SplitSummary summary;
  summary.runs.reserve(n_splits);
  if (jobs <= 1) {
    for (int s = 0; s < n_splits; ++s) summary.runs.push_back(run_one(s));
  } else {
    for (int start = 0; start < n_splits; start += jobs) {
      std::vector<std::future<SplitRun>> pending;
      for (int s = start; s < std::min(n_splits, start + jobs); ++s) {
        pending.push_back(std::async(std::launch::async, run_one, s));
      }
      for (auto& f : pending) summary.runs.push_back(f.get());
    }
  }

  double total = 0.0;
  for (const auto& r : summary.runs) total += r.result.test_acc;
  summary.mean_acc = total / n_splits;
  const bool constant = std::all_of(summary.runs.begin(), summary.runs.end(), [&](const SplitRun& r) {
    return r.result.test_acc == summary.runs.front().result.test_acc;
  });
  if (constant) {
    summary.mean_acc = summary.runs.front().result.test_acc;
  } else {
    double ss = 0.0;
    for (const auto& r : summary.runs) ss += std::pow(r.result.test_acc - summary.mean_acc, 2);
    summary.std_acc = std::sqrt(ss / (n_splits - 1));
  }
  return summary;
}

}  // namespace bmgcn
