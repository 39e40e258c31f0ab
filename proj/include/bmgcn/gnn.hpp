#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bmgcn/adam.hpp"
#include "bmgcn/autodiff.hpp"
#include "bmgcn/blockmodel.hpp"
#include "bmgcn/graph.hpp"

namespace bmgcn {

struct TrainConfig {
  int layers = 3;
  int hidden = 64;
  double alpha = 2.0;
  double beta = 1.0;
  double lambda = 0.5;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int pretrain_epochs = 400;
  int joint_epochs = 1000;
  int patience = 100;  // 0 disables early stopping
  bool stop_gradient = false;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
  AdamOptions adam() const { return {lr, weight_decay}; }
};

// Graph, labels, and features of one dataset.
struct NodeData {
  Graph graph;
  LabelAssignment labels;
  Matrix features;

  int num_classes() const { return labels.num_classes; }
  // Throws DataError on shape or label inconsistencies.
  void validate() const;
};

// Glorot-uniform weight in [-sqrt(6/(in+out)), +sqrt(6/(in+out))].
Matrix glorot(std::int64_t in, std::int64_t out, std::uint64_t seed);

// Two-layer perceptron d -> hidden -> c producing the soft labels.
struct MlpParams {
  Matrix w1, b1, w2, b2;

  static MlpParams init(int in, int hidden, int classes, std::uint64_t seed);
  std::vector<Matrix*> refs() { return {&w1, &b1, &w2, &b2}; }
};

// Classified-aggregation layer: Z' = Z W_self + A~ Z W_neighbor.
struct GcnLayer {
  Matrix self_weight;
  Matrix neighbor_weight;
};

struct GcnParams {
  std::vector<GcnLayer> layers;

  // Widths: in -> hidden -> ... -> hidden -> classes over `depth` layers.
  static GcnParams init(int in, int hidden, int classes, int depth, std::uint64_t seed);
  std::vector<Matrix*> refs();
};

struct MlpVars {
  Var w1, b1, w2, b2;
};
MlpVars bind(Tape& tape, const MlpParams& p, bool trainable = true);

struct GcnVars {
  std::vector<std::pair<Var, Var>> layers;
};
GcnVars bind(Tape& tape, const GcnParams& p, bool trainable = true);

struct MlpOutput {
  Var logits;  // relu(MLP(X)), the pre-softmax activations
  Var soft;    // row softmax of logits
};

// Dropout (on input and hidden) only when `train`; `seed` fixes the masks.
MlpOutput mlp_forward(Var x, const MlpVars& p, double dropout_rate, bool train, std::uint64_t seed);

// Z W_self + spmm(A~, Z) W_neighbor.
Var conv_layer(Var z, const RefinedAdjacency& adjacency, Var self_weight, Var neighbor_weight);

struct ForwardResult {
  Var logits;  // final-layer Z
  MlpOutput mlp;
  Var block;
  Var similarity;
  RefinedAdjacency adjacency;
  Var loss_mlp;
  Var loss_gcn;
  Var loss_final;
};

// Full pipeline on one tape: soft labels, label assembly, block and
// similarity matrices, refined adjacency, K conv layers, and both losses.
ForwardResult forward_full(Tape& tape, const NodeData& data, const BlockGraph& bg,
                           const SplitMask& split, const MlpVars& mlp, const GcnVars& gcn,
                           const TrainConfig& config, bool train, std::uint64_t seed);

// Fraction of masked nodes whose argmax (lowest id on ties) equals the label.
// Throws DataError on an empty mask.
double evaluate(const Matrix& logits, const LabelAssignment& y, const Mask& mask);

struct EpochRecord {
  int epoch = 0;
  double loss_mlp = 0.0;
  double loss_gcn = 0.0;
  double loss_final = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

using History = std::vector<EpochRecord>;

// Minimizes the masked soft-label cross-entropy for `epochs` epochs, keeping
// the parameters with the best validation accuracy.
MlpParams pretrain_mlp(const MlpParams& init, const NodeData& data, const SplitMask& split,
                       const TrainConfig& config, int epochs, History* history = nullptr);

struct BmGcnModel {
  MlpParams mlp;
  GcnParams gcn;
};

struct TrainResult {
  BmGcnModel model;
  History history;
  double test_acc = 0.0;  // at the best-validation epoch
};

// Initializes, pretrains the MLP, then trains everything on
// lambda * L_GCN + (1 - lambda) * L_MLP with early stopping on validation accuracy.
TrainResult train_bmgcn(const NodeData& data, const SplitMask& split, const TrainConfig& config);

// Joint phase only, starting from `init`.
TrainResult train_joint(const BmGcnModel& init, const NodeData& data, const SplitMask& split,
                        const TrainConfig& config);

// Eval-mode final-layer logits of a trained model.
Matrix bmgcn_logits(const BmGcnModel& model, const NodeData& data, const SplitMask& split,
                    const TrainConfig& config);

// Block matrix computed from training labels plus the model's soft labels.
Matrix learned_block_matrix(const MlpParams& mlp, const NodeData& data, const SplitMask& split,
                            const TrainConfig& config);

// Plain two-layer GCN over D^-1/2 (A + I) D^-1/2 and an attribute-only MLP,
// trained with the same optimizer and early-stopping protocol.
TrainResult train_baseline_gcn(const NodeData& data, const SplitMask& split, const TrainConfig& config);
TrainResult train_baseline_mlp(const NodeData& data, const SplitMask& split, const TrainConfig& config);

enum class ModelKind { kBmGcn, kGcn, kMlp };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

TrainResult train_model(ModelKind kind, const NodeData& data, const SplitMask& split,
                        const TrainConfig& config);

struct SplitRun {
  int split = 0;
  TrainResult result;
};

struct SplitSummary {
  std::vector<SplitRun> runs;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample standard deviation; 0 for a single split
};

// Trains `kind` on n_splits stratified 60/20/20 splits derived from
// config.seed, running up to `jobs` splits concurrently. Results are in split order.
SplitSummary run_splits(ModelKind kind, const NodeData& data, const TrainConfig& config,
                        int n_splits, int jobs = 1);

// Seed of split s for a run seeded with `seed`; exposed so callers can rebuild masks.
std::uint64_t split_seed(std::uint64_t seed, int split);

}  // namespace bmgcn
