#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bmgcn/commands.hpp"
#include "bmgcn/gnn.hpp"
#include "bmgcn/synthgen.hpp"
#include "dense_oracle.hpp"
#include "gradcheck.hpp"

using namespace bmgcn;
using namespace bmgcn::testing;

namespace {

NodeData sbm_data(NodeId n, int classes, double p_in, double p_out, int dim, double flip,
                  std::uint64_t seed) {
  return generate_dataset({n, classes, p_in, p_out, dim, flip, seed, {}});
}

TrainConfig quick_config() {
  TrainConfig c;
  c.hidden = 16;
  c.pretrain_epochs = 20;
  c.joint_epochs = 20;
  c.patience = 0;
  c.lr = 0.01;
  c.seed = 5;
  return c;
}

// Random 12-node, 3-class graph with a split that covers every class in training.
struct SmallCase {
  NodeData data;
  SplitMask split;
};

SmallCase small_case(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (int k = 0; k < 24; ++k) pairs.emplace_back(gen() % 12, gen() % 12);
  std::vector<int> ids(12);
  for (int v = 0; v < 12; ++v) ids[v] = v % 3;
  SmallCase c;
  c.data.graph = load_graph(pairs, 12);
  c.data.labels = LabelAssignment::from_ids(ids, 3);
  c.data.features = random_matrix(12, 5, seed + 1);
  c.split.train = Mask(12, 0);
  c.split.validation = Mask(12, 0);
  c.split.test = Mask(12, 0);
  for (int v = 0; v < 12; ++v) (v < 6 ? c.split.train : v < 9 ? c.split.validation : c.split.test)[v] = 1;
  return c;
}

std::vector<Matrix> flat_params(const MlpParams& m, const GcnParams& g) {
  std::vector<Matrix> out{m.w1, m.b1, m.w2, m.b2};
  for (const auto& l : g.layers) {
    out.push_back(l.self_weight);
    out.push_back(l.neighbor_weight);
  }
  return out;
}

// Loss selector over the full pipeline, parameters passed in flat order.
ScalarFn pipeline_loss(const SmallCase& c, const BlockGraph& bg, const TrainConfig& cfg, int which) {
  return [&c, &bg, cfg, which](Tape& t, const std::vector<Var>& v) {
    MlpVars m{v[0], v[1], v[2], v[3]};
    GcnVars g;
    for (std::size_t k = 4; k + 1 < v.size(); k += 2) g.layers.emplace_back(v[k], v[k + 1]);
    const ForwardResult f = forward_full(t, c.data, bg, c.split, m, g, cfg, true, 99);
    return which == 0 ? f.loss_final : which == 1 ? f.loss_gcn : f.loss_mlp;
  };
}

}  // namespace

TEST_CASE("mlp forward: zero weights give uniform soft labels") {
  Tape t;
  MlpParams p{Matrix::Zero(4, 6), Matrix::Zero(1, 6), Matrix::Zero(6, 3), Matrix::Zero(1, 3)};
  const MlpOutput out = mlp_forward(t.constant(random_matrix(5, 4, 1)), bind(t, p, false), 0.5, false, 0);
  CHECK((out.soft.value().array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("mlp forward: softmax of the activated output") {
  Tape t;
  // One node, identity hidden layer, output logits [1, 2, 3].
  MlpParams p{Matrix::Identity(3, 3), Matrix::Zero(1, 3), Matrix::Identity(3, 3), Matrix::Zero(1, 3)};
  Matrix x(1, 3);
  x << 1, 2, 3;
  const Matrix b = mlp_forward(t.constant(x), bind(t, p, false), 0.0, false, 0).soft.value();
  CHECK(b(0, 0) == doctest::Approx(0.09003).epsilon(1e-4));
  CHECK(b(0, 1) == doctest::Approx(0.24473).epsilon(1e-4));
  CHECK(b(0, 2) == doctest::Approx(0.66524).epsilon(1e-4));
}

TEST_CASE("mlp forward: rows are strictly positive distributions") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Tape t;
    const MlpParams p = MlpParams::init(7, 8, 4, seed);
    for (bool train : {false, true}) {
      const Matrix b = mlp_forward(t.constant(random_matrix(20, 7, seed, -5, 5)), bind(t, p, false), 0.5,
                                   train, seed)
                           .soft.value();
      CHECK((b.array() > 0.0).all());
      CHECK((b.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("conv layer special cases and dense oracle") {
  const SmallCase c = small_case(3);
  const BlockGraph bg(c.data.graph, 1.0);
  Tape t;
  const Matrix z = random_matrix(12, 4, 4);
  const Matrix b = random_row_stochastic(12, 3, 5);
  const Matrix q = similarity_matrix(random_row_stochastic(3, 3, 6), 2.0);
  const RefinedAdjacency adj = refine_topology(t.constant(b), t.constant(q), bg);
  const Matrix eye = Matrix::Identity(4, 4), zero = Matrix::Zero(4, 4);

  CHECK(conv_layer(t.constant(z), adj, t.constant(eye), t.constant(zero)).value() == z);

  const Matrix dense_a = adj.pattern->to_dense(adj.weights.value());
  const Matrix w1 = random_matrix(4, 2, 7), w2 = random_matrix(4, 2, 8);
  const Matrix got = conv_layer(t.constant(z), adj, t.constant(w1), t.constant(w2)).value();
  CHECK((got - (z * w1 + dense_a * z * w2)).cwiseAbs().maxCoeff() < 1e-12);

  // Row-uniform adjacency over neighbors only: the layer averages neighbor rows.
  const BlockGraph plain(c.data.graph, 0.0);
  Matrix hard = Matrix::Zero(12, 3);
  hard.col(0).setOnes();
  const RefinedAdjacency uniform = refine_topology(t.constant(hard), t.constant(Matrix::Identity(3, 3)), plain);
  const Matrix mean = conv_layer(t.constant(z), uniform, t.constant(zero), t.constant(eye)).value();
  for (NodeId i = 0; i < 12; ++i) {
    const auto nb = c.data.graph.neighbors(i);
    if (nb.empty()) continue;
    Eigen::RowVectorXd expected = Eigen::RowVectorXd::Zero(4);
    for (NodeId j : nb) expected += z.row(j);
    expected /= static_cast<double>(nb.size());
    CHECK((mean.row(i) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("end-to-end gradient check over configuration corners") {
  const SmallCase c = small_case(11);
  for (double alpha : {1.0, 2.0}) {
    for (double beta : {0.0, 1.0}) {
      const BlockGraph bg(c.data.graph, beta);
      for (double lambda : {0.0, 0.5, 1.0}) {
        for (int depth : {1, 2, 3}) {
          TrainConfig cfg;
          cfg.alpha = alpha;
          cfg.beta = beta;
          cfg.lambda = lambda;
          cfg.dropout = 0.3;
          const MlpParams m = MlpParams::init(5, 6, 3, 21);
          GcnParams g = GcnParams::init(5, 6, 3, depth, 22);
          CAPTURE(alpha);
          CAPTURE(beta);
          CAPTURE(lambda);
          CAPTURE(depth);
          CHECK(gradcheck(pipeline_loss(c, bg, cfg, 0), flat_params(m, g)) < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("loss balance endpoints") {
  const SmallCase c = small_case(12);
  const BlockGraph bg(c.data.graph, 1.0);
  const MlpParams m = MlpParams::init(5, 6, 3, 31);
  const GcnParams g = GcnParams::init(5, 6, 3, 2, 32);
  const auto params = flat_params(m, g);

  TrainConfig one;
  one.lambda = 1.0;
  const auto full = analytic_gradients(pipeline_loss(c, bg, one, 0), params);
  const auto gcn_only = analytic_gradients(pipeline_loss(c, bg, one, 1), params);
  for (int k = 0; k < 4; ++k) CHECK((full[k] - gcn_only[k]).cwiseAbs().maxCoeff() < 1e-15);
  // The GCN loss alone still reaches the MLP through the soft labels.
  CHECK(gcn_only[0].cwiseAbs().maxCoeff() > 0.0);

  TrainConfig zero;
  zero.lambda = 0.0;
  const auto grads = analytic_gradients(pipeline_loss(c, bg, zero, 0), params);
  for (std::size_t k = 4; k < grads.size(); ++k) CHECK(grads[k].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stop-gradient ablation cuts the block-model path into the MLP") {
  const SmallCase c = small_case(13);
  const BlockGraph bg(c.data.graph, 1.0);
  TrainConfig cfg;
  cfg.lambda = 1.0;
  cfg.stop_gradient = true;
  const auto grads = analytic_gradients(pipeline_loss(c, bg, cfg, 0),
                                        flat_params(MlpParams::init(5, 6, 3, 1), GcnParams::init(5, 6, 3, 2, 2)));
  for (int k = 0; k < 4; ++k) CHECK(grads[k].cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads[4].cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("evaluate") {
  const auto y = LabelAssignment::from_ids(std::vector<int>{0, 1, 2, 1}, 3);
  const Mask all(4, 1);
  CHECK(evaluate(one_hot(y), y, all) == 1.0);
  CHECK(evaluate(Matrix::Zero(4, 3), y, all) == 0.25);  // ties go to class 0
  Matrix z = one_hot(y);
  z.row(1) << 1, 0, 0;
  z.row(2) << 0, 1, 0;
  CHECK(evaluate(z, y, all) == 0.5);
  CHECK(evaluate(z, y, Mask{1, 0, 0, 1}) == 1.0);
  CHECK_THROWS_AS(evaluate(z, y, Mask(4, 0)), DataError);
}

TEST_CASE("pretraining with zero epochs leaves parameters unchanged") {
  const NodeData d = sbm_data(100, 2, 0.1, 0.02, 8, 0.0, 1);
  const SplitMask s = stratified_split(d.labels, 1);
  const MlpParams init = MlpParams::init(8, 16, 2, 1);
  const MlpParams out = pretrain_mlp(init, d, s, quick_config(), 0);
  CHECK(out.w1 == init.w1);
  CHECK(out.w2 == init.w2);
}

TEST_CASE("pretraining separates noise-free features") {
  const NodeData d = sbm_data(200, 4, 0.05, 0.01, 16, 0.0, 2);
  const SplitMask s = stratified_split(d.labels, 2);
  TrainConfig cfg;
  cfg.seed = 2;
  const MlpParams p = pretrain_mlp(MlpParams::init(16, 64, 4, 3), d, s, cfg, 400);
  Tape t;
  const Matrix logits = mlp_forward(t.constant(d.features), bind(t, p, false), 0.0, false, 0).logits.value();
  CHECK(evaluate(logits, d.labels, s.train) == 1.0);
}

TEST_CASE("pretraining loss decreases over the first epochs") {
  const NodeData d = sbm_data(200, 4, 0.05, 0.01, 16, 0.0, 4);
  const SplitMask s = stratified_split(d.labels, 4);
  TrainConfig cfg;
  cfg.dropout = 0.0;
  History h;
  pretrain_mlp(MlpParams::init(16, 64, 4, 5), d, s, cfg, 5, &h);
  REQUIRE(h.size() == 5);
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k].loss_mlp < h[k - 1].loss_mlp);
}

TEST_CASE("near-uninformative features drive the MLP to chance") {
  const NodeData d = sbm_data(800, 4, 0.01, 0.01, 16, 0.499, 6);
  const SplitMask s = stratified_split(d.labels, 6);
  TrainConfig cfg = quick_config();
  cfg.joint_epochs = 100;
  cfg.lr = 0.005;
  const double acc = train_baseline_mlp(d, s, cfg).test_acc;
  CHECK(acc < 0.25 + 0.1);
}

TEST_CASE("joint training history length and determinism") {
  const NodeData d = sbm_data(150, 3, 0.05, 0.02, 12, 0.2, 7);
  const SplitMask s = stratified_split(d.labels, 7);
  TrainConfig cfg = quick_config();
  const TrainResult a = train_bmgcn(d, s, cfg);
  const TrainResult b = train_bmgcn(d, s, cfg);
  CHECK(a.history.size() == 20);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    CHECK(a.history[k].loss_final == b.history[k].loss_final);
    CHECK(a.history[k].val_acc == b.history[k].val_acc);
  }
  CHECK(a.test_acc == b.test_acc);

  for (const auto& e : a.history) {
    CHECK(e.loss_final == doctest::Approx(0.5 * e.loss_gcn + 0.5 * e.loss_mlp).epsilon(1e-12));
  }

  cfg.joint_epochs = 200;
  cfg.patience = 3;
  CHECK(train_bmgcn(d, s, cfg).history.size() < 200);
}

TEST_CASE("soft labels stay row-stochastic through training") {
  const NodeData d = sbm_data(120, 3, 0.05, 0.02, 12, 0.2, 8);
  const SplitMask s = stratified_split(d.labels, 8);
  const TrainResult r = train_bmgcn(d, s, quick_config());
  Tape t;
  const Matrix b =
      mlp_forward(t.constant(d.features), bind(t, r.model.mlp, false), 0.0, false, 0).soft.value();
  CHECK((b.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("class relabeling permutes logits and preserves accuracy") {
  const NodeData d = sbm_data(120, 3, 0.05, 0.02, 12, 0.2, 9);
  const SplitMask s = stratified_split(d.labels, 9);
  TrainConfig cfg = quick_config();
  const TrainResult r = train_bmgcn(d, s, cfg);

  const std::vector<int> perm{2, 0, 1};
  NodeData pd = d;
  std::vector<int> ids(d.labels.size());
  for (NodeId v = 0; v < d.labels.size(); ++v) ids[v] = perm[d.labels[v]];
  pd.labels = LabelAssignment::from_ids(ids, 3);
  BmGcnModel pm = r.model;
  for (int k = 0; k < 3; ++k) {
    pm.mlp.w2.col(perm[k]) = r.model.mlp.w2.col(k);
    pm.mlp.b2.col(perm[k]) = r.model.mlp.b2.col(k);
    pm.gcn.layers.back().self_weight.col(perm[k]) = r.model.gcn.layers.back().self_weight.col(k);
    pm.gcn.layers.back().neighbor_weight.col(perm[k]) = r.model.gcn.layers.back().neighbor_weight.col(k);
  }
  const Matrix z = bmgcn_logits(r.model, d, s, cfg);
  const Matrix zp = bmgcn_logits(pm, pd, s, cfg);
  for (int k = 0; k < 3; ++k) CHECK((zp.col(perm[k]) - z.col(k)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(evaluate(z, d.labels, s.test) == evaluate(zp, pd.labels, s.test));
}

TEST_CASE("depths one through six run") {
  const NodeData d = sbm_data(90, 3, 0.06, 0.02, 9, 0.1, 10);
  const SplitMask s = stratified_split(d.labels, 10);
  for (int depth = 1; depth <= 6; ++depth) {
    TrainConfig cfg = quick_config();
    cfg.layers = depth;
    cfg.pretrain_epochs = 2;
    cfg.joint_epochs = 3;
    const TrainResult r = train_bmgcn(d, s, cfg);
    CHECK(r.model.gcn.layers.size() == static_cast<std::size_t>(depth));
    CHECK(r.history.size() == 3);
  }
}

TEST_CASE("baselines follow the homophily regime") {
  TrainConfig cfg = quick_config();
  cfg.joint_epochs = 150;
  cfg.patience = 50;
  // Homophilic graph, noisy features: propagation helps.
  const NodeData homo = sbm_data(400, 3, 0.05, 0.002, 12, 0.35, 11);
  const SplitMask hs = stratified_split(homo.labels, 11);
  CHECK(train_baseline_gcn(homo, hs, cfg).test_acc >= train_baseline_mlp(homo, hs, cfg).test_acc);
  // Heterophilic graph, informative features: propagation mixes classes.
  const NodeData het = sbm_data(400, 3, 0.002, 0.03, 12, 0.1, 12);
  const SplitMask ts = stratified_split(het.labels, 12);
  CHECK(train_baseline_mlp(het, ts, cfg).test_acc >= train_baseline_gcn(het, ts, cfg).test_acc);
}

TEST_CASE("run_splits aggregates and reproduces") {
  const NodeData d = sbm_data(100, 2, 0.08, 0.02, 8, 0.2, 13);
  TrainConfig cfg = quick_config();
  const SplitSummary one = run_splits(ModelKind::kMlp, d, cfg, 1);
  CHECK(one.std_acc == 0.0);
  CHECK(one.mean_acc == one.runs[0].result.test_acc);

  const SplitSummary a = run_splits(ModelKind::kGcn, d, cfg, 3);
  const SplitSummary b = run_splits(ModelKind::kGcn, d, cfg, 3, 2);
  REQUIRE(a.runs.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(a.runs[k].result.test_acc == b.runs[k].result.test_acc);
  CHECK(a.mean_acc == b.mean_acc);
  CHECK(a.std_acc == b.std_acc);

  double mean = 0.0;
  for (const auto& r : a.runs) mean += r.result.test_acc / 3.0;
  double var = 0.0;
  for (const auto& r : a.runs) var += std::pow(r.result.test_acc - mean, 2) / 2.0;
  CHECK(a.mean_acc == doctest::Approx(mean).epsilon(1e-14));
  CHECK(a.std_acc == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.layers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.alpha = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
