#include "bmgcn/blockmodel.hpp"

#include <algorithm>
#include <string>

namespace bmgcn {

BlockGraph::BlockGraph(const Graph& g, double beta) : graph_(&g), beta_(beta) {
  if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
  const NodeId n = g.num_nodes();
  adjacency_ = std::make_shared<const SparsePattern>(SparsePattern::from_graph(g));

  Mask diagonal(n, 0);
  for (NodeId v = 0; v < n; ++v) diagonal[v] = beta > 0.0 || g.degree(v) == 0;
  auto refined = SparsePattern::from_graph(g, diagonal);
  multipliers_.resize(refined.nnz(), 1);
  for (NodeId i = 0; i < n; ++i) {
    for (auto e = refined.offsets[i]; e < refined.offsets[i + 1]; ++e) {
      multipliers_(e, 0) = refined.columns[e] != i ? 1.0 : (g.degree(i) == 0 ? std::max(beta, 1.0) : beta);
    }
  }
  refined_ = std::make_shared<const SparsePattern>(std::move(refined));

  degrees_.resize(n, 1);
  for (NodeId v = 0; v < n; ++v) degrees_(v, 0) = static_cast<double>(g.degree(v));
}

AssembledLabels assemble_labels(Var soft_labels, const LabelAssignment& y, const Mask& train) {
  const auto n = soft_labels.rows();
  if (y.size() != n || static_cast<std::int64_t>(train.size()) != n) {
    throw std::invalid_argument("assemble_labels: labels and mask must have one entry per row");
  }
  if (soft_labels.cols() != y.num_classes) {
    throw std::invalid_argument("assemble_labels: soft label width must equal class count");
  }
  Tape& tape = *soft_labels.tape();
  Matrix truth = Matrix::Zero(n, y.num_classes);
  Matrix keep = Matrix::Ones(n, y.num_classes);
  for (NodeId v = 0; v < n; ++v) {
    if (!train[v]) continue;
    if (!y.known(v)) throw DataError("training node " + std::to_string(v) + " has no label");
    truth(v, y[v]) = 1.0;
    keep.row(v).setZero();
  }
  Var values = add(hadamard(soft_labels, tape.constant(std::move(keep))), tape.constant(std::move(truth)));
  return {values, train};
}

Var block_matrix(Var assembled, const BlockGraph& bg) {
  const Graph& g = bg.graph();
  if (assembled.rows() != g.num_nodes()) {
    throw std::invalid_argument("block_matrix: one label row per node required");
  }
  Tape& tape = *assembled.tape();
  const auto c = assembled.cols();
  const Var ys_t = transpose(assembled);
  const Var ones = tape.constant(Matrix::Ones(bg.adjacency()->nnz(), 1));
  const Var numerator = matmul(ys_t, spmm(bg.adjacency(), ones, assembled));
  // A E has every column equal to the degree vector.
  const Var denominator = matmul(ys_t, tape.constant(bg.degrees() * Matrix::Ones(1, c)));
  const Matrix& den = denominator.value();
  for (Eigen::Index r = 0; r < c; ++r) {
    if ((den.row(r).array() < kBlockEps).all()) {
      throw DegenerateBlockError("class " + std::to_string(r) +
                                 " has no incident edge mass; block matrix row is undefined");
    }
  }
  return divide_guarded(numerator, denominator, kBlockEps);
}

Var similarity_matrix(Var block, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  return scale_diagonal(matmul(block, transpose(block)), alpha);
}

RefinedAdjacency refine_topology(Var soft_labels, Var similarity, const BlockGraph& bg) {
  Tape& tape = *soft_labels.tape();
  const Var omega = edgewise_bilinear(bg.refined(), soft_labels, similarity);
  const Var raw = hadamard(omega, tape.constant(bg.support_multipliers()));
  return {bg.refined(), masked_row_softmax(bg.refined(), raw)};
}

Matrix block_matrix(const Matrix& assembled, const Graph& g) {
  Tape tape;
  const BlockGraph bg(g, 0.0);
  return block_matrix(tape.constant(assembled), bg).value();
}

Matrix similarity_matrix(const Matrix& block, double alpha) {
  Tape tape;
  return similarity_matrix(tape.constant(block), alpha).value();
}

RefinedWeights refine_topology(const Matrix& soft_labels, const Matrix& similarity, const Graph& g,
                               double beta) {
  Tape tape;
  const BlockGraph bg(g, beta);
  auto refined = refine_topology(tape.constant(soft_labels), tape.constant(similarity), bg);
  return {refined.pattern, refined.weights.value()};
}

}  // namespace bmgcn
