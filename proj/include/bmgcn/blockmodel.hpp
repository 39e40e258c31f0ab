#pragma once

#include "bmgcn/autodiff.hpp"
#include "bmgcn/errors.hpp"
#include "bmgcn/graph.hpp"

namespace bmgcn {

// Raised when a class has no edge mass, which leaves its block-matrix row undefined.
class DegenerateBlockError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline constexpr double kBlockEps = 1e-12;

// Graph-derived constants reused by every forward pass: the 0/1 adjacency
// support, degrees, and the support of A + beta*I with its entry multipliers.
class BlockGraph {
 public:
  BlockGraph(const Graph& g, double beta);

  const Graph& graph() const { return *graph_; }
  double beta() const { return beta_; }
  const PatternPtr& adjacency() const { return adjacency_; }
  const PatternPtr& refined() const { return refined_; }
  // nnz x 1 over refined(): 1 on edges, beta on the diagonal, max(beta, 1)
  // on the forced diagonal of isolated nodes.
  const Matrix& support_multipliers() const { return multipliers_; }
  // n x 1 node degrees (A times the all-ones vector).
  const Matrix& degrees() const { return degrees_; }

 private:
  const Graph* graph_;
  double beta_;
  PatternPtr adjacency_;
  PatternPtr refined_;
  Matrix multipliers_;
  Matrix degrees_;
};

struct AssembledLabels {
  Var values;          // n x c
  Mask ground_truth;   // rows replaced by one-hot labels
};

// Training rows become one-hot constants, the others keep the soft labels
// (and their gradient path). Throws DataError for an unlabeled training node.
AssembledLabels assemble_labels(Var soft_labels, const LabelAssignment& y, const Mask& train);

// H = (Ys^T A Ys) / (Ys^T A E) with the division guarded at kBlockEps.
// Throws DegenerateBlockError when a class has (near) zero incident edge mass.
Var block_matrix(Var assembled, const BlockGraph& bg);

// Q = H H^T with the diagonal multiplied by alpha.
Var similarity_matrix(Var block, double alpha);

struct RefinedAdjacency {
  PatternPtr pattern;
  Var weights;  // nnz x 1, softmax-normalized per row
};

// Edge weights B_i Q B_j^T on the support of A + beta*I, scaled by the support
// multipliers and softmax-normalized over each row's stored entries.
RefinedAdjacency refine_topology(Var soft_labels, Var similarity, const BlockGraph& bg);

// Value-level conveniences backed by a throwaway tape.
Matrix block_matrix(const Matrix& assembled, const Graph& g);
Matrix similarity_matrix(const Matrix& block, double alpha);
struct RefinedWeights {
  PatternPtr pattern;
  Matrix weights;
};
RefinedWeights refine_topology(const Matrix& soft_labels, const Matrix& similarity, const Graph& g,
                               double beta);

}  // namespace bmgcn
