#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bmgcn/matrix.hpp"

namespace bmgcn {

using NodeId = std::int32_t;

// Immutable undirected simple graph in compressed-row form. Both directions of
// every edge are stored; self-loops and duplicates never are.
class Graph {
 public:
  Graph() = default;

  NodeId num_nodes() const { return static_cast<NodeId>(offsets_.size()) - 1; }
  std::int64_t num_stored() const { return offsets_.back(); }
  std::int64_t num_edges() const { return num_stored() / 2; }

  std::int64_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {columns_.data() + offsets_[v], static_cast<std::size_t>(degree(v))};
  }

  const std::vector<std::int64_t>& offsets() const { return offsets_; }
  const std::vector<NodeId>& columns() const { return columns_; }
  std::vector<std::int64_t> degrees() const;

  // Each undirected edge once, as (i, j) with i < j, in row order.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const;

  bool operator==(const Graph&) const = default;

 private:
  friend Graph load_graph(std::span<const std::pair<NodeId, NodeId>>, NodeId);
  std::vector<std::int64_t> offsets_{0};
  std::vector<NodeId> columns_;
};

// Builds a graph from arbitrary (possibly one-directional, duplicated, or
// self-looped) pairs. Throws DataError on n == 0 or out-of-range indices.
Graph load_graph(std::span<const std::pair<NodeId, NodeId>> edge_pairs, NodeId n);

// Per-node class ids; std::nullopt marks an unlabeled node.
struct LabelAssignment {
  std::vector<std::optional<int>> labels;
  int num_classes = 0;

  NodeId size() const { return static_cast<NodeId>(labels.size()); }
  bool known(NodeId v) const { return labels[v].has_value(); }
  int operator[](NodeId v) const { return *labels[v]; }

  static LabelAssignment from_ids(std::span<const int> ids, int num_classes);
  // Throws DataError when a label is outside [0, num_classes).
  void validate() const;
};

struct SplitMask {
  Mask train;
  Mask validation;
  Mask test;

  // Disjoint, non-empty train, train only on labeled nodes. Throws DataError.
  void validate(const LabelAssignment& y) const;
};

// Mean over non-isolated nodes of the fraction of neighbors sharing the node's class.
double homophily_ratio(const Graph& g, const LabelAssignment& y);

// n x c matrix with unit basis rows for labeled nodes and `unknown_row` elsewhere.
Matrix one_hot(const LabelAssignment& y, const Eigen::RowVectorXd& unknown_row);
Matrix one_hot(const LabelAssignment& y);

// Stratified split: per class, shuffle with `seed` and take floor(0.6 m) train,
// floor(0.2 m) validation, the rest test. Unlabeled nodes are in no mask.
// Throws DataError when a class has fewer than 5 labeled nodes.
SplitMask stratified_split(const LabelAssignment& y, std::uint64_t seed,
                           double train_fraction = 0.6, double validation_fraction = 0.2);

}  // namespace bmgcn
