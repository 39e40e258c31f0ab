#include "bmgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bmgcn/errors.hpp"
#include "bmgcn/rng.hpp"

namespace bmgcn {

std::vector<std::int64_t> Graph::degrees() const {
  std::vector<std::int64_t> deg(num_nodes());
  for (NodeId v = 0; v < num_nodes(); ++v) deg[v] = degree(v);
  return deg;
}

std::vector<std::pair<NodeId, NodeId>> Graph::edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(num_edges());
  for (NodeId i = 0; i < num_nodes(); ++i) {
    for (NodeId j : neighbors(i)) {
      if (i < j) edges.emplace_back(i, j);
    }
  }
  return edges;
}

Graph load_graph(std::span<const std::pair<NodeId, NodeId>> edge_pairs, NodeId n) {
  if (n <= 0) throw DataError("graph must have at least one node");

  std::vector<std::pair<NodeId, NodeId>> directed;
  directed.reserve(2 * edge_pairs.size());
  for (const auto& [i, j] : edge_pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw DataError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                      ") references a node outside [0, " + std::to_string(n) + ")");
    }
    if (i == j) continue;
    directed.emplace_back(i, j);
    directed.emplace_back(j, i);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  Graph g;
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  g.columns_.reserve(directed.size());
  for (const auto& [i, j] : directed) {
    ++g.offsets_[i + 1];
    g.columns_.push_back(j);
  }
  for (NodeId v = 0; v < n; ++v) g.offsets_[v + 1] += g.offsets_[v];
  return g;
}

LabelAssignment LabelAssignment::from_ids(std::span<const int> ids, int num_classes) {
  LabelAssignment y;
  y.num_classes = num_classes;
  y.labels.reserve(ids.size());
  for (int id : ids) {
    if (id < 0) {
      y.labels.emplace_back(std::nullopt);
    } else {
      y.labels.emplace_back(id);
    }
  }
  y.validate();
  return y;
}

void LabelAssignment::validate() const {
  if (num_classes < 1) throw DataError("label assignment needs at least one class");
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] && (*labels[v] < 0 || *labels[v] >= num_classes)) {
      throw DataError("node " + std::to_string(v) + " has label " + std::to_string(*labels[v]) +
                      " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

void SplitMask::validate(const LabelAssignment& y) const {
  const auto n = static_cast<std::size_t>(y.size());
  if (train.size() != n || validation.size() != n || test.size() != n) {
    throw DataError("split masks must have one entry per node");
  }
  std::size_t n_train = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (train[v] + validation[v] + test[v] > 1) {
      throw DataError("node " + std::to_string(v) + " is in more than one split");
    }
    if (train[v]) {
      if (!y.known(static_cast<NodeId>(v))) {
        throw DataError("training node " + std::to_string(v) + " has no label");
      }
      ++n_train;
    }
  }
  if (n_train == 0) throw DataError("training set is empty");
}

double homophily_ratio(const Graph& g, const LabelAssignment& y) {
  if (y.size() != g.num_nodes()) throw DataError("label count does not match node count");
  double total = 0.0;
  std::int64_t counted = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto nbrs = g.neighbors(i);
    if (nbrs.empty()) continue;
    if (!y.known(i)) throw DataError("node " + std::to_string(i) + " has edges but no label");
    std::int64_t same = 0;
    for (NodeId j : nbrs) {
      if (!y.known(j)) throw DataError("node " + std::to_string(j) + " has edges but no label");
      same += y[i] == y[j];
    }
    total += static_cast<double>(same) / static_cast<double>(nbrs.size());
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

Matrix one_hot(const LabelAssignment& y, const Eigen::RowVectorXd& unknown_row) {
  const int c = y.num_classes;
  if (unknown_row.size() != c) throw std::invalid_argument("default row width must equal class count");
  Matrix out(y.size(), c);
  for (NodeId v = 0; v < y.size(); ++v) {
    if (y.known(v)) {
      out.row(v).setZero();
      out(v, y[v]) = 1.0;
    } else {
      out.row(v) = unknown_row;
    }
  }
  return out;
}

Matrix one_hot(const LabelAssignment& y) {
  return one_hot(y, Eigen::RowVectorXd::Zero(y.num_classes));
}

SplitMask stratified_split(const LabelAssignment& y, std::uint64_t seed, double train_fraction,
                           double validation_fraction) {
  const auto n = static_cast<std::size_t>(y.size());
  std::vector<std::vector<NodeId>> by_class(y.num_classes);
  for (NodeId v = 0; v < y.size(); ++v) {
    if (y.known(v)) by_class[y[v]].push_back(v);
  }

  SplitMask split{Mask(n, 0), Mask(n, 0), Mask(n, 0)};
  Rng rng(seed);
  for (int r = 0; r < y.num_classes; ++r) {
    auto& members = by_class[r];
    if (members.size() < 5) {
      throw DataError("class " + std::to_string(r) + " has " + std::to_string(members.size()) +
                      " labeled nodes; at least 5 are needed to split");
    }
    rng.shuffle(members.begin(), members.end());
    const auto m = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * m));
    const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * m));
    for (std::size_t k = 0; k < members.size(); ++k) {
      auto& mask = k < n_train ? split.train : (k < n_train + n_val ? split.validation : split.test);
      mask[members[k]] = 1;
    }
  }
  return split;
}

}  // namespace bmgcn
