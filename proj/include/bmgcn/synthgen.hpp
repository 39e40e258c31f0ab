#pragma once

#include <cstdint>
#include <vector>

#include "bmgcn/graph.hpp"
#include "bmgcn/matrix.hpp"

namespace bmgcn {

// Stochastic block model with planted classes. Nodes are assigned to classes
// in contiguous blocks: the first class_sizes[0] ids are class 0, and so on.
struct SbmSpec {
  std::vector<NodeId> class_sizes;
  Matrix edge_prob;  // c x c, symmetric, entries in [0, 1]
  int feature_dim = 0;
  double flip_prob = 0.0;
  std::uint64_t seed = 0;

  NodeId num_nodes() const;
  int num_classes() const { return static_cast<int>(class_sizes.size()); }

  // Throws ConfigError when the invariants do not hold.
  void validate() const;

  // Equal class sizes (remainder to the lowest ids), p_in on the diagonal and
  // p_out elsewhere.
  static SbmSpec planted_partition(NodeId n, int classes, double p_in, double p_out,
                                   int feature_dim, double flip_prob, std::uint64_t seed);
};

struct SbmSample {
  Graph graph;
  LabelAssignment labels;
};

// Exact Bernoulli draw for every unordered pair. Deterministic in spec.seed.
SbmSample sample_sbm(const SbmSpec& spec);

// Expected same-class neighbor fraction, size-weighted over classes.
// Throws DataError when some class has zero expected degree.
double planted_homophily(const SbmSpec& spec);

// Binary class prototypes (a block of floor(d/c) ones at offset r*floor(d/c))
// with every bit flipped independently with probability flip_prob.
// Unlabeled nodes get a prototype of all zeros before flipping.
Matrix sample_features(const LabelAssignment& y, int feature_dim, double flip_prob,
                       std::uint64_t seed);

}  // namespace bmgcn
