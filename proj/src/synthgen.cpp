#include "bmgcn/synthgen.hpp"

#include <numeric>
#include <string>

#include "bmgcn/errors.hpp"
#include "bmgcn/rng.hpp"

namespace bmgcn {

NodeId SbmSpec::num_nodes() const {
  return std::accumulate(class_sizes.begin(), class_sizes.end(), NodeId{0});
}

void SbmSpec::validate() const {
  const int c = num_classes();
  if (c < 1) throw ConfigError("SBM needs at least one class");
  for (NodeId s : class_sizes) {
    if (s <= 0) throw ConfigError("SBM class sizes must be positive");
  }
  if (edge_prob.rows() != c || edge_prob.cols() != c) {
    throw ConfigError("SBM edge probability matrix must be c x c");
  }
  for (int r = 0; r < c; ++r) {
    for (int t = 0; t < c; ++t) {
      const double p = edge_prob(r, t);
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("SBM edge probabilities must lie in [0, 1]");
      if (p != edge_prob(t, r)) throw ConfigError("SBM edge probability matrix must be symmetric");
    }
  }
  if (!(flip_prob >= 0.0 && flip_prob < 0.5)) throw ConfigError("flip_prob must lie in [0, 0.5)");
  if (feature_dim < c) throw ConfigError("feature_dim must be at least the class count");
}

SbmSpec SbmSpec::planted_partition(NodeId n, int classes, double p_in, double p_out,
                                   int feature_dim, double flip_prob, std::uint64_t seed) {
  if (classes < 1 || n < classes) throw ConfigError("need at least one node per class");
  SbmSpec spec;
  spec.class_sizes.assign(classes, n / classes);
  for (int r = 0; r < n % classes; ++r) ++spec.class_sizes[r];
  spec.edge_prob = Matrix::Constant(classes, classes, p_out);
  spec.edge_prob.diagonal().setConstant(p_in);
  spec.feature_dim = feature_dim;
  spec.flip_prob = flip_prob;
  spec.seed = seed;
  return spec;
}

SbmSample sample_sbm(const SbmSpec& spec) {
  spec.validate();
  const NodeId n = spec.num_nodes();
  std::vector<int> cls;
  cls.reserve(n);
  for (int r = 0; r < spec.num_classes(); ++r) cls.insert(cls.end(), spec.class_sizes[r], r);

  Rng rng(mix_seed(spec.seed, 0x5b3));
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double p = spec.edge_prob(cls[i], cls[j]);
      // p of exactly 0 or 1 consumes no randomness.
      if (p >= 1.0 || (p > 0.0 && rng.bernoulli(p))) edges.emplace_back(i, j);
    }
  }
  return {load_graph(edges, n), LabelAssignment::from_ids(cls, spec.num_classes())};
}

double planted_homophily(const SbmSpec& spec) {
  spec.validate();
  const int c = spec.num_classes();
  const double n = spec.num_nodes();
  double h = 0.0;
  for (int r = 0; r < c; ++r) {
    const double size_r = spec.class_sizes[r];
    const double same = (size_r - 1.0) * spec.edge_prob(r, r);
    double other = 0.0;
    for (int t = 0; t < c; ++t) {
      if (t != r) other += spec.class_sizes[t] * spec.edge_prob(r, t);
    }
    if (same + other <= 0.0) {
      throw DataError("class " + std::to_string(r) + " has zero expected degree");
    }
    h += (size_r / n) * same / (same + other);
  }
  return h;
}

Matrix sample_features(const LabelAssignment& y, int feature_dim, double flip_prob,
                       std::uint64_t seed) {
  const int c = y.num_classes;
  if (feature_dim < c) throw ConfigError("feature_dim must be at least the class count");
  const int block = feature_dim / c;
  Rng rng(mix_seed(seed, 0xfea7));
  Matrix x = Matrix::Zero(y.size(), feature_dim);
  for (NodeId v = 0; v < y.size(); ++v) {
    if (y.known(v)) x.row(v).segment(y[v] * block, block).setOnes();
    for (int k = 0; k < feature_dim; ++k) {
      if (rng.bernoulli(flip_prob)) x(v, k) = 1.0 - x(v, k);
    }
  }
  return x;
}

}  // namespace bmgcn
