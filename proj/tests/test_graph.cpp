#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "bmgcn/errors.hpp"
#include "bmgcn/graph.hpp"

using namespace bmgcn;

namespace {

Graph path(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return load_graph(e, n);
}

LabelAssignment labels(std::vector<int> ids, int c) { return LabelAssignment::from_ids(ids, c); }

}  // namespace

TEST_CASE("load_graph dedupes, symmetrizes and drops self-loops") {
  const std::vector<std::pair<NodeId, NodeId>> pairs{{0, 1}, {1, 0}, {1, 1}};
  const Graph g = load_graph(pairs, 2);
  CHECK(g.num_nodes() == 2);
  CHECK(g.num_edges() == 1);
  CHECK(g.neighbors(0).size() == 1);
  CHECK(g.neighbors(0)[0] == 1);
  CHECK(g.neighbors(1)[0] == 0);
}

TEST_CASE("load_graph with no edges gives isolated nodes") {
  const Graph g = load_graph({}, 3);
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 0);
  CHECK(g.degrees() == std::vector<std::int64_t>{0, 0, 0});
}

TEST_CASE("path degrees") {
  CHECK(path(4).degrees() == std::vector<std::int64_t>{1, 2, 2, 1});
}

TEST_CASE("load_graph rejects bad input") {
  const std::vector<std::pair<NodeId, NodeId>> bad{{0, 3}};
  CHECK_THROWS_AS(load_graph(bad, 3), DataError);
  const std::vector<std::pair<NodeId, NodeId>> negative{{-1, 0}};
  CHECK_THROWS_AS(load_graph(negative, 3), DataError);
  CHECK_THROWS_AS(load_graph({}, 0), DataError);
}

TEST_CASE("load_graph invariants and idempotence on random input") {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const NodeId n = 1 + static_cast<NodeId>(gen() % 30);
    std::vector<std::pair<NodeId, NodeId>> pairs;
    const int m = static_cast<int>(gen() % 80);
    for (int k = 0; k < m; ++k) pairs.emplace_back(gen() % n, gen() % n);
    const Graph g = load_graph(pairs, n);

    CHECK(g.offsets().back() == 2 * g.num_edges());
    CHECK(std::is_sorted(g.offsets().begin(), g.offsets().end()));
    for (NodeId i = 0; i < n; ++i) {
      auto nb = g.neighbors(i);
      CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
      for (NodeId j : nb) {
        CHECK(j != i);
        auto back = g.neighbors(j);
        CHECK(std::find(back.begin(), back.end(), i) != back.end());
      }
    }
    const auto edges = g.edge_list();
    CHECK(load_graph(edges, n) == g);
  }
}

TEST_CASE("homophily ratio hand cases") {
  const std::vector<std::pair<NodeId, NodeId>> tri{{0, 1}, {1, 2}, {2, 0}};
  CHECK(homophily_ratio(load_graph(tri, 3), labels({0, 0, 0}, 1)) == 1.0);
  const std::vector<std::pair<NodeId, NodeId>> one{{0, 1}};
  CHECK(homophily_ratio(load_graph(one, 2), labels({0, 1}, 2)) == 0.0);
  CHECK(homophily_ratio(path(4), labels({0, 0, 1, 1}, 2)) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("homophily ratio skips isolated nodes and rejects unlabeled endpoints") {
  const std::vector<std::pair<NodeId, NodeId>> one{{0, 1}};
  // Node 2 is isolated and unlabeled; it is simply not counted.
  CHECK(homophily_ratio(load_graph(one, 3), labels({0, 0, -1}, 1)) == 1.0);
  CHECK_THROWS_AS(homophily_ratio(load_graph(one, 2), labels({0, -1}, 1)), DataError);
}

TEST_CASE("homophily ratio is invariant under class permutation") {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 10; ++trial) {
    const NodeId n = 40;
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (int k = 0; k < 120; ++k) pairs.emplace_back(gen() % n, gen() % n);
    const Graph g = load_graph(pairs, n);
    std::vector<int> ids(n), perm{0, 1, 2, 3};
    for (auto& id : ids) id = static_cast<int>(gen() % 4);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<int> permuted(n);
    for (NodeId v = 0; v < n; ++v) permuted[v] = perm[ids[v]];
    CHECK(homophily_ratio(g, labels(ids, 4)) == homophily_ratio(g, labels(permuted, 4)));
  }
}

TEST_CASE("homophily ratio extremes on bipartite and clustered graphs") {
  // Complete bipartite K_{3,3} with sides as classes: every edge crosses.
  std::vector<std::pair<NodeId, NodeId>> bip;
  for (NodeId i = 0; i < 3; ++i)
    for (NodeId j = 3; j < 6; ++j) bip.emplace_back(i, j);
  CHECK(homophily_ratio(load_graph(bip, 6), labels({0, 0, 0, 1, 1, 1}, 2)) == 0.0);
  // Two disjoint triangles, one per class.
  const std::vector<std::pair<NodeId, NodeId>> two{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
  CHECK(homophily_ratio(load_graph(two, 6), labels({0, 0, 0, 1, 1, 1}, 2)) == 1.0);
}

TEST_CASE("one_hot") {
  CHECK(one_hot(labels({0, 1}, 2)) == Matrix::Identity(2, 2));
  Matrix expected(2, 2);
  expected << 0, 1, 0, 0;
  CHECK(one_hot(labels({1, -1}, 2)) == expected);
  Matrix perm(3, 3);
  perm << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  CHECK(one_hot(labels({2, 0, 1}, 3)) == perm);
  Matrix uniform = one_hot(labels({-1, 0}, 2), Eigen::RowVectorXd::Constant(2, 0.5));
  CHECK(uniform(0, 0) == 0.5);
  CHECK(uniform(0, 1) == 0.5);
}

TEST_CASE("labels out of range are rejected") {
  CHECK_THROWS_AS(labels({0, 2}, 2), DataError);
}

TEST_CASE("stratified split proportions, disjointness and reproducibility") {
  std::vector<int> ids;
  for (int r = 0; r < 3; ++r) ids.insert(ids.end(), 10 + 5 * r, r);
  ids.push_back(-1);
  const auto y = labels(ids, 3);
  const SplitMask a = stratified_split(y, 42);
  const SplitMask b = stratified_split(y, 42);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);
  CHECK_NOTHROW(a.validate(y));
  for (int r = 0; r < 3; ++r) {
    int tr = 0, va = 0, te = 0;
    const int m = 10 + 5 * r;
    for (NodeId v = 0; v < y.size(); ++v) {
      if (!y.known(v) || y[v] != r) continue;
      tr += a.train[v];
      va += a.validation[v];
      te += a.test[v];
    }
    CHECK(tr == static_cast<int>(0.6 * m));
    CHECK(va == static_cast<int>(0.2 * m));
    CHECK(tr + va + te == m);
  }
  CHECK(a.train.back() + a.validation.back() + a.test.back() == 0);
  CHECK(stratified_split(y, 43).train != a.train);
}

TEST_CASE("stratified split rejects tiny classes") {
  CHECK_THROWS_AS(stratified_split(labels({0, 0, 0, 0, 0, 1, 1, 1, 1}, 2), 0), DataError);
}

TEST_CASE("split validation") {
  const auto y = labels({0, 1, -1}, 2);
  SplitMask s{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK_NOTHROW(s.validate(y));
  SplitMask overlap{{1, 0, 0}, {1, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(overlap.validate(y), DataError);
  SplitMask unlabeled{{0, 0, 1}, {0, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(unlabeled.validate(y), DataError);
  SplitMask empty{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(empty.validate(y), DataError);
}
