#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bmgcn/gnn.hpp"

namespace bmgcn {

// Canonical dataset directory:
//   edges.tsv     "src<TAB>dst" per line, 0-based
//   features.tsv  node id followed by d tab-separated reals
//   labels.tsv    "node<TAB>class"; nodes not listed are unlabeled
//   meta.tsv      optional "key<TAB>value" lines for n, d, c
// Throws DataError on missing or malformed files and on an empty edge list.
NodeData load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const NodeData& data);

// Shortest decimal form that round-trips (17 significant digits).
std::string format_real(double x);
double parse_real(const std::string& token);

// Final-layer embeddings: one row per node, the logits followed by the label
// id (-1 when unlabeled).
void write_embeddings(const std::filesystem::path& path, const Matrix& z, const LabelAssignment& y);
struct Embeddings {
  Matrix values;
  std::vector<int> labels;
};
Embeddings read_embeddings(const std::filesystem::path& path);

// Plain-text parameter dump of a trained BM-GCN model.
void save_checkpoint(const std::filesystem::path& path, const BmGcnModel& model);
BmGcnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace bmgcn
