#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bmgcn/config.hpp"

namespace bmgcn {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitNumerical = 4 };
int exit_code_for(const std::exception& e);

struct GenerateOptions {
  NodeId n = 1000;
  int classes = 4;
  double p_in = 0.02;
  double p_out = 0.002;
  int feature_dim = 64;
  double flip_prob = 0.3;
  std::uint64_t seed = 0;
  std::filesystem::path output;
};

struct GenerateReport {
  double planted_homophily = 0.0;
  double empirical_homophily = 0.0;
  std::int64_t edges = 0;
};

NodeData generate_dataset(const GenerateOptions& opts);
GenerateReport cmd_generate(const GenerateOptions& opts, std::ostream& out);

struct AnalyzeReport {
  NodeId n = 0;
  std::int64_t edges = 0;
  int classes = 0;
  int feature_dim = 0;
  double homophily = 0.0;
  Matrix block;       // ground-truth block matrix
  Matrix similarity;  // its similarity matrix at the requested alpha
};

AnalyzeReport cmd_analyze(const std::filesystem::path& dataset, double alpha, std::ostream& out);

struct SummaryRecord {
  std::string dataset;
  std::string model;
  int n_splits = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  std::string config_hash;
};

// Trains every configured model over the configured splits and writes, under
// config.output: metrics.jsonl (one record per epoch per split), summary.jsonl
// (one record per model), checkpoint.tsv (BM-GCN parameters of split 0) and
// config.txt.
std::vector<SummaryRecord> cmd_train(const RunConfig& config, std::ostream& log);

// Writes final-layer logits of the checkpointed model (evaluated with split 0's
// training labels) plus the label column.
void cmd_export_embeddings(const RunConfig& config, const std::filesystem::path& checkpoint,
                           const std::filesystem::path& output);

}  // namespace bmgcn
