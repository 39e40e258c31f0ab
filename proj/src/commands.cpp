#include "bmgcn/commands.hpp"

#include <fstream>
#include <json.hpp>
#include <ostream>

#include "bmgcn/dataset.hpp"
#include "bmgcn/errors.hpp"
#include "bmgcn/synthgen.hpp"

namespace bmgcn {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return 1;
}

NodeData generate_dataset(const GenerateOptions& opts) {
  const SbmSpec spec = SbmSpec::planted_partition(opts.n, opts.classes, opts.p_in, opts.p_out,
                                                  opts.feature_dim, opts.flip_prob, opts.seed);
  SbmSample sample = sample_sbm(spec);
  NodeData data{std::move(sample.graph), std::move(sample.labels), {}};
  data.features = sample_features(data.labels, opts.feature_dim, opts.flip_prob, opts.seed);
  return data;
}

GenerateReport cmd_generate(const GenerateOptions& opts, std::ostream& out) {
  if (opts.output.empty()) throw ConfigError("--output is required");
  const SbmSpec spec = SbmSpec::planted_partition(opts.n, opts.classes, opts.p_in, opts.p_out,
                                                  opts.feature_dim, opts.flip_prob, opts.seed);
  GenerateReport report;
  report.planted_homophily = planted_homophily(spec);
  const NodeData data = generate_dataset(opts);
  report.empirical_homophily = homophily_ratio(data.graph, data.labels);
  report.edges = data.graph.num_edges();
  save_dataset(opts.output, data);
  out << "nodes\t" << data.graph.num_nodes() << "\nedges\t" << report.edges
      << "\nplanted_homophily\t" << format_real(report.planted_homophily)
      << "\nempirical_homophily\t" << format_real(report.empirical_homophily) << '\n';
  return report;
}

namespace {

void print_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) out << (k ? "\t" : "") << format_real(m(i, k));
    out << '\n';
  }
}

}  // namespace

AnalyzeReport cmd_analyze(const fs::path& dataset, double alpha, std::ostream& out) {
  const NodeData data = load_dataset(dataset);
  AnalyzeReport r;
  r.n = data.graph.num_nodes();
  r.edges = data.graph.num_edges();
  r.classes = data.num_classes();
  r.feature_dim = static_cast<int>(data.features.cols());
  r.homophily = homophily_ratio(data.graph, data.labels);
  r.block = block_matrix(one_hot(data.labels), data.graph);
  r.similarity = similarity_matrix(r.block, alpha);

  out << "nodes\t" << r.n << "\nedges\t" << r.edges << "\nclasses\t" << r.classes
      << "\nfeatures\t" << r.feature_dim << "\nhomophily\t" << format_real(r.homophily)
      << "\nblock_matrix\n";
  print_matrix(out, r.block);
  out << "similarity_matrix\talpha=" << format_real(alpha) << '\n';
  print_matrix(out, r.similarity);
  return r;
}

std::vector<SummaryRecord> cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const NodeData data = load_dataset(config.dataset);
  const fs::path out_dir = config.output;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  std::ofstream metrics(out_dir / "metrics.jsonl");
  std::ofstream summary_file(out_dir / "summary.jsonl");
  if (!metrics || !summary_file) throw DataError("cannot write into " + out_dir.string());
  std::ofstream(out_dir / "config.txt") << config.canonical();

  fs::path dataset_path = fs::path(config.dataset).lexically_normal();
  if (!dataset_path.has_filename()) dataset_path = dataset_path.parent_path();
  const std::string dataset_name = dataset_path.filename().string();
  const std::string hash = config.hash();
  std::vector<SummaryRecord> records;
  for (ModelKind kind : config.models) {
    const std::string model = to_string(kind);
    log << "training " << model << " on " << config.n_splits << " split(s)" << std::endl;
    const SplitSummary s = run_splits(kind, data, config.train, config.n_splits, config.jobs);
    for (const SplitRun& run : s.runs) {
      for (const EpochRecord& e : run.result.history) {
        ordered_json j;
        j["model"] = model;
        j["split"] = run.split;
        j["epoch"] = e.epoch;
        j["loss_mlp"] = e.loss_mlp;
        j["loss_gcn"] = e.loss_gcn;
        j["loss_final"] = e.loss_final;
        j["train_acc"] = e.train_acc;
        j["val_acc"] = e.val_acc;
        j["test_acc"] = e.test_acc;
        metrics << j.dump() << '\n';
      }
      log << "  split " << run.split << " test_acc " << format_real(run.result.test_acc) << std::endl;
    }
    if (kind == ModelKind::kBmGcn) save_checkpoint(out_dir / "checkpoint.tsv", s.runs.front().result.model);

    SummaryRecord rec{dataset_name, model, config.n_splits, s.mean_acc, s.std_acc, hash};
    ordered_json j;
    j["dataset"] = rec.dataset;
    j["model"] = rec.model;
    j["n_splits"] = rec.n_splits;
    j["mean_acc"] = rec.mean_acc;
    j["std_acc"] = rec.std_acc;
    j["config_hash"] = rec.config_hash;
    summary_file << j.dump() << '\n';
    log << model << " mean_acc " << format_real(rec.mean_acc) << " std_acc " << format_real(rec.std_acc)
        << std::endl;
    records.push_back(std::move(rec));
  }
  return records;
}

void cmd_export_embeddings(const RunConfig& config, const fs::path& checkpoint, const fs::path& output) {
  config.train.validate();
  if (config.dataset.empty()) throw ConfigError("dataset is required");
  if (!fs::exists(checkpoint)) throw DataError("checkpoint not found: " + checkpoint.string());
  const BmGcnModel model = load_checkpoint(checkpoint);
  const NodeData data = load_dataset(config.dataset);
  if (model.mlp.w1.rows() != data.features.cols() || model.mlp.w2.cols() != data.num_classes()) {
    throw DataError("checkpoint shapes do not match the dataset");
  }
  const SplitMask split = stratified_split(data.labels, split_seed(config.train.seed, 0));
  write_embeddings(output, bmgcn_logits(model, data, split, config.train), data.labels);
}

}  // namespace bmgcn
