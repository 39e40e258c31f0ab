#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "bmgcn/commands.hpp"
#include "bmgcn/errors.hpp"

namespace {

// Registers --<key> for every run-config key; flag values override the config file.
void add_config_flags(CLI::App* cmd, std::map<std::string, std::string>& overrides) {
  for (const auto& key : bmgcn::RunConfig::keys()) {
    cmd->add_option_function<std::string>(
        "--" + key.name, [&overrides, name = key.name](const std::string& v) { overrides[name] = v; },
        key.help);
  }
}

bmgcn::RunConfig resolve_config(const std::string& file,
                                const std::map<std::string, std::string>& overrides) {
  bmgcn::RunConfig cfg = file.empty() ? bmgcn::RunConfig{} : bmgcn::RunConfig::load(file);
  for (const auto& [key, value] : overrides) cfg.set(key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-guided graph convolution: data generation, analysis and training"};
  app.require_subcommand(1);

  bmgcn::GenerateOptions gen;
  std::string gen_output;
  auto* generate = app.add_subcommand("generate", "sample a stochastic-block-model dataset");
  generate->add_option("--n", gen.n, "node count")->capture_default_str();
  generate->add_option("--classes", gen.classes, "class count")->capture_default_str();
  generate->add_option("--p-in", gen.p_in, "same-class edge probability")->capture_default_str();
  generate->add_option("--p-out", gen.p_out, "cross-class edge probability")->capture_default_str();
  generate->add_option("--dim", gen.feature_dim, "feature dimension")->capture_default_str();
  generate->add_option("--flip-prob", gen.flip_prob, "feature bit flip probability")->capture_default_str();
  generate->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  generate->add_option("--output", gen_output, "dataset directory to write")->required();

  std::string analyze_dataset;
  double analyze_alpha = 1.0;
  auto* analyze = app.add_subcommand("analyze", "report homophily and ground-truth block matrices");
  analyze->add_option("--dataset", analyze_dataset, "dataset directory")->required();
  analyze->add_option("--alpha", analyze_alpha, "diagonal enhancement for the similarity matrix")
      ->capture_default_str();

  std::string train_config;
  std::map<std::string, std::string> train_overrides;
  auto* train = app.add_subcommand("train", "train BM-GCN and baselines over random splits");
  train->add_option("--config", train_config, "run configuration file");
  add_config_flags(train, train_overrides);

  std::string export_config, checkpoint, embeddings_out;
  std::map<std::string, std::string> export_overrides;
  auto* exporter = app.add_subcommand("export-embeddings", "write final-layer embeddings with labels");
  exporter->add_option("--config", export_config, "run configuration file");
  exporter->add_option("--checkpoint", checkpoint, "parameter dump written by train")->required();
  exporter->add_option("--embeddings", embeddings_out, "output matrix file")->required();
  add_config_flags(exporter, export_overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bmgcn::kExitConfig;
  }

  try {
    if (generate->parsed()) {
      gen.output = gen_output;
      bmgcn::cmd_generate(gen, std::cout);
    } else if (analyze->parsed()) {
      bmgcn::cmd_analyze(analyze_dataset, analyze_alpha, std::cout);
    } else if (train->parsed()) {
      bmgcn::cmd_train(resolve_config(train_config, train_overrides), std::cerr);
    } else if (exporter->parsed()) {
      bmgcn::cmd_export_embeddings(resolve_config(export_config, export_overrides), checkpoint,
                                   embeddings_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bmgcn::exit_code_for(e);
  }
  return bmgcn::kExitOk;
}
