#include "bmgcn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bmgcn/dataset.hpp"
#include "bmgcn/errors.hpp"

namespace bmgcn {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& value) {
  try {
    return parse_real(value);
  } catch (const DataError&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

}  // namespace

const std::vector<RunConfig::KeyInfo>& RunConfig::keys() {
  static const std::vector<KeyInfo> k = {
      {"dataset", "dataset directory in the canonical layout"},
      {"output", "directory for metrics, summary and checkpoint"},
      {"models", "comma-separated subset of bmgcn,gcn,mlp"},
      {"n_splits", "number of stratified 60/20/20 splits"},
      {"jobs", "splits trained concurrently"},
      {"seed", "seed for splits, initialization and dropout"},
      {"layers", "graph convolution layers K"},
      {"hidden", "hidden width of the MLP and convolution layers"},
      {"alpha", "diagonal enhancement factor of the similarity matrix"},
      {"beta", "self-loop coefficient of the refined adjacency"},
      {"lambda", "weight of the GCN loss in the combined loss"},
      {"lr", "Adam learning rate"},
      {"weight_decay", "L2 penalty added to the gradient"},
      {"dropout", "dropout rate on layer inputs"},
      {"pretrain_epochs", "MLP pretraining epochs"},
      {"joint_epochs", "maximum joint training epochs"},
      {"patience", "early-stopping patience on validation accuracy (0 = off)"},
      {"stop_gradient", "block the block-model gradient path into the MLP"},
  };
  return k;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  TrainConfig& t = train;
  if (key == "dataset") {
    dataset = value;
  } else if (key == "output") {
    output = value;
  } else if (key == "models") {
    models.clear();
    std::istringstream in(value);
    std::string name;
    while (std::getline(in, name, ',')) models.push_back(parse_model_kind(trim(name)));
    if (models.empty()) throw ConfigError("models: at least one model is required");
  } else if (key == "n_splits") {
    n_splits = to_int<int>(key, value);
  } else if (key == "jobs") {
    jobs = to_int<int>(key, value);
  } else if (key == "seed") {
    t.seed = to_int<std::uint64_t>(key, value);
  } else if (key == "layers") {
    t.layers = to_int<int>(key, value);
  } else if (key == "hidden") {
    t.hidden = to_int<int>(key, value);
  } else if (key == "alpha") {
    t.alpha = to_real(key, value);
  } else if (key == "beta") {
    t.beta = to_real(key, value);
  } else if (key == "lambda") {
    t.lambda = to_real(key, value);
  } else if (key == "lr") {
    t.lr = to_real(key, value);
  } else if (key == "weight_decay") {
    t.weight_decay = to_real(key, value);
  } else if (key == "dropout") {
    t.dropout = to_real(key, value);
  } else if (key == "pretrain_epochs") {
    t.pretrain_epochs = to_int<int>(key, value);
  } else if (key == "joint_epochs") {
    t.joint_epochs = to_int<int>(key, value);
  } else if (key == "patience") {
    t.patience = to_int<int>(key, value);
  } else if (key == "stop_gradient") {
    t.stop_gradient = to_bool(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

std::string RunConfig::get(const std::string& key) const {
  const TrainConfig& t = train;
  if (key == "dataset") return dataset;
  if (key == "output") return output;
  if (key == "models") {
    std::string out;
    for (auto m : models) out += (out.empty() ? "" : ",") + to_string(m);
    return out;
  }
  if (key == "n_splits") return std::to_string(n_splits);
  if (key == "jobs") return std::to_string(jobs);
  if (key == "seed") return std::to_string(t.seed);
  if (key == "layers") return std::to_string(t.layers);
  if (key == "hidden") return std::to_string(t.hidden);
  if (key == "alpha") return format_real(t.alpha);
  if (key == "beta") return format_real(t.beta);
  if (key == "lambda") return format_real(t.lambda);
  if (key == "lr") return format_real(t.lr);
  if (key == "weight_decay") return format_real(t.weight_decay);
  if (key == "dropout") return format_real(t.dropout);
  if (key == "pretrain_epochs") return std::to_string(t.pretrain_epochs);
  if (key == "joint_epochs") return std::to_string(t.joint_epochs);
  if (key == "patience") return std::to_string(t.patience);
  if (key == "stop_gradient") return t.stop_gradient ? "true" : "false";
  throw ConfigError("unknown configuration key '" + key + "'");
}

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  return parse(in);
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + get(k.name) + "\n";
  return out;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& k : keys()) {
    if (k.name == "output" || k.name == "jobs") continue;
    for (char ch : k.name + "=" + get(k.name) + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  train.validate();
  if (dataset.empty()) throw ConfigError("dataset is required");
  if (n_splits < 1) throw ConfigError("n_splits must be at least 1");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
}

}  // namespace bmgcn
