#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bmgcn/gnn.hpp"

namespace bmgcn {

// Flat key = value run configuration. Every key has a default; unknown keys
// are rejected with ConfigError.
struct RunConfig {
  TrainConfig train;
  std::string dataset;
  std::string output = "runs";
  int n_splits = 10;
  int jobs = 1;
  std::vector<ModelKind> models{ModelKind::kBmGcn, ModelKind::kGcn, ModelKind::kMlp};

  struct KeyInfo {
    std::string name;
    std::string help;
  };
  static const std::vector<KeyInfo>& keys();

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // '#' starts a comment; blank lines are ignored.
  static RunConfig parse(std::istream& in);
  static RunConfig load(const std::filesystem::path& file);

  // "key = value" lines in keys() order.
  std::string canonical() const;
  // FNV-1a over the canonical keys except output and jobs (neither affects
  // results), as 16 hex digits.
  std::string hash() const;

  void validate() const;
};

}  // namespace bmgcn
