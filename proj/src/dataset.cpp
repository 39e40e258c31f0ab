#include "bmgcn/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bmgcn/errors.hpp"

namespace bmgcn {

namespace fs = std::filesystem;

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(const std::string& token) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    throw DataError("not a number: '" + token + "'");
  }
  if (used != token.size()) throw DataError("not a number: '" + token + "'");
  return value;
}

namespace {

long long parse_int(const std::string& token, const fs::path& file, std::size_t line) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw DataError(file.string() + ":" + std::to_string(line) + ": expected an integer, got '" +
                    token + "'");
  }
  return value;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

// Calls fn(fields, line_number) for every non-blank line.
template <typename Fn>
void for_each_row(const fs::path& file, Fn&& fn) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(split_tabs(line), number);
  }
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  return out;
}

}  // namespace

NodeData load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());

  std::map<std::string, long long> meta;
  if (fs::exists(dir / "meta.tsv")) {
    for_each_row(dir / "meta.tsv", [&](const auto& f, std::size_t line) {
      if (f.size() != 2) throw DataError("meta.tsv:" + std::to_string(line) + ": expected key and value");
      meta[f[0]] = parse_int(f[1], dir / "meta.tsv", line);
    });
  }

  std::vector<std::pair<NodeId, std::vector<double>>> rows;
  for_each_row(dir / "features.tsv", [&](const auto& f, std::size_t line) {
    if (f.size() < 2) throw DataError("features.tsv:" + std::to_string(line) + ": no feature values");
    std::vector<double> values;
    values.reserve(f.size() - 1);
    for (std::size_t k = 1; k < f.size(); ++k) values.push_back(parse_real(f[k]));
    rows.emplace_back(static_cast<NodeId>(parse_int(f[0], dir / "features.tsv", line)), std::move(values));
  });
  const auto n = static_cast<NodeId>(meta.count("n") ? meta["n"] : static_cast<long long>(rows.size()));
  if (n <= 0) throw DataError("dataset has no nodes");
  if (rows.size() != static_cast<std::size_t>(n)) {
    throw DataError("features.tsv has " + std::to_string(rows.size()) + " rows for " + std::to_string(n) + " nodes");
  }
  const auto d = static_cast<int>(rows.front().second.size());
  if (meta.count("d") && meta["d"] != d) throw DataError("meta.tsv d disagrees with features.tsv");
  NodeData data;
  data.features.resize(n, d);
  std::vector<std::uint8_t> seen(n, 0);
  for (const auto& [id, values] : rows) {
    if (id < 0 || id >= n) throw DataError("features.tsv: node id " + std::to_string(id) + " out of range");
    if (seen[id]++) throw DataError("features.tsv: node " + std::to_string(id) + " listed twice");
    if (static_cast<int>(values.size()) != d) throw DataError("features.tsv: ragged feature rows");
    for (int k = 0; k < d; ++k) data.features(id, k) = values[k];
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for_each_row(dir / "edges.tsv", [&](const auto& f, std::size_t line) {
    if (f.size() != 2) throw DataError("edges.tsv:" + std::to_string(line) + ": expected two columns");
    edges.emplace_back(static_cast<NodeId>(parse_int(f[0], dir / "edges.tsv", line)),
                       static_cast<NodeId>(parse_int(f[1], dir / "edges.tsv", line)));
  });
  if (edges.empty()) throw DataError("edges.tsv contains no edges");
  data.graph = load_graph(edges, n);

  std::vector<int> ids(n, -1);
  int max_label = -1;
  for_each_row(dir / "labels.tsv", [&](const auto& f, std::size_t line) {
    if (f.size() != 2) throw DataError("labels.tsv:" + std::to_string(line) + ": expected two columns");
    const auto v = parse_int(f[0], dir / "labels.tsv", line);
    const auto c = parse_int(f[1], dir / "labels.tsv", line);
    if (v < 0 || v >= n) throw DataError("labels.tsv:" + std::to_string(line) + ": node id out of range");
    if (c < 0) throw DataError("labels.tsv:" + std::to_string(line) + ": negative class id");
    ids[v] = static_cast<int>(c);
    max_label = std::max(max_label, static_cast<int>(c));
  });
  const int classes = meta.count("c") ? static_cast<int>(meta["c"]) : max_label + 1;
  if (classes < 1) throw DataError("labels.tsv contains no labels");
  data.labels = LabelAssignment::from_ids(ids, classes);
  data.validate();
  return data;
}

void save_dataset(const fs::path& dir, const NodeData& data) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto out = open_out(dir / "edges.tsv");
    for (const auto& [i, j] : data.graph.edge_list()) out << i << '\t' << j << '\n';
  }
  {
    auto out = open_out(dir / "features.tsv");
    for (Eigen::Index v = 0; v < data.features.rows(); ++v) {
      out << v;
      for (Eigen::Index k = 0; k < data.features.cols(); ++k) out << '\t' << format_real(data.features(v, k));
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "labels.tsv");
    for (NodeId v = 0; v < data.labels.size(); ++v) {
      if (data.labels.known(v)) out << v << '\t' << data.labels[v] << '\n';
    }
  }
  auto out = open_out(dir / "meta.tsv");
  out << "n\t" << data.graph.num_nodes() << "\nd\t" << data.features.cols() << "\nc\t"
      << data.labels.num_classes << '\n';
}

void write_embeddings(const fs::path& path, const Matrix& z, const LabelAssignment& y) {
  if (z.rows() != y.size()) throw std::invalid_argument("write_embeddings: one label per row");
  auto out = open_out(path);
  for (Eigen::Index v = 0; v < z.rows(); ++v) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) out << format_real(z(v, k)) << '\t';
    out << (y.known(static_cast<NodeId>(v)) ? y[static_cast<NodeId>(v)] : -1) << '\n';
  }
}

Embeddings read_embeddings(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  for_each_row(path, [&](const auto& f, std::size_t) { rows.push_back(f); });
  Embeddings e;
  if (rows.empty()) return e;
  const auto width = rows.front().size() - 1;
  e.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t v = 0; v < rows.size(); ++v) {
    if (rows[v].size() != width + 1) throw DataError("embedding rows have different widths");
    for (std::size_t k = 0; k < width; ++k) e.values(v, k) = parse_real(rows[v][k]);
    e.labels.push_back(static_cast<int>(parse_int(rows[v].back(), path, v + 1)));
  }
  return e;
}

namespace {

void dump(std::ostream& out, const std::string& name, const Matrix& m) {
  out << name << '\t' << m.rows() << '\t' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) out << (k ? "\t" : "") << format_real(m(i, k));
    out << '\n';
  }
}

}  // namespace

void save_checkpoint(const fs::path& path, const BmGcnModel& model) {
  auto out = open_out(path);
  dump(out, "mlp.w1", model.mlp.w1);
  dump(out, "mlp.b1", model.mlp.b1);
  dump(out, "mlp.w2", model.mlp.w2);
  dump(out, "mlp.b2", model.mlp.b2);
  for (std::size_t k = 0; k < model.gcn.layers.size(); ++k) {
    dump(out, "gcn." + std::to_string(k) + ".self", model.gcn.layers[k].self_weight);
    dump(out, "gcn." + std::to_string(k) + ".neighbor", model.gcn.layers[k].neighbor_weight);
  }
}

BmGcnModel load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint not found: " + path.string());
  std::map<std::string, Matrix> tensors;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto header = split_tabs(line);
    if (header.size() != 3) throw DataError("malformed checkpoint header: " + line);
    const auto rows = parse_int(header[1], path, 0), cols = parse_int(header[2], path, 0);
    Matrix m(rows, cols);
    for (long long i = 0; i < rows; ++i) {
      if (!std::getline(in, line)) throw DataError("truncated checkpoint tensor " + header[0]);
      const auto f = split_tabs(line);
      if (static_cast<long long>(f.size()) != cols) throw DataError("checkpoint row width mismatch in " + header[0]);
      for (long long k = 0; k < cols; ++k) m(i, k) = parse_real(f[k]);
    }
    tensors[header[0]] = std::move(m);
  }
  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint lacks tensor " + name);
    return it->second;
  };
  BmGcnModel model;
  model.mlp = {take("mlp.w1"), take("mlp.b1"), take("mlp.w2"), take("mlp.b2")};
  for (int k = 0; tensors.count("gcn." + std::to_string(k) + ".self"); ++k) {
    model.gcn.layers.push_back({take("gcn." + std::to_string(k) + ".self"),
                                take("gcn." + std::to_string(k) + ".neighbor")});
  }
  if (model.gcn.layers.empty()) throw DataError("checkpoint has no convolution layers");
  return model;
}

}  // namespace bmgcn
