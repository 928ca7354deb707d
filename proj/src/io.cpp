#include "hetnr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hetnr/errors.hpp"

namespace hetnr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingFile("cannot open file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos
                                               ? std::string::npos
                                               : comma - start);
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(std::move(field));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

long long parse_int(const std::string& s, const std::string& where) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw SchemaMismatch("bad integer '" + s + "' in " + where);
  }
  return v;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaMismatch("bad float '" + s + "' in " + where);
  }
}

// "nodes_A.csv" -> "A"; "edges_AP.csv" -> "AP"
std::string name_from_file(const fs::path& p, const std::string& prefix) {
  std::string stem = p.stem().string();
  if (stem.rfind(prefix, 0) != 0) {
    throw SchemaMismatch("file " + p.string() + " does not match " + prefix +
                         "<name>.csv naming");
  }
  return stem.substr(prefix.size());
}

}  // namespace

Schema load_schema(const fs::path& schema_file) {
  json j;
  try {
    j = json::parse(read_file(schema_file));
  } catch (const json::parse_error& e) {
    throw SchemaMismatch("schema file " + schema_file.string() +
                         " does not parse: " + e.what());
  }
  std::vector<std::string> types = j.at("node_types").get<std::vector<std::string>>();
  std::vector<EdgeType> edges;
  for (const auto& e : j.at("edge_types")) {
    edges.push_back({e.at("name").get<std::string>(),
                     e.at("src").get<std::string>(),
                     e.at("dst").get<std::string>()});
  }
  return Schema(std::move(types), std::move(edges));
}

void save_schema(const fs::path& schema_file, const Schema& schema) {
  json j;
  j["node_types"] = schema.node_types();
  j["edge_types"] = json::array();
  for (const auto& e : schema.edge_types()) {
    j["edge_types"].push_back({{"name", e.name}, {"src", e.src}, {"dst", e.dst}});
  }
  std::ofstream out(schema_file, std::ios::binary);
  if (!out) throw MissingFile("cannot write " + schema_file.string());
  out << j.dump(2) << "\n";
}

HinGraph load_graph(const std::vector<fs::path>& node_files,
                    const std::vector<fs::path>& edge_files,
                    const fs::path& schema_file) {
  HinGraph g;
  g.schema = load_schema(schema_file);

  for (const auto& file : node_files) {
    const std::string type = name_from_file(file, "nodes_");
    if (!g.schema.has_node_type(type)) {
      throw SchemaMismatch("node file " + file.string() +
                           " references undeclared type " + type);
    }
    std::istringstream in(read_file(file));
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("empty node file " + file.string());

    std::vector<std::pair<long long, std::vector<double>>> rows;
    Index dim = -1;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      auto fields = split_csv_line(line);
      const std::string where = file.filename().string() + " row " + std::to_string(lineno);
      long long id = parse_int(fields[0], where);
      std::vector<double> feat(fields.size() - 1);
      for (std::size_t i = 1; i < fields.size(); ++i) {
        feat[i - 1] = parse_double(fields[i], where);
      }
      if (dim < 0) {
        dim = static_cast<Index>(feat.size());
      } else if (static_cast<Index>(feat.size()) != dim) {
        throw FeatureDimInconsistent("row " + std::to_string(lineno) + " of " +
                                     file.string() + " has " +
                                     std::to_string(feat.size()) +
                                     " features, expected " + std::to_string(dim));
      }
      rows.emplace_back(id, std::move(feat));
    }

    const Index n = static_cast<Index>(rows.size());
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    MatrixXd x(n, std::max<Index>(dim, 0));
    for (const auto& [id, feat] : rows) {
      if (id < 0 || id >= n || seen[static_cast<std::size_t>(id)]) {
        throw SchemaMismatch("node ids in " + file.string() +
                             " must be the dense range 0.." + std::to_string(n - 1));
      }
      seen[static_cast<std::size_t>(id)] = true;
      for (Index c = 0; c < x.cols(); ++c) x(id, c) = feat[static_cast<std::size_t>(c)];
    }
    g.node_counts[type] = n;
    g.feature_dims[type] = x.cols();
    g.features[type] = std::move(x);
  }

  for (const auto& t : g.schema.node_types()) {
    if (!g.node_counts.count(t)) {
      throw MissingFile("no node file supplied for type " + t);
    }
  }

  for (const auto& file : edge_files) {
    const std::string etype = name_from_file(file, "edges_");
    if (!g.schema.has_edge_type(etype)) {
      throw SchemaMismatch("edge file " + file.string() +
                           " references undeclared edge type " + etype);
    }
    const EdgeType& et = g.schema.edge_type(etype);
    const Index n_src = g.node_counts.at(et.src);
    const Index n_dst = g.node_counts.at(et.dst);

    std::istringstream in(read_file(file));
    std::string line;
    std::getline(in, line);  // header
    std::vector<Eigen::Triplet<double, Index>> trips;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      auto fields = split_csv_line(line);
      const std::string where = file.filename().string() + " row " + std::to_string(lineno);
      if (fields.size() != 2) throw SchemaMismatch("expected src,dst in " + where);
      long long src = parse_int(fields[0], where);
      long long dst = parse_int(fields[1], where);
      if (src < 0 || src >= n_src) {
        throw DanglingEdge(where + ": src id " + std::to_string(src) +
                           " out of range for type " + et.src + " (" +
                           std::to_string(n_src) + " nodes)");
      }
      if (dst < 0 || dst >= n_dst) {
        throw DanglingEdge(where + ": dst id " + std::to_string(dst) +
                           " out of range for type " + et.dst + " (" +
                           std::to_string(n_dst) + " nodes)");
      }
      trips.emplace_back(src, dst, 1.0);
    }
    SparseMatd a(n_src, n_dst);
    a.setFromTriplets(trips.begin(), trips.end());
    // setFromTriplets sums duplicates; adjacency is binary by contract.
    for (Index k = 0; k < a.nonZeros(); ++k) a.valuePtr()[k] = 1.0;
    g.adjacency[etype] = std::move(a);
  }

  for (const auto& et : g.schema.edge_types()) {
    if (!g.adjacency.count(et.name)) {
      throw MissingFile("no edge file supplied for edge type " + et.name);
    }
  }

  g.validate();
  return g;
}

HinGraph load_graph_dir(const fs::path& dir) {
  if (!fs::exists(dir / "schema.json")) {
    throw MissingFile("dataset directory " + dir.string() + " has no schema.json");
  }
  Schema schema = load_schema(dir / "schema.json");
  std::vector<fs::path> node_files, edge_files;
  for (const auto& t : schema.node_types()) node_files.push_back(dir / ("nodes_" + t + ".csv"));
  for (const auto& e : schema.edge_types()) edge_files.push_back(dir / ("edges_" + e.name + ".csv"));
  return load_graph(node_files, edge_files, dir / "schema.json");
}

void save_graph(const fs::path& dir, const HinGraph& graph) {
  fs::create_directories(dir);
  save_schema(dir / "schema.json", graph.schema);

  char buf[64];
  for (const auto& t : graph.schema.node_types()) {
    std::ofstream out(dir / ("nodes_" + t + ".csv"), std::ios::binary);
    const MatrixXd& x = graph.features.at(t);
    out << "id";
    for (Index c = 0; c < x.cols(); ++c) out << ",f" << c;
    out << "\n";
    for (Index r = 0; r < x.rows(); ++r) {
      out << r;
      for (Index c = 0; c < x.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", x(r, c));
        out << ',' << buf;
      }
      out << "\n";
    }
  }

  for (const auto& et : graph.schema.edge_types()) {
    std::ofstream out(dir / ("edges_" + et.name + ".csv"), std::ios::binary);
    out << "src,dst\n";
    const SparseMatd& a = graph.adjacency.at(et.name);
    for (Index r = 0; r < a.outerSize(); ++r) {
      for (SparseMatd::InnerIterator it(a, r); it; ++it) {
        out << it.row() << ',' << it.col() << "\n";
      }
    }
  }
}

TargetTask load_labels(const fs::path& labels_file, const std::string& anchor_type,
                       const HinGraph& graph) {
  std::istringstream in(read_file(labels_file));
  std::string line;
  std::getline(in, line);  // header
  const Index n = graph.node_count(anchor_type);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::size_t lineno = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    const std::string where = labels_file.filename().string() + " row " + std::to_string(lineno);
    if (fields.size() != 2) throw SchemaMismatch("expected id,label in " + where);
    long long id = parse_int(fields[0], where);
    long long y = parse_int(fields[1], where);
    if (id < 0 || id >= n) {
      throw DanglingEdge(where + ": id " + std::to_string(id) +
                         " out of range for anchor type " + anchor_type);
    }
    labels[static_cast<std::size_t>(id)] = static_cast<int>(y);
    max_label = std::max(max_label, static_cast<int>(y));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      throw SchemaMismatch("anchor node " + std::to_string(i) + " has no label");
    }
  }
  TargetTask task{anchor_type, std::move(labels), max_label + 1};
  task.validate(graph);
  return task;
}

void save_labels(const fs::path& labels_file, const TargetTask& task) {
  std::ofstream out(labels_file, std::ios::binary);
  out << "id,label\n";
  for (std::size_t i = 0; i < task.labels.size(); ++i) {
    out << i << ',' << task.labels[i] << "\n";
  }
}

}  // namespace hetnr
