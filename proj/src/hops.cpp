#include "hetnr/hops.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "hetnr/rng.hpp"

namespace hetnr {

using nlohmann::json;

std::string to_string(const HopCandidate& c) {
  if (c.is_zero()) return "O";
  std::string s = "{";
  for (std::size_t i = 0; i < c.types.size(); ++i) {
    if (i) s += ",";
    s += c.types[i];
  }
  return s + "}";
}

Index SearchSpace::total_architectures() const {
  Index total = 1;
  for (const auto& hop : per_hop) {
    const Index m = static_cast<Index>(hop.size());
    if (total > std::numeric_limits<Index>::max() / std::max<Index>(m, 1)) {
      return std::numeric_limits<Index>::max();
    }
    total *= m;
  }
  return total;
}

int SearchSpace::candidate_index(const HopCandidate& c) const {
  if (c.hop < 1 || c.hop > num_hops) {
    throw InconsistentSpace("candidate hop " + std::to_string(c.hop) +
                            " outside space with K=" + std::to_string(num_hops));
  }
  const auto& list = per_hop[static_cast<std::size_t>(c.hop - 1)];
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i] == c) return static_cast<int>(i);
  }
  throw InconsistentSpace("candidate " + to_string(c) + " not in search space");
}

std::set<std::string> reachable_types(const Schema& schema,
                                      const std::string& anchor, int hop) {
  schema.type_index(anchor);  // throws UnknownType
  if (hop < 1) throw Error("hop must be >= 1");
  std::set<std::string> frontier{anchor};
  for (int step = 0; step < hop; ++step) {
    std::set<std::string> next;
    for (const auto& et : schema.edge_types()) {
      if (frontier.count(et.src)) next.insert(et.dst);
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return frontier;
}

SearchSpace build_search_space(const Schema& schema, const std::string& anchor,
                               int num_hops) {
  if (num_hops < 1) throw Error("K must be >= 1");
  SearchSpace space;
  space.anchor_type = anchor;
  space.num_hops = num_hops;
  for (int k = 1; k <= num_hops; ++k) {
    std::set<std::string> reach = reachable_types(schema, anchor, k);
    std::vector<std::string> sorted(reach.begin(), reach.end());

    std::vector<HopCandidate> cands;
    cands.push_back(HopCandidate{k, {}});  // zero option first
    const std::size_t m = sorted.size();
    for (std::size_t bits = 1; bits < (std::size_t{1} << m); ++bits) {
      HopCandidate c{k, {}};
      for (std::size_t i = 0; i < m; ++i) {
        if (bits & (std::size_t{1} << i)) c.types.push_back(sorted[i]);
      }
      cands.push_back(std::move(c));
    }
    std::stable_sort(cands.begin() + 1, cands.end(),
                     [](const HopCandidate& a, const HopCandidate& b) {
                       if (a.types.size() != b.types.size()) {
                         return a.types.size() < b.types.size();
                       }
                       return a.types < b.types;
                     });
    space.per_hop.push_back(std::move(cands));
  }
  return space;
}

namespace {

// A^hop with values clamped back to 1 after every product, so entries mean
// "at least one walk" rather than walk counts (which overflow fast).
SparseMatd boolean_power(const SparseMatd& a, int hop) {
  SparseMatd b = a;
  for (int step = 1; step < hop; ++step) {
    SparseMatd next = b * a;
    next.prune(0.0);
    for (Index k = 0; k < next.nonZeros(); ++k) next.valuePtr()[k] = 1.0;
    b = std::move(next);
  }
  return b;
}

std::vector<Index> anchors_without_out_edges(const SparseMatd& adj, Index off,
                                             Index n_anchor) {
  std::vector<Index> isolated;
  for (Index a = 0; a < n_anchor; ++a) {
    if (adj.row(off + a).nonZeros() == 0) isolated.push_back(a);
  }
  return isolated;
}

}  // namespace

HopNeighborhood khop_exact(const HinGraph& graph, const std::string& anchor,
                           int hop) {
  if (hop < 1) throw Error("hop must be >= 1");
  const Index n_anchor = graph.node_count(anchor);
  const Index off = graph.type_offset(anchor);
  const SparseMatd adj = graph.union_adjacency();
  const SparseMatd power = boolean_power(adj, hop);

  HopNeighborhood nb;
  nb.hop = hop;
  nb.anchor_type = anchor;
  nb.counts = Eigen::VectorXi::Zero(graph.total_nodes());
  for (Index v = 0; v < power.outerSize(); ++v) {
    nb.counts[v] = static_cast<int>(power.row(v).nonZeros());
  }
  nb.reach = power.middleRows(off, n_anchor);
  nb.isolated_anchors = anchors_without_out_edges(adj, off, n_anchor);
  return nb;
}

HopNeighborhood khop_randomwalk(const HinGraph& graph, const std::string& anchor,
                                int hop, const RandomWalkParams& params,
                                std::uint64_t seed) {
  if (hop < 1) throw Error("hop must be >= 1");
  if (params.walk_len < hop) {
    throw Error("walk_len must be >= hop (" + std::to_string(params.walk_len) +
                " < " + std::to_string(hop) + ")");
  }
  const Index n_anchor = graph.node_count(anchor);
  const Index off = graph.type_offset(anchor);
  const Index total = graph.total_nodes();
  const SparseMatd adj = graph.union_adjacency();

  // Estimated k-hop neighbor sets for every node seen at a walk position
  // that still has a k-step continuation in the same walk.
  std::map<Index, std::set<Index>> sampled;
  std::vector<Index> walk(static_cast<std::size_t>(params.walk_len) + 1);

  for (Index a = 0; a < n_anchor; ++a) {
    auto rng = make_rng(seed, "walks", static_cast<std::uint64_t>(a));
    for (int w = 0; w < params.num_walks; ++w) {
      walk[0] = off + a;
      int len = 0;
      for (int step = 0; step < params.walk_len; ++step) {
        const Index cur = walk[static_cast<std::size_t>(step)];
        const Index deg = adj.row(cur).nonZeros();
        if (deg == 0) break;
        Index pick = static_cast<Index>(
            std::uniform_int_distribution<long long>(0, deg - 1)(rng));
        SparseMatd::InnerIterator it(adj, cur);
        for (; pick > 0; --pick) ++it;
        walk[static_cast<std::size_t>(step + 1)] = it.col();
        len = step + 1;
      }
      for (int j = 0; j + hop <= len; ++j) {
        sampled[walk[static_cast<std::size_t>(j)]].insert(
            walk[static_cast<std::size_t>(j + hop)]);
      }
    }
  }

  HopNeighborhood nb;
  nb.hop = hop;
  nb.anchor_type = anchor;
  nb.counts = Eigen::VectorXi::Zero(total);
  nb.isolated_anchors = anchors_without_out_edges(adj, off, n_anchor);

  if (params.exact_counts) {
    const SparseMatd power = boolean_power(adj, hop);
    for (Index v = 0; v < power.outerSize(); ++v) {
      nb.counts[v] = static_cast<int>(power.row(v).nonZeros());
    }
  } else {
    for (const auto& [v, s] : sampled) {
      nb.counts[v] = static_cast<int>(s.size());
    }
  }

  std::vector<Eigen::Triplet<double, Index>> trips;
  for (Index a = 0; a < n_anchor; ++a) {
    auto it = sampled.find(off + a);
    if (it == sampled.end()) continue;
    for (Index v : it->second) {
      trips.emplace_back(a, v, 1.0);
      // Fallback for neighbors no walk window covered: the exact out-degree,
      // i.e. the 1-hop count, stands in for |N^k(v)|.
      if (!params.exact_counts && nb.counts[v] == 0) {
        nb.counts[v] = static_cast<int>(adj.row(v).nonZeros());
      }
    }
  }
  nb.reach.resize(n_anchor, total);
  nb.reach.setFromTriplets(trips.begin(), trips.end());
  return nb;
}

void save_operator(const std::filesystem::path& path, const HopOperator<double>& op) {
  json header;
  header["rows"] = op.matrix.rows();
  header["cols"] = op.matrix.cols();
  header["hop"] = op.hop;
  header["candidate"] = op.candidate.types;
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFile("cannot write " + path.string());
  const char magic[4] = {'H', 'O', 'P', '1'};
  out.write(magic, 4);
  const std::uint32_t head_len = static_cast<std::uint32_t>(head.size());
  out.write(reinterpret_cast<const char*>(&head_len), 4);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  const std::uint64_t nnz = static_cast<std::uint64_t>(op.matrix.nonZeros());
  out.write(reinterpret_cast<const char*>(&nnz), 8);
  for (Index r = 0; r < op.matrix.outerSize(); ++r) {
    for (SparseMatd::InnerIterator it(op.matrix, r); it; ++it) {
      const std::uint32_t row = static_cast<std::uint32_t>(it.row());
      const std::uint32_t col = static_cast<std::uint32_t>(it.col());
      const double val = it.value();
      out.write(reinterpret_cast<const char*>(&row), 4);
      out.write(reinterpret_cast<const char*>(&col), 4);
      out.write(reinterpret_cast<const char*>(&val), 8);
    }
  }
}

HopOperator<double> load_operator(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open operator file " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HOP1", 4) != 0) {
    throw Error("bad operator file magic in " + path.string());
  }
  std::uint32_t head_len = 0;
  in.read(reinterpret_cast<char*>(&head_len), 4);
  std::string head(head_len, '\0');
  in.read(head.data(), head_len);
  json header = json::parse(head);

  HopOperator<double> op;
  op.hop = header.at("hop").get<int>();
  op.candidate.hop = op.hop;
  op.candidate.types = header.at("candidate").get<std::vector<std::string>>();
  const Index rows = header.at("rows").get<Index>();
  const Index cols = header.at("cols").get<Index>();

  std::uint64_t nnz = 0;
  in.read(reinterpret_cast<char*>(&nnz), 8);
  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(nnz);
  for (std::uint64_t i = 0; i < nnz; ++i) {
    std::uint32_t row = 0, col = 0;
    double val = 0;
    in.read(reinterpret_cast<char*>(&row), 4);
    in.read(reinterpret_cast<char*>(&col), 4);
    in.read(reinterpret_cast<char*>(&val), 8);
    trips.emplace_back(static_cast<Index>(row), static_cast<Index>(col), val);
  }
  if (!in) throw Error("truncated operator file " + path.string());
  op.matrix.resize(rows, cols);
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  return op;
}

}  // namespace hetnr
