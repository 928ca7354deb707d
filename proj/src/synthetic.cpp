#include "hetnr/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "hetnr/errors.hpp"
#include "hetnr/hops.hpp"
#include "hetnr/rng.hpp"

namespace hetnr {

namespace {

// Uniform sample of `m` distinct cells from an n_rows x n_cols grid
// (Floyd's algorithm over linearized cell ids).
std::vector<std::pair<Index, Index>> sample_edges(Index n_rows, Index n_cols,
                                                  Index m, std::mt19937_64& rng) {
  const Index grid = n_rows * n_cols;
  if (m > grid) {
    throw Error("relation asks for " + std::to_string(m) + " edges but only " +
                std::to_string(grid) + " cells exist");
  }
  std::set<Index> chosen;
  for (Index j = grid - m; j < grid; ++j) {
    Index t = static_cast<Index>(
        std::uniform_int_distribution<long long>(0, j)(rng));
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (Index cell : chosen) edges.emplace_back(cell / n_cols, cell % n_cols);
  return edges;
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 1) throw Error("num_classes must be >= 1");
  if (spec.feature_dim < spec.num_classes) {
    throw Error("feature_dim must be >= num_classes (class centers are one-hot)");
  }
  if (!reachable_types(spec.schema, spec.anchor_type, spec.signal_hop)
           .count(spec.signal_type)) {
    throw UnreachableSignal("type " + spec.signal_type +
                            " is not reachable from " + spec.anchor_type +
                            " at hop " + std::to_string(spec.signal_hop));
  }

  SyntheticResult out;
  HinGraph& g = out.graph;
  g.schema = spec.schema;
  for (const auto& t : spec.schema.node_types()) {
    auto it = spec.nodes_per_type.find(t);
    if (it == spec.nodes_per_type.end() || it->second < 1) {
      throw Error("nodes_per_type missing or non-positive for type " + t);
    }
    g.node_counts[t] = it->second;
    g.feature_dims[t] = spec.feature_dim;
  }

  auto edge_rng = make_rng(spec.seed, "synthetic", 0);
  for (const auto& et : spec.schema.edge_types()) {
    auto it = spec.edges_per_relation.find(et.name);
    const Index m = it == spec.edges_per_relation.end() ? 0 : it->second;
    const Index n_src = g.node_counts.at(et.src);
    const Index n_dst = g.node_counts.at(et.dst);
    std::vector<Eigen::Triplet<double, Index>> trips;
    for (const auto& [r, c] : sample_edges(n_src, n_dst, m, edge_rng)) {
      trips.emplace_back(r, c, 1.0);
    }
    SparseMatd a(n_src, n_dst);
    a.setFromTriplets(trips.begin(), trips.end());
    g.adjacency[et.name] = std::move(a);
  }

  // Labels are a deterministic function of the realized signal features, so
  // the task stays solvable from those features at any noise level. If a
  // class ends up unused (tiny graphs), re-roll the signal features only;
  // the graph is already fixed.
  auto noise_rng = make_rng(spec.seed, "synthetic", 1);
  std::normal_distribution<double> noise(0.0, spec.noise_std);
  for (const auto& t : spec.schema.node_types()) {
    MatrixXd x(g.node_counts.at(t), spec.feature_dim);
    if (spec.noise_std > 0.0) {
      for (Index r = 0; r < x.rows(); ++r) {
        for (Index c = 0; c < x.cols(); ++c) x(r, c) = noise(noise_rng);
      }
    } else {
      x.setZero();
    }
    g.features[t] = std::move(x);
  }

  const HopNeighborhood nb = khop_exact(g, spec.anchor_type, spec.signal_hop);
  const Index n_anchor = g.node_counts.at(spec.anchor_type);
  const Index sig_off = g.type_offset(spec.signal_type);
  const Index n_sig = g.node_counts.at(spec.signal_type);

  std::vector<int> labels;
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt >= 100) {
      throw Error("could not realize all classes in the planted labels; "
                  "increase graph size or class balance");
    }
    MatrixXd& sig = g.features.at(spec.signal_type);
    auto sig_rng = make_rng(spec.seed, "synthetic", 2 + attempt);
    for (Index i = 0; i < n_sig; ++i) {
      const Index cls = i % spec.num_classes;
      for (Index c = 0; c < spec.feature_dim; ++c) {
        sig(i, c) = spec.noise_std > 0.0
                        ? spec.noise_std * std::normal_distribution<double>()(sig_rng)
                        : 0.0;
      }
      sig(i, cls) += spec.center_scale;
    }

    labels.assign(static_cast<std::size_t>(n_anchor), 0);
    std::vector<bool> used(static_cast<std::size_t>(spec.num_classes), false);
    for (Index a = 0; a < n_anchor; ++a) {
      VectorXd score = VectorXd::Zero(spec.num_classes);
      for (SparseMatd::InnerIterator it(nb.reach, a); it; ++it) {
        const Index v = it.col();
        if (v < sig_off || v >= sig_off + n_sig) continue;
        score += sig.row(v - sig_off).head(spec.num_classes).transpose();
      }
      int best = 0;
      for (int c = 1; c < spec.num_classes; ++c) {
        if (score[c] > score[best]) best = c;  // ties keep the lowest class
      }
      labels[static_cast<std::size_t>(a)] = best;
      used[static_cast<std::size_t>(best)] = true;
    }
    if (std::all_of(used.begin(), used.end(), [](bool b) { return b; })) break;
  }

  out.task = TargetTask{spec.anchor_type, std::move(labels), spec.num_classes};
  out.ground_truth[spec.signal_hop] = {spec.signal_type};
  g.validate();
  out.task.validate(g);
  return out;
}

SyntheticSpec default_planted_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.schema = Schema({"A", "P", "C"}, {{"AP", "A", "P"},
                                         {"PA", "P", "A"},
                                         {"PC", "P", "C"},
                                         {"CP", "C", "P"}});
  spec.anchor_type = "A";
  spec.nodes_per_type = {{"A", 120}, {"P", 150}, {"C", 12}};
  spec.edges_per_relation = {{"AP", 360}, {"PA", 360}, {"PC", 300}, {"CP", 300}};
  spec.feature_dim = 16;
  spec.signal_hop = 2;
  spec.signal_type = "C";
  spec.num_classes = 3;
  spec.noise_std = 0.5;
  spec.center_scale = 1.0;
  spec.seed = seed;
  return spec;
}

}  // namespace hetnr
