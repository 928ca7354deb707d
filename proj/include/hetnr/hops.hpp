#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "hetnr/errors.hpp"
#include "hetnr/graph.hpp"
#include "hetnr/types.hpp"

namespace hetnr {

/// One aggregation choice for one hop: either the zero option (skip the hop)
/// or a nonempty, sorted set of node type names.
struct HopCandidate {
  int hop = 0;
  std::vector<std::string> types;  // empty == zero option

  bool is_zero() const { return types.empty(); }
  bool operator==(const HopCandidate& o) const {
    return hop == o.hop && types == o.types;
  }
};

std::string to_string(const HopCandidate& c);

/// Per-hop candidate lists; index 0 of every hop is the zero option, the rest
/// are the nonempty subsets of the hop's reachable type set, ordered by
/// (cardinality, lexicographic type names).
struct SearchSpace {
  std::string anchor_type;
  int num_hops = 0;
  std::vector<std::vector<HopCandidate>> per_hop;

  /// Product of per-hop candidate counts (saturates at Index max).
  Index total_architectures() const;
  /// Index of a candidate in its hop's list; throws InconsistentSpace.
  int candidate_index(const HopCandidate& c) const;
};

/// Node types reachable from `anchor` by at least one directed schema walk of
/// length exactly `hop`.
std::set<std::string> reachable_types(const Schema& schema,
                                      const std::string& anchor, int hop);

SearchSpace build_search_space(const Schema& schema, const std::string& anchor,
                               int num_hops);

/// k-hop neighborhoods under walk semantics: v is in N^k(u) iff there is a
/// directed walk of length exactly k from u to v over the union of all
/// relations (so u itself is included whenever a closed k-walk exists).
///
/// `reach` has one row per anchor node over global node columns; `counts[v]`
/// caches |N^k(v)| for every global node (0 when v has no k-walk).
struct HopNeighborhood {
  int hop = 0;
  std::string anchor_type;
  SparseMatd reach;                     // n_anchor x total_nodes, binary
  Eigen::VectorXi counts;               // per global node
  std::vector<Index> isolated_anchors;  // anchors with no outgoing edge

  Index neighborhood_size(Index anchor) const {
    return reach.row(anchor).nonZeros();
  }
};

HopNeighborhood khop_exact(const HinGraph& graph, const std::string& anchor,
                           int hop);

struct RandomWalkParams {
  int num_walks = 1000;
  int walk_len = 4;
  /// When false, |N^k(v)| for neighbor nodes is estimated from the sampled
  /// walks (every k-step window of a walk contributes: the node at position j
  /// gains the node at position j+k as an estimated k-hop neighbor), falling
  /// back to the node's exact out-degree when no window sampled it. When
  /// true, all counts come from the exact adjacency powers.
  bool exact_counts = false;
};

/// Monte-Carlo estimate of khop_exact: per anchor, `num_walks` uniform random
/// walks of `walk_len` steps; the node visited at step `hop` of each walk
/// joins the estimated neighborhood. Walks stop early at nodes with no
/// outgoing edge. Deterministic given seed; anchors use seeds derived as
/// (seed, anchor id), so any partition of anchors across workers agrees with
/// the serial run.
HopNeighborhood khop_randomwalk(const HinGraph& graph, const std::string& anchor,
                                int hop, const RandomWalkParams& params,
                                std::uint64_t seed);

/// Row-normalized type-masked aggregation matrix for one (hop, candidate)
/// pair: entry (u, v) = 1/sqrt(|N^k(u)| * |N^k(v)|) for every v in N^k(u)
/// whose type is in the candidate subset. Columns live in the full stacked
/// node space (all types, schema order); only candidate-type columns can be
/// nonzero, which makes operators over disjoint type sets add elementwise.
/// Rows of anchors with empty neighborhoods are zero, and neighbors with
/// |N^k(v)| = 0 (reachable but with no outgoing k-walk) are skipped rather
/// than divided by zero.
template <class Scalar>
struct HopOperator {
  int hop = 0;
  HopCandidate candidate;
  SparseMat<Scalar> matrix;  // n_anchor x total_nodes
};

template <class Scalar>
HopOperator<Scalar> build_hop_operator(const HinGraph& graph,
                                       const HopNeighborhood& nb,
                                       const HopCandidate& candidate) {
  if (nb.hop != candidate.hop) {
    throw HopMismatch("neighborhood is hop " + std::to_string(nb.hop) +
                      ", candidate is hop " + std::to_string(candidate.hop));
  }
  const Index total = graph.total_nodes();
  HopOperator<Scalar> op{candidate.hop, candidate, SparseMat<Scalar>(nb.reach.rows(), total)};
  if (candidate.is_zero()) return op;

  std::vector<char> in_subset(static_cast<std::size_t>(total), 0);
  for (const auto& t : candidate.types) {
    const Index off = graph.type_offset(t);
    const Index cnt = graph.node_count(t);
    std::fill(in_subset.begin() + off, in_subset.begin() + off + cnt, char{1});
  }

  std::vector<Eigen::Triplet<Scalar, Index>> trips;
  for (Index u = 0; u < nb.reach.outerSize(); ++u) {
    const Index size_u = nb.neighborhood_size(u);
    if (size_u == 0) continue;
    for (SparseMatd::InnerIterator it(nb.reach, u); it; ++it) {
      const Index v = it.col();
      if (!in_subset[static_cast<std::size_t>(v)]) continue;
      const Index size_v = nb.counts[v];
      if (size_v == 0) continue;
      trips.emplace_back(u, v,
                         Scalar(1) / std::sqrt(static_cast<Scalar>(size_u) *
                                               static_cast<Scalar>(size_v)));
    }
  }
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  return op;
}

enum class NeighborhoodMode { Exact, RandomWalk };

struct NeighborhoodOptions {
  NeighborhoodMode mode = NeighborhoodMode::Exact;
  RandomWalkParams rw;
  std::uint64_t seed = 0;
};

/// All operators of a search space on one graph, candidate order matching the
/// space. Shares one neighborhood per hop across that hop's candidates.
template <class Scalar>
struct HopOperatorSet {
  SearchSpace space;
  Index num_anchors = 0;
  Index total_nodes = 0;
  std::vector<std::vector<HopOperator<Scalar>>> ops;  // [hop-1][candidate]
};

template <class Scalar>
HopOperatorSet<Scalar> build_operators(const HinGraph& graph,
                                       const SearchSpace& space,
                                       const NeighborhoodOptions& opts = {}) {
  HopOperatorSet<Scalar> set;
  set.space = space;
  set.num_anchors = graph.node_count(space.anchor_type);
  set.total_nodes = graph.total_nodes();
  set.ops.resize(static_cast<std::size_t>(space.num_hops));
  for (int k = 1; k <= space.num_hops; ++k) {
    HopNeighborhood nb =
        opts.mode == NeighborhoodMode::Exact
            ? khop_exact(graph, space.anchor_type, k)
            : khop_randomwalk(graph, space.anchor_type, k, opts.rw, opts.seed);
    auto& hop_ops = set.ops[static_cast<std::size_t>(k - 1)];
    for (const auto& cand : space.per_hop[static_cast<std::size_t>(k - 1)]) {
      hop_ops.push_back(build_hop_operator<Scalar>(graph, nb, cand));
    }
  }
  return set;
}

/// Coordinate-list hybrid format: a JSON header (shape, hop, candidate)
/// followed by little-endian (u32 row, u32 col, f64 value) triplets.
void save_operator(const std::filesystem::path& path, const HopOperator<double>& op);
HopOperator<double> load_operator(const std::filesystem::path& path);

}  // namespace hetnr
