#pragma once

#include <map>
#include <string>
#include <vector>

#include "hetnr/schema.hpp"
#include "hetnr/types.hpp"

namespace hetnr {

/// A heterogeneous graph: per-relation binary adjacency plus a dense feature
/// matrix per node type. Node ids are dense, 0-based, and local to their
/// type; the global id of (type t, local i) is type_offset(t) + i with types
/// stacked in schema order. Immutable after construction.
struct HinGraph {
  Schema schema;
  std::map<std::string, Index> node_counts;            // node type -> count
  std::map<std::string, SparseMatd> adjacency;         // edge type -> (n_src x n_dst)
  std::map<std::string, MatrixXd> features;            // node type -> (n_t x d_t)
  std::map<std::string, Index> feature_dims;           // node type -> d_t

  Index node_count(const std::string& type) const;
  Index feature_dim(const std::string& type) const;
  Index total_nodes() const;

  /// Start of `type`'s block in the stacked global node index.
  Index type_offset(const std::string& type) const;
  /// Node type owning a global index.
  const std::string& type_of_global(Index global) const;

  /// All relations merged into one (total x total) binary matrix over global
  /// node ids. Walk semantics everywhere start from this matrix.
  SparseMatd union_adjacency() const;

  /// Checks the structural invariants (shapes, counts, id ranges); throws.
  void validate() const;
};

/// Node classification task over one anchor node type.
struct TargetTask {
  std::string anchor_type;
  std::vector<int> labels;  // one per anchor node, values in [0, num_classes)
  int num_classes = 0;

  void validate(const HinGraph& graph) const;
};

}  // namespace hetnr
