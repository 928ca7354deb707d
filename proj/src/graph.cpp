#include "hetnr/graph.hpp"

#include <vector>

#include "hetnr/errors.hpp"

namespace hetnr {

Index HinGraph::node_count(const std::string& type) const {
  auto it = node_counts.find(type);
  if (it == node_counts.end()) throw UnknownType("unknown node type: " + type);
  return it->second;
}

Index HinGraph::feature_dim(const std::string& type) const {
  auto it = feature_dims.find(type);
  if (it == feature_dims.end()) throw UnknownType("unknown node type: " + type);
  return it->second;
}

Index HinGraph::total_nodes() const {
  Index total = 0;
  for (const auto& t : schema.node_types()) total += node_count(t);
  return total;
}

Index HinGraph::type_offset(const std::string& type) const {
  Index offset = 0;
  for (const auto& t : schema.node_types()) {
    if (t == type) return offset;
    offset += node_count(t);
  }
  throw UnknownType("unknown node type: " + type);
}

const std::string& HinGraph::type_of_global(Index global) const {
  Index offset = 0;
  for (const auto& t : schema.node_types()) {
    offset += node_count(t);
    if (global < offset) return t;
  }
  throw Error("global node index out of range");
}

SparseMatd HinGraph::union_adjacency() const {
  const Index n = total_nodes();
  std::vector<Eigen::Triplet<double, Index>> trips;
  for (const auto& et : schema.edge_types()) {
    const SparseMatd& a = adjacency.at(et.name);
    const Index r0 = type_offset(et.src);
    const Index c0 = type_offset(et.dst);
    for (Index r = 0; r < a.outerSize(); ++r) {
      for (SparseMatd::InnerIterator it(a, r); it; ++it) {
        trips.emplace_back(r0 + it.row(), c0 + it.col(), 1.0);
      }
    }
  }
  SparseMatd u(n, n);
  u.setFromTriplets(trips.begin(), trips.end());
  // Overlapping relations sum; clamp back to binary.
  for (Index k = 0; k < u.nonZeros(); ++k) u.valuePtr()[k] = 1.0;
  return u;
}

void HinGraph::validate() const {
  for (const auto& t : schema.node_types()) {
    if (!node_counts.count(t)) throw SchemaMismatch("missing node count for type " + t);
    auto fit = features.find(t);
    if (fit == features.end()) throw SchemaMismatch("missing features for type " + t);
    if (fit->second.rows() != node_count(t)) {
      throw FeatureDimInconsistent("feature rows != node count for type " + t);
    }
    if (fit->second.cols() != feature_dim(t)) {
      throw FeatureDimInconsistent("feature cols != declared dim for type " + t);
    }
  }
  for (const auto& et : schema.edge_types()) {
    auto ait = adjacency.find(et.name);
    if (ait == adjacency.end()) throw SchemaMismatch("missing adjacency for edge type " + et.name);
    if (ait->second.rows() != node_count(et.src) || ait->second.cols() != node_count(et.dst)) {
      throw DanglingEdge("adjacency shape mismatch for edge type " + et.name);
    }
  }
}

void TargetTask::validate(const HinGraph& graph) const {
  if (static_cast<Index>(labels.size()) != graph.node_count(anchor_type)) {
    throw SchemaMismatch("label count != anchor node count");
  }
  if (num_classes <= 0) throw SchemaMismatch("num_classes must be positive");
  std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i];
    if (y < 0 || y >= num_classes) {
      throw SchemaMismatch("label out of range at anchor " + std::to_string(i));
    }
    seen[static_cast<std::size_t>(y)] = true;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw SchemaMismatch("class " + std::to_string(c) + " has no labeled node");
    }
  }
}

}  // namespace hetnr
