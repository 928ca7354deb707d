#pragma once

#include <map>
#include <string>
#include <vector>

namespace hetnr {

struct EdgeType {
  std::string name;
  std::string src;
  std::string dst;
};

/// Typed-graph schema: ordered node type names plus directed edge types.
/// Undirected relations in input data are declared as two edge types
/// (e.g. AP and PA).
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<std::string> node_types, std::vector<EdgeType> edge_types);

  const std::vector<std::string>& node_types() const { return node_types_; }
  const std::vector<EdgeType>& edge_types() const { return edge_types_; }

  // |T| + |R| > 2
  bool heterogeneous() const {
    return node_types_.size() + edge_types_.size() > 2;
  }

  bool has_node_type(const std::string& name) const;
  bool has_edge_type(const std::string& name) const;

  /// Position of a node type in the declared order; throws UnknownType.
  std::size_t type_index(const std::string& name) const;
  const EdgeType& edge_type(const std::string& name) const;

 private:
  std::vector<std::string> node_types_;
  std::vector<EdgeType> edge_types_;
  std::map<std::string, std::size_t> type_index_;
  std::map<std::string, std::size_t> edge_index_;
};

}  // namespace hetnr
