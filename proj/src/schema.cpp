#include "hetnr/schema.hpp"

#include "hetnr/errors.hpp"

namespace hetnr {

Schema::Schema(std::vector<std::string> node_types,
               std::vector<EdgeType> edge_types)
    : node_types_(std::move(node_types)), edge_types_(std::move(edge_types)) {
  for (std::size_t i = 0; i < node_types_.size(); ++i) {
    if (!type_index_.emplace(node_types_[i], i).second) {
      throw SchemaMismatch("duplicate node type name: " + node_types_[i]);
    }
  }
  for (std::size_t i = 0; i < edge_types_.size(); ++i) {
    const EdgeType& e = edge_types_[i];
    if (!edge_index_.emplace(e.name, i).second) {
      throw SchemaMismatch("duplicate edge type name: " + e.name);
    }
    if (!type_index_.count(e.src) || !type_index_.count(e.dst)) {
      throw SchemaMismatch("edge type " + e.name +
                           " references undeclared node type");
    }
  }
}

bool Schema::has_node_type(const std::string& name) const {
  return type_index_.count(name) != 0;
}

bool Schema::has_edge_type(const std::string& name) const {
  return edge_index_.count(name) != 0;
}

std::size_t Schema::type_index(const std::string& name) const {
  auto it = type_index_.find(name);
  if (it == type_index_.end()) throw UnknownType("unknown node type: " + name);
  return it->second;
}

const EdgeType& Schema::edge_type(const std::string& name) const {
  auto it = edge_index_.find(name);
  if (it == edge_index_.end()) throw UnknownType("unknown edge type: " + name);
  return edge_types_[it->second];
}

}  // namespace hetnr
