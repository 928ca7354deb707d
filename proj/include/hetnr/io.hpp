#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hetnr/graph.hpp"

namespace hetnr {

/// File formats (all ids decimal integers, features decimal floats):
///   schema.json      {"node_types":["A",...],"edge_types":[{"name":"AP","src":"A","dst":"P"},...]}
///   nodes_<T>.csv    header "id,f0,f1,..."; ids must cover exactly 0..n-1
///   edges_<E>.csv    header "src,dst"; duplicates are deduplicated
///   labels.csv       header "id,label"

Schema load_schema(const std::filesystem::path& schema_file);
void save_schema(const std::filesystem::path& schema_file, const Schema& schema);

/// Node files are matched to types (and edge files to edge types) by the
/// `nodes_<type>.csv` / `edges_<etype>.csv` naming convention.
HinGraph load_graph(const std::vector<std::filesystem::path>& node_files,
                    const std::vector<std::filesystem::path>& edge_files,
                    const std::filesystem::path& schema_file);

/// Loads a dataset directory written by save_graph / the generate command.
HinGraph load_graph_dir(const std::filesystem::path& dir);

/// Writes schema.json, nodes_<T>.csv and edges_<E>.csv into dir. Feature
/// values are written with max precision, so a load round-trips exactly.
void save_graph(const std::filesystem::path& dir, const HinGraph& graph);

TargetTask load_labels(const std::filesystem::path& labels_file,
                       const std::string& anchor_type, const HinGraph& graph);
void save_labels(const std::filesystem::path& labels_file, const TargetTask& task);

}  // namespace hetnr
