#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hetnr/graph.hpp"

namespace hetnr {

/// Recipe for a planted-signal benchmark graph: every relation is sampled
/// uniformly without replacement, nodes of `signal_type` carry class cluster
/// centers in their features, all other types carry pure noise, and anchor
/// labels are the argmax over classes of the summed signal-type features
/// reachable at exactly `signal_hop` (ties to the lowest class).
struct SyntheticSpec {
  Schema schema;
  std::string anchor_type;
  std::map<std::string, Index> nodes_per_type;
  std::map<std::string, Index> edges_per_relation;
  Index feature_dim = 16;
  int signal_hop = 2;
  std::string signal_type;
  int num_classes = 3;
  double noise_std = 0.5;
  double center_scale = 1.0;  // magnitude of the one-hot class centers
  std::uint64_t seed = 0;
};

struct SyntheticResult {
  HinGraph graph;
  TargetTask task;
  std::map<int, std::set<std::string>> ground_truth;  // hop -> informative types
};

SyntheticResult generate_synthetic(const SyntheticSpec& spec);

/// The instance the CLI and the acceptance suite default to: a three-type
/// A-P-C chain with paired directed relations, anchor A, signal planted on C
/// at hop 2.
SyntheticSpec default_planted_spec(std::uint64_t seed);

}  // namespace hetnr
