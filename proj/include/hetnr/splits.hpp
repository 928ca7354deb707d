#pragma once

#include <cstdint>
#include <vector>

#include "hetnr/graph.hpp"

namespace hetnr {

struct Fold {
  std::vector<Index> train;
  std::vector<Index> valid;
  std::vector<Index> test;
};

struct SplitSet {
  std::vector<Fold> folds;
  double train_fraction_used = 1.0;
};

/// Cross-validation splits over the anchor nodes. Test folds partition the
/// anchor set (pairwise disjoint across folds); within a fold the remaining
/// 80% is split 2:1 into train:valid, and train is then subsampled to
/// `train_fraction_used`. Deterministic given seed.
SplitSet make_splits(const TargetTask& task, int num_folds,
                     double train_fraction_used, std::uint64_t seed);

}  // namespace hetnr
