#include "hetnr/splits.hpp"

#include <algorithm>
#include <numeric>

#include "hetnr/errors.hpp"
#include "hetnr/rng.hpp"

namespace hetnr {

SplitSet make_splits(const TargetTask& task, int num_folds,
                     double train_fraction_used, std::uint64_t seed) {
  const Index n = static_cast<Index>(task.labels.size());
  if (num_folds < 2) throw Error("num_folds must be >= 2");
  if (n < num_folds) {
    throw TooFewNodes("only " + std::to_string(n) + " labeled nodes for " +
                      std::to_string(num_folds) + " folds");
  }
  if (!(train_fraction_used > 0.0 && train_fraction_used <= 1.0)) {
    throw Error("train_fraction_used must be in (0,1]");
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = make_rng(seed, "splits");
  std::shuffle(order.begin(), order.end(), rng);

  SplitSet out;
  out.train_fraction_used = train_fraction_used;
  out.folds.resize(static_cast<std::size_t>(num_folds));
  for (int f = 0; f < num_folds; ++f) {
    const Index lo = n * f / num_folds;
    const Index hi = n * (f + 1) / num_folds;
    Fold& fold = out.folds[static_cast<std::size_t>(f)];
    fold.test.assign(order.begin() + lo, order.begin() + hi);

    std::vector<Index> rest;
    rest.reserve(static_cast<std::size_t>(n - (hi - lo)));
    rest.insert(rest.end(), order.begin(), order.begin() + lo);
    rest.insert(rest.end(), order.begin() + hi, order.end());
    // Per-fold reshuffle so the train/valid boundary is independent of the
    // test-fold layout.
    auto fold_rng = make_rng(seed, "splits", static_cast<std::uint64_t>(f) + 1);
    std::shuffle(rest.begin(), rest.end(), fold_rng);

    // 2:1 train:valid over the remaining 80% (53.3% / 26.7% of the whole).
    const Index n_train_full = (static_cast<Index>(rest.size()) * 2) / 3;
    const Index n_train =
        std::max<Index>(1, static_cast<Index>(std::llround(
                               static_cast<double>(n_train_full) * train_fraction_used)));
    fold.train.assign(rest.begin(), rest.begin() + n_train);
    fold.valid.assign(rest.begin() + n_train_full, rest.end());

    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.valid.begin(), fold.valid.end());
    std::sort(fold.test.begin(), fold.test.end());
  }
  return out;
}

}  // namespace hetnr
