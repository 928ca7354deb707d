#include "hetnr/search.hpp"

#include <algorithm>
#include <map>

namespace hetnr {

FrequencyTable selection_frequency(const std::vector<Architecture>& runs,
                                   const SearchSpace& space) {
  if (runs.empty()) throw InconsistentSpace("no runs to aggregate");

  FrequencyTable table;
  table.hop_wise.resize(space.per_hop.size());
  std::vector<std::vector<int>> hop_counts(space.per_hop.size());
  for (std::size_t k = 0; k < space.per_hop.size(); ++k) {
    hop_counts[k].assign(space.per_hop[k].size(), 0);
  }

  // (candidate index per hop) -> count; the index tuple doubles as the
  // deterministic tie-break key.
  std::map<std::vector<int>, int> arch_counts;
  for (const auto& run : runs) {
    if (run.per_hop.size() != space.per_hop.size()) {
      throw InconsistentSpace("run has " + std::to_string(run.per_hop.size()) +
                              " hops, space has " +
                              std::to_string(space.per_hop.size()));
    }
    std::vector<int> key;
    for (std::size_t k = 0; k < run.per_hop.size(); ++k) {
      const int idx = space.candidate_index(run.per_hop[k]);
      hop_counts[k][static_cast<std::size_t>(idx)]++;
      key.push_back(idx);
    }
    arch_counts[key]++;
  }

  const double n = static_cast<double>(runs.size());
  for (std::size_t k = 0; k < space.per_hop.size(); ++k) {
    for (std::size_t c = 0; c < space.per_hop[k].size(); ++c) {
      table.hop_wise[k].push_back(
          {space.per_hop[k][c], static_cast<double>(hop_counts[k][c]) / n});
    }
  }
  for (const auto& [key, count] : arch_counts) {
    Architecture a;
    for (std::size_t k = 0; k < key.size(); ++k) {
      a.per_hop.push_back(space.per_hop[k][static_cast<std::size_t>(key[k])]);
    }
    table.model_wise.emplace_back(std::move(a), static_cast<double>(count) / n);
  }
  // Descending frequency; the map already ordered ties by index tuple.
  std::stable_sort(table.model_wise.begin(), table.model_wise.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return table;
}

Architecture hop_wise_modal(const FrequencyTable& table, const SearchSpace& space) {
  Architecture out;
  for (std::size_t k = 0; k < table.hop_wise.size(); ++k) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < table.hop_wise[k].size(); ++c) {
      if (table.hop_wise[k][c].frequency > table.hop_wise[k][best].frequency) best = c;
    }
    out.per_hop.push_back(space.per_hop[k][best]);
  }
  return out;
}

Architecture model_wise_modal(const FrequencyTable& table) {
  if (table.model_wise.empty()) throw InconsistentSpace("empty frequency table");
  return table.model_wise.front().first;
}

}  // namespace hetnr
