#include "hetnr/model.hpp"

namespace hetnr {

bool Architecture::operator<(const Architecture& o) const {
  if (per_hop.size() != o.per_hop.size()) return per_hop.size() < o.per_hop.size();
  for (std::size_t k = 0; k < per_hop.size(); ++k) {
    if (per_hop[k].types != o.per_hop[k].types) {
      return per_hop[k].types < o.per_hop[k].types;
    }
  }
  return false;
}

std::string to_string(const Architecture& a) {
  std::string s = "[";
  for (std::size_t k = 0; k < a.per_hop.size(); ++k) {
    if (k) s += " ";
    s += to_string(a.per_hop[k]);
  }
  return s + "]";
}

}  // namespace hetnr
