#include "herbage/species.hpp"

#include <algorithm>
#include <set>

#include "herbage/error.hpp"

namespace herbage {

SpeciesSet::SpeciesSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "species set needs soil plus at least one species");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty() || n.find_first_of(",\n\r\"") != std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "invalid species name '" + n + "'");
    }
    if (!seen.insert(n).second) throw Error(ErrorCode::InvalidConfig, "duplicate species name '" + n + "'");
  }
}

SpeciesSet SpeciesSet::irish() { return SpeciesSet({"soil", "grass", "clover", "weeds"}); }

SpeciesSet SpeciesSet::grass_clover() {
  return SpeciesSet({"soil", "grass", "white_clover", "red_clover", "weeds"});
}

SpeciesSet SpeciesSet::preset(std::string_view name) {
  if (name == "irish") return irish();
  if (name == "grassclover" || name == "grass_clover") return grass_clover();
  throw Error(ErrorCode::InvalidConfig, "unknown species preset '" + std::string(name) + "'");
}

std::vector<std::string> SpeciesSet::pasteable_names() const {
  return {names_.begin() + 1, names_.end()};
}

std::optional<SpeciesId> SpeciesSet::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return SpeciesId{static_cast<int>(it - names_.begin())};
}

}  // namespace herbage
