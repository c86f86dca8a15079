#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace herbage {

/// Index into a SpeciesSet. Index 0 is always soil/background.
struct SpeciesId {
  int index = 0;
  bool operator==(const SpeciesId&) const = default;
  auto operator<=>(const SpeciesId&) const = default;
};

/// Ordered list of class names; position is the class index. The first
/// entry is the non-pasteable background class.
class SpeciesSet {
 public:
  explicit SpeciesSet(std::vector<std::string> names);

  /// {soil, grass, clover, weeds}
  static SpeciesSet irish();
  /// {soil, grass, white_clover, red_clover, weeds}
  static SpeciesSet grass_clover();
  /// "irish" or "grassclover"
  static SpeciesSet preset(std::string_view name);

  std::size_t size() const { return names_.size(); }
  std::size_t pasteable_count() const { return names_.size() - 1; }
  const std::string& name(SpeciesId id) const { return names_.at(static_cast<std::size_t>(id.index)); }
  const std::vector<std::string>& names() const { return names_; }
  /// Names of species 1..C-1.
  std::vector<std::string> pasteable_names() const;
  std::optional<SpeciesId> find(std::string_view name) const;
  bool contains(SpeciesId id) const { return id.index >= 0 && static_cast<std::size_t>(id.index) < names_.size(); }

  bool operator==(const SpeciesSet&) const = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace herbage
