#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "herbage/provenance.hpp"

namespace herbage {

enum class LabelSource { Trusted, Automatic };

std::string_view to_string(LabelSource s);
LabelSource parse_label_source(std::string_view s);

/// Biomass label of one image: total dry mass (kg DM/ha) and the dry
/// biomass percentage of each pasteable species.
struct LabelRow {
  std::string image_id;
  double total_mass = 0.0;
  std::vector<double> species_pct;
  LabelSource source = LabelSource::Trusted;

  bool operator==(const LabelRow&) const = default;
};

struct LabelTable {
  std::vector<std::string> species;  // pasteable species, column order
  std::vector<LabelRow> rows;
  Provenance provenance;

  const LabelRow* find(std::string_view image_id) const;
};

inline constexpr double kPercentSumTolerance = 0.5;

/// Trusted rows: pct >= 0, sum within 100 +/- 0.5. Automatic rows are
/// clipped but not renormalized, so only [0, 100] per entry is enforced.
/// total_mass >= 0 for both. Throws PercentSum / MalformedRow naming the id.
void validate_row(const LabelRow& row, std::size_t species_count);

enum class TargetKind { Mass, Percent };

/// Regression targets derived from a label table: total_mass followed by
/// one <species>_pct column per species.
struct TargetLayout {
  std::vector<std::string> names;
  std::vector<TargetKind> kinds;

  static TargetLayout for_species(const std::vector<std::string>& species);
  std::size_t size() const { return names.size(); }
  bool operator==(const TargetLayout&) const = default;
};

std::vector<double> to_targets(const LabelRow& row);
LabelRow from_targets(std::string image_id, std::span<const double> targets, LabelSource source);

/// Mass clipped at 0, percentages clipped to [0, 100].
double clip_target(double value, TargetKind kind);

}  // namespace herbage
