#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "herbage/provenance.hpp"
#include "herbage/raster.hpp"

namespace herbage {

/// Which coverage/height features feed the regressor.
///   HL: argmax coverage per class, SL: mean softmax per class,
///   H: mean normalized height.
enum class FeatureMode { HL, SL, HL_SL, HL_SL_H };

std::string_view to_string(FeatureMode m);
FeatureMode parse_feature_mode(std::string_view s);
bool uses_height(FeatureMode m);
/// C, C, 2C or 2C + 1.
std::size_t feature_length(FeatureMode m, std::size_t classes);
/// Column names, e.g. hl_soil ... sl_weeds, height.
std::vector<std::string> feature_names(FeatureMode m, const std::vector<std::string>& classes);

struct FeatureVector {
  std::vector<double> hl;
  std::vector<double> sl;
  double mean_height = 0.0;
  FeatureMode mode = FeatureMode::HL_SL_H;

  std::vector<double> flatten() const;
};

/// Pixel counts of the per-pixel argmax; ties go to the lowest class index.
std::vector<std::uint64_t> hard_counts(const ScoreMap& s);
std::vector<double> hard_coverage(const ScoreMap& s);
std::vector<double> soft_coverage(const ScoreMap& s);

/// Throws if mode needs height and none is given, or on shape mismatch.
FeatureVector extract_features(const ScoreMap& s, const HeightMap* height, FeatureMode mode);

struct FeatureRow {
  std::string image_id;
  std::vector<double> values;
};

/// Per-image features as written by the `features` stage.
struct FeatureTable {
  FeatureMode mode = FeatureMode::HL_SL_H;
  std::vector<std::string> classes;  // including soil
  std::vector<FeatureRow> rows;
  Provenance provenance;

  std::vector<std::string> column_names() const { return feature_names(mode, classes); }
  const FeatureRow* find(std::string_view image_id) const;
};

/// Project a table onto a mode it contains (e.g. HL out of HL+SL+H).
FeatureTable select_mode(const FeatureTable& table, FeatureMode target);
bool mode_contains(FeatureMode superset, FeatureMode subset);

}  // namespace herbage
