#include "herbage/segfeat.hpp"

#include <algorithm>

#include "herbage/summation.hpp"

namespace herbage {

std::string_view to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::HL: return "HL";
    case FeatureMode::SL: return "SL";
    case FeatureMode::HL_SL: return "HL+SL";
    case FeatureMode::HL_SL_H: return "HL+SL+H";
  }
  return "?";
}

FeatureMode parse_feature_mode(std::string_view s) {
  if (s == "HL") return FeatureMode::HL;
  if (s == "SL") return FeatureMode::SL;
  if (s == "HL+SL") return FeatureMode::HL_SL;
  if (s == "HL+SL+H") return FeatureMode::HL_SL_H;
  throw Error(ErrorCode::InvalidArgument, "unknown feature mode '" + std::string(s) + "' (HL, SL, HL+SL, HL+SL+H)");
}

bool uses_height(FeatureMode m) { return m == FeatureMode::HL_SL_H; }

namespace {
bool uses_hl(FeatureMode m) { return m != FeatureMode::SL; }
bool uses_sl(FeatureMode m) { return m != FeatureMode::HL; }
}  // namespace

std::size_t feature_length(FeatureMode m, std::size_t classes) {
  return (uses_hl(m) ? classes : 0) + (uses_sl(m) ? classes : 0) + (uses_height(m) ? 1 : 0);
}

std::vector<std::string> feature_names(FeatureMode m, const std::vector<std::string>& classes) {
  std::vector<std::string> out;
  if (uses_hl(m)) {
    for (const auto& c : classes) out.push_back("hl_" + c);
  }
  if (uses_sl(m)) {
    for (const auto& c : classes) out.push_back("sl_" + c);
  }
  if (uses_height(m)) out.emplace_back("height");
  return out;
}

std::vector<double> FeatureVector::flatten() const {
  std::vector<double> out;
  if (uses_hl(mode)) out.insert(out.end(), hl.begin(), hl.end());
  if (uses_sl(mode)) out.insert(out.end(), sl.begin(), sl.end());
  if (uses_height(mode)) out.push_back(mean_height);
  return out;
}

std::vector<std::uint64_t> hard_counts(const ScoreMap& s) {
  if (s.pixel_count() == 0 || s.classes() == 0) throw Error(ErrorCode::EmptyRaster, "hard_coverage: empty map");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(s.classes()), 0);
  for (std::size_t p = 0; p < s.pixel_count(); ++p) {
    int best = 0;
    double best_v = s.at(0, p);
    for (int c = 1; c < s.classes(); ++c) {
      if (s.at(c, p) > best_v) {  // strict: ties keep the lower index
        best_v = s.at(c, p);
        best = c;
      }
    }
    ++counts[static_cast<std::size_t>(best)];
  }
  return counts;
}

std::vector<double> hard_coverage(const ScoreMap& s) {
  const auto counts = hard_counts(s);
  const double n = static_cast<double>(s.pixel_count());
  std::vector<double> out(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) out[c] = static_cast<double>(counts[c]) / n;
  return out;
}

std::vector<double> soft_coverage(const ScoreMap& s) {
  if (s.pixel_count() == 0 || s.classes() == 0) throw Error(ErrorCode::EmptyRaster, "soft_coverage: empty map");
  const double n = static_cast<double>(s.pixel_count());
  std::vector<double> out(static_cast<std::size_t>(s.classes()));
  for (int c = 0; c < s.classes(); ++c) {
    CompensatedSum sum;
    for (double v : s.plane(c)) sum.add(v);
    out[static_cast<std::size_t>(c)] = sum.value() / n;
  }
  return out;
}

FeatureVector extract_features(const ScoreMap& s, const HeightMap* height, FeatureMode mode) {
  FeatureVector f;
  f.mode = mode;
  if (uses_hl(mode)) f.hl = hard_coverage(s);
  if (uses_sl(mode)) f.sl = soft_coverage(s);
  if (uses_height(mode)) {
    if (height == nullptr) throw Error(ErrorCode::InvalidArgument, "feature mode HL+SL+H needs a height raster");
    if (height->width != s.width() || height->height != s.height()) {
      throw Error(ErrorCode::ShapeMismatch, "height raster does not match the score map");
    }
    CompensatedSum sum;
    for (float v : height->data) sum.add(v);
    f.mean_height = sum.value() / static_cast<double>(height->data.size());
  }
  return f;
}

const FeatureRow* FeatureTable::find(std::string_view image_id) const {
  for (const auto& r : rows) {
    if (r.image_id == image_id) return &r;
  }
  return nullptr;
}

bool mode_contains(FeatureMode superset, FeatureMode subset) {
  if (uses_hl(subset) && !uses_hl(superset)) return false;
  if (uses_sl(subset) && !uses_sl(superset)) return false;
  if (uses_height(subset) && !uses_height(superset)) return false;
  return true;
}

FeatureTable select_mode(const FeatureTable& table, FeatureMode target) {
  if (!mode_contains(table.mode, target)) {
    throw Error(ErrorCode::InvalidArgument, "feature table in mode " + std::string(to_string(table.mode)) +
                                                " cannot provide " + std::string(to_string(target)));
  }
  const auto from = table.column_names();
  const auto to = feature_names(target, table.classes);
  std::vector<std::size_t> idx;
  for (const auto& name : to) idx.push_back(static_cast<std::size_t>(std::find(from.begin(), from.end(), name) - from.begin()));

  FeatureTable out;
  out.mode = target;
  out.classes = table.classes;
  out.provenance = table.provenance;
  for (const auto& r : table.rows) {
    FeatureRow nr{r.image_id, {}};
    for (auto i : idx) nr.values.push_back(r.values.at(i));
    out.rows.push_back(std::move(nr));
  }
  return out;
}

}  // namespace herbage
