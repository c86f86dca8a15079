#include "herbage/labels.hpp"

#include <algorithm>
#include <cmath>

#include "herbage/error.hpp"

namespace herbage {

std::string_view to_string(LabelSource s) {
  return s == LabelSource::Trusted ? "trusted" : "automatic";
}

LabelSource parse_label_source(std::string_view s) {
  if (s == "trusted") return LabelSource::Trusted;
  if (s == "automatic") return LabelSource::Automatic;
  throw Error(ErrorCode::MalformedRow, "unknown label source '" + std::string(s) + "'");
}

const LabelRow* LabelTable::find(std::string_view image_id) const {
  for (const auto& r : rows) {
    if (r.image_id == image_id) return &r;
  }
  return nullptr;
}

void validate_row(const LabelRow& row, std::size_t species_count) {
  if (row.species_pct.size() != species_count) {
    throw Error(ErrorCode::MalformedRow, "row '" + row.image_id + "': expected " + std::to_string(species_count) +
                                             " species percentages");
  }
  if (!std::isfinite(row.total_mass) || row.total_mass < 0.0) {
    throw Error(ErrorCode::MalformedRow, "row '" + row.image_id + "': total_mass must be finite and >= 0");
  }
  double sum = 0.0;
  for (double p : row.species_pct) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::MalformedRow, "row '" + row.image_id + "': percentages must be finite and >= 0");
    }
    if (row.source == LabelSource::Automatic && p > 100.0) {
      throw Error(ErrorCode::MalformedRow, "row '" + row.image_id + "': percentage above 100");
    }
    sum += p;
  }
  if (row.source == LabelSource::Trusted && std::abs(sum - 100.0) > kPercentSumTolerance) {
    throw Error(ErrorCode::PercentSum, "row '" + row.image_id + "': species percentages sum to " +
                                           std::to_string(sum) + ", expected 100");
  }
}

TargetLayout TargetLayout::for_species(const std::vector<std::string>& species) {
  TargetLayout t;
  t.names.push_back("total_mass");
  t.kinds.push_back(TargetKind::Mass);
  for (const auto& s : species) {
    t.names.push_back(s + "_pct");
    t.kinds.push_back(TargetKind::Percent);
  }
  return t;
}

std::vector<double> to_targets(const LabelRow& row) {
  std::vector<double> t;
  t.reserve(row.species_pct.size() + 1);
  t.push_back(row.total_mass);
  t.insert(t.end(), row.species_pct.begin(), row.species_pct.end());
  return t;
}

LabelRow from_targets(std::string image_id, std::span<const double> targets, LabelSource source) {
  if (targets.empty()) throw Error(ErrorCode::InvalidArgument, "from_targets: empty target vector");
  LabelRow r;
  r.image_id = std::move(image_id);
  r.total_mass = targets[0];
  r.species_pct.assign(targets.begin() + 1, targets.end());
  r.source = source;
  return r;
}

double clip_target(double value, TargetKind kind) {
  if (kind == TargetKind::Mass) return std::max(0.0, value);
  return std::clamp(value, 0.0, 100.0);
}

}  // namespace herbage
