#pragma once

#include "herbage/raster.hpp"

namespace herbage {

/// Per-pixel segmentation target: class index (the one-hot ỹ) and
/// normalized height h in [0, 1].
struct PixelTargets {
  LabelMap classes;
  HeightMap height;
};

inline constexpr double kLogClamp = 1e-12;

/// Mean over pixels of -sum_c y_c log(max(s_c, 1e-12)).
double species_loss(const ScoreMap& scores, const LabelMap& classes);

/// d species_loss / d s_c(p) = -y_c(p) / (P * s_c(p)); zero where the
/// clamp is active.
ScoreMap species_loss_gradient(const ScoreMap& scores, const LabelMap& classes);

/// sqrt(mean((pred - target)^2)).
double height_loss(const HeightMap& pred, const HeightMap& target);

/// species_loss + height_loss, unit weights.
double total_loss(const ScoreMap& scores, const HeightMap& pred_height, const PixelTargets& targets);

}  // namespace herbage
