#include "herbage/losses.hpp"

#include <algorithm>
#include <cmath>

#include "herbage/summation.hpp"

namespace herbage {

namespace {

void check_targets(const ScoreMap& scores, const LabelMap& classes) {
  if (classes.width != scores.width() || classes.height != scores.height() || classes.channels != 1) {
    throw Error(ErrorCode::ShapeMismatch, "species_loss: score map and targets differ in shape");
  }
  if (scores.pixel_count() == 0) throw Error(ErrorCode::EmptyRaster, "species_loss: empty map");
  for (auto c : classes.data) {
    if (c >= scores.classes()) {
      throw Error(ErrorCode::InvalidArgument, "species_loss: target class " + std::to_string(c) + " out of range");
    }
  }
}

}  // namespace

double species_loss(const ScoreMap& scores, const LabelMap& classes) {
  check_targets(scores, classes);
  CompensatedSum sum;
  for (std::size_t p = 0; p < scores.pixel_count(); ++p) {
    const double s = std::max(scores.at(classes.data[p], p), kLogClamp);
    sum.add(-std::log(s));
  }
  return sum.value() / static_cast<double>(scores.pixel_count());
}

ScoreMap species_loss_gradient(const ScoreMap& scores, const LabelMap& classes) {
  check_targets(scores, classes);
  ScoreMap grad(scores.width(), scores.height(), scores.classes(), 0.0);
  const double n = static_cast<double>(scores.pixel_count());
  for (std::size_t p = 0; p < scores.pixel_count(); ++p) {
    const int c = classes.data[p];
    const double s = scores.at(c, p);
    if (s > kLogClamp) grad.at(c, p) = -1.0 / (n * s);
  }
  return grad;
}

double height_loss(const HeightMap& pred, const HeightMap& target) {
  if (!pred.same_shape(target) || pred.channels != target.channels) {
    throw Error(ErrorCode::ShapeMismatch, "height_loss: prediction and target differ in shape");
  }
  if (pred.data.empty()) throw Error(ErrorCode::EmptyRaster, "height_loss: empty raster");
  CompensatedSum sum;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double r = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
    sum.add(r * r);
  }
  return std::sqrt(sum.value() / static_cast<double>(pred.data.size()));
}

double total_loss(const ScoreMap& scores, const HeightMap& pred_height, const PixelTargets& targets) {
  return species_loss(scores, targets.classes) + height_loss(pred_height, targets.height);
}

}  // namespace herbage
