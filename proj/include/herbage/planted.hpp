#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "herbage/labels.hpp"
#include "herbage/raster.hpp"
#include "herbage/rng.hpp"

namespace herbage {

/// Known linear map from per-image ground truth (class coverage
/// fractions, soil first, and mean normalized height) to biomass labels.
/// Percentage columns sum to 100 so noiseless percentages sum to 100.
struct PlantedMap {
  std::vector<std::string> species;  // pasteable
  Eigen::MatrixXd pct_weights;       // species x classes
  double mass_base = 800.0;
  Eigen::VectorXd mass_weights;      // per class
  double mass_height_weight = 2500.0;

  static PlantedMap standard(const std::vector<std::string>& pasteable);
  LabelRow apply(std::string image_id, const std::vector<double>& coverage, double mean_height) const;
};

struct PlantedInput {
  std::string image_id;
  std::vector<double> coverage;  // per class, soil first
  double mean_height = 0.0;
};

PlantedInput planted_input(std::string image_id, const LabelMap& labels, const HeightMap& height,
                           std::size_t classes);

struct PlantedLabels {
  LabelTable labels;     // noisy
  LabelTable noiseless;
  std::vector<double> noise_sigma;  // per target: total_mass, then each pct
};

/// Gaussian noise with sigma = noise_fraction * (range of the noiseless
/// target over `inputs`). Percentage noise is projected onto zero-sum
/// vectors (marginal sigma kept) so rows still sum to 100.
PlantedLabels plant_labels(const PlantedMap& map, const std::vector<PlantedInput>& inputs, double noise_fraction,
                           Rng& rng);

}  // namespace herbage
