#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "herbage/raster.hpp"

namespace herbage {

struct SyntheticScene;

/// Nearest-colour segmenter: one mean RGB prototype per class, scores are
/// a softmax over negative Euclidean distances divided by temperature.
struct PrototypeModel {
  std::vector<std::string> classes;  // soil first
  std::vector<std::array<double, 3>> prototypes;
  double temperature = 25.0;

  void validate() const;
};

inline constexpr double kDefaultTemperature = 25.0;

/// Streaming mean-colour accumulator over labeled scenes.
class PrototypeFitter {
 public:
  explicit PrototypeFitter(std::vector<std::string> classes);
  void add(const RgbImage& rgb, const LabelMap& labels);
  void add(const SyntheticScene& scene);
  /// Throws MissingSpecies naming the first class with no pixels.
  PrototypeModel finish(double temperature = kDefaultTemperature) const;

 private:
  std::vector<std::string> classes_;
  std::vector<std::array<double, 3>> sums_;
  std::vector<std::uint64_t> counts_;
};

ScoreMap segment(const RgbImage& img, const PrototypeModel& m);

std::string prototype_model_to_json(const PrototypeModel& m);
PrototypeModel prototype_model_from_json(std::string_view text);
void save_prototype_model(const std::filesystem::path& path, const PrototypeModel& m);
PrototypeModel load_prototype_model(const std::filesystem::path& path);

}  // namespace herbage
