#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "herbage/assets.hpp"
#include "herbage/raster.hpp"
#include "herbage/rng.hpp"

namespace herbage {

template <typename T>
struct Interval {
  T min{};
  T max{};
  bool operator==(const Interval&) const = default;
};

/// Parameters of the copy-paste generator. Defaults follow the Irish
/// configuration: 2000x2000 canvas, 400-800 pastes, Dirichlet(9, 2, 1)
/// over grass/clover/weeds.
struct GenConfig {
  int canvas_width = 2000;
  int canvas_height = 2000;
  int n_images = 1000;
  Interval<int> paste_count{400, 800};
  std::vector<double> dirichlet_alpha{9.0, 2.0, 1.0};
  Interval<double> rotation_deg{-180.0, 180.0};
  Interval<double> blur_radius{0.0, 5.0};
  Interval<double> brightness{0.6, 1.0};
  Interval<double> resize{0.5, 1.5};
  std::uint64_t master_seed = 0;

  /// Throws InvalidConfig. pasteable_species is the Dirichlet dimension.
  void validate(std::size_t pasteable_species) const;
  bool operator==(const GenConfig&) const = default;
};

/// RGB canvas + class-label map + raw paste-count height raster.
struct SyntheticScene {
  RgbImage rgb;
  LabelMap labels;
  HeightCounts raw_height;

  SyntheticScene() = default;
  SyntheticScene(RgbImage background);
  int width() const { return rgb.width; }
  int height() const { return rgb.height; }
};

/// Dirichlet draw via normalized Gamma variates.
std::vector<double> draw_species_probs(std::span<const double> alpha, Rng& rng);

/// Index drawn from a categorical distribution over probs.
std::size_t draw_categorical(std::span<const double> probs, Rng& rng);

struct TransformParams {
  double rotation_deg = 0.0;
  double blur_radius = 0.0;
  double brightness = 1.0;
  double resize = 1.0;
};

TransformParams draw_transform_params(const GenConfig& cfg, Rng& rng);

/// Rotation (canvas grows to hold the rotated content), Gaussian blur,
/// brightness on RGB, resize, in that order. Rotation and resize use
/// bilinear interpolation on rgb and alpha together; blur uses sigma =
/// radius. Identity parameters return the input unchanged. Throws
/// EmptyRaster if resizing leaves no pixels.
SampleAsset transform_sample(const SampleAsset& s, const TransformParams& p);
SampleAsset transform_sample(const SampleAsset& s, const GenConfig& cfg, Rng& rng);

/// Paste with the sample's center at (cx, cy). Where alpha > 127 the label
/// becomes the sample's species and raw height increments; rgb is replaced
/// at alpha 255 and alpha-blended in (127, 255). Off-canvas parts clip.
void paste(SyntheticScene& scene, const SampleAsset& s, int cx, int cy);

/// Resizes the background to the canvas when sizes differ.
RgbImage fit_background(const RgbImage& bg, int width, int height);

/// Fully determined by (lib, cfg, image_index); the per-image stream is
/// seeded with derive_seed(cfg.master_seed, image_index).
SyntheticScene generate_scene(const AssetLibrary& lib, const GenConfig& cfg, std::uint64_t image_index);

/// Exact histogram of integer heights, mergeable across workers.
class HeightHistogram {
 public:
  void add(const HeightCounts& raw);
  void add_value(std::uint32_t value, std::uint64_t count = 1);
  void merge(const HeightHistogram& other);
  std::uint64_t total() const { return total_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  /// Inclusive linear-interpolation percentile, q in [0, 1].
  double percentile(double q) const;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct HeightNormalizer {
  double clip_value = 1.0;
};

inline constexpr double kHeightPercentile = 0.75;

/// clip = max(1, 75th percentile of all pooled raw heights).
HeightNormalizer fit_height_normalizer(const HeightHistogram& hist);
HeightNormalizer fit_height_normalizer(std::span<const SyntheticScene> scenes);

/// out = min(raw / clip, 1).
HeightMap normalize_height(const HeightCounts& raw, const HeightNormalizer& norm);

}  // namespace herbage
