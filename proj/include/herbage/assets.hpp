#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "herbage/raster.hpp"
#include "herbage/rng.hpp"
#include "herbage/species.hpp"

namespace herbage {

/// A plant cutout used as paste source.
struct SampleAsset {
  std::string id;
  SpeciesId species;
  RgbImage rgb;  // 3 channels
  Mask alpha;    // 1 channel, same dimensions as rgb

  int width() const { return rgb.width; }
  int height() const { return rgb.height; }
};

struct Background {
  std::string id;
  RgbImage rgb;
};

/// Hard-mask threshold shared by validation and compositing.
inline constexpr std::uint8_t kAlphaThreshold = 127;

/// Throws unless rgb/alpha agree in size and the cutout is non-empty.
void validate_sample(const SampleAsset& s);

/// Immutable collection of cutouts grouped by species plus soil
/// backgrounds. Safe to share across threads once built.
class AssetLibrary {
 public:
  AssetLibrary(SpeciesSet species, std::vector<SampleAsset> samples, std::vector<Background> backgrounds);

  const SpeciesSet& species() const { return species_; }
  const std::vector<SampleAsset>& samples_of(SpeciesId id) const;
  const std::vector<Background>& backgrounds() const { return backgrounds_; }
  std::size_t sample_count() const;

 private:
  SpeciesSet species_;
  std::vector<std::vector<SampleAsset>> by_species_;  // index 0 (soil) stays empty
  std::vector<Background> backgrounds_;
};

/// Load a manifest of the form
///   { "samples": { "<id>": { "file": "a.png", "species": "grass", "mask": "a_mask.png" } },
///     "backgrounds": [ "soil1.jpg", ... ] }
/// Paths are relative to the manifest directory. Alpha comes from the
/// 4th PNG channel, the optional "mask" entry, or a sibling
/// "<stem>_mask.png", in that order. Samples are ordered by id.
AssetLibrary load_library(const std::filesystem::path& manifest_path, const SpeciesSet& species);

/// Uniform draw over the samples of one species.
const SampleAsset& pick_sample(const AssetLibrary& lib, SpeciesId species, Rng& rng);

}  // namespace herbage
