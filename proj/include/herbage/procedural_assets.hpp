#pragma once

#include <cstdint>
#include <filesystem>

#include "herbage/assets.hpp"

namespace herbage {

/// Stand-in crop library drawn from simple shapes: grass blades, clover
/// trefoils, broad weed leaves, reddish clover for the GrassClover preset,
/// and speckled soil. Used by tests and the `make-assets` command when no
/// photographed cutouts are available.
struct ProceduralOptions {
  int samples_per_species = 4;
  int backgrounds = 2;
  int background_size = 256;
  double sample_scale = 1.0;  // 1.0 gives cutouts of roughly 8-24 px
  std::uint64_t seed = 1;
};

AssetLibrary make_procedural_library(const SpeciesSet& species, const ProceduralOptions& opts);

/// Write the library as RGBA PNG cutouts + PNG backgrounds + manifest.json.
/// Returns the manifest path.
std::filesystem::path write_library(const AssetLibrary& lib, const std::filesystem::path& dir);

}  // namespace herbage
