#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "herbage/dataset.hpp"
#include "herbage/planted.hpp"
#include "herbage/refseg.hpp"
#include "herbage/segfeat.hpp"

namespace herbage {

/// Color prototypes from the RGB images and label maps of `ids` (all
/// dataset images when empty).
PrototypeModel fit_prototypes(const std::filesystem::path& data_dir, const DatasetManifest& manifest,
                              const std::vector<std::string>& ids = {}, double temperature = kDefaultTemperature);

/// Writes {id}.smp for every dataset image.
void segment_dataset(const std::filesystem::path& data_dir, const DatasetManifest& manifest,
                     const PrototypeModel& model, const std::filesystem::path& out_dir, int jobs);

struct ScoreSource {
  /// Read {id}.smp from here when set ...
  std::optional<std::filesystem::path> scores_dir;
  /// ... otherwise segment the RGB image on the fly.
  std::optional<PrototypeModel> model;
};

/// One feature row per dataset image, in manifest order. Height comes
/// from the dataset's normalized height rasters.
FeatureTable dataset_features(const std::filesystem::path& data_dir, const DatasetManifest& manifest,
                              const ScoreSource& scores, FeatureMode mode, int jobs);

/// Ground-truth coverage and mean height per dataset image.
std::vector<PlantedInput> planted_inputs(const std::filesystem::path& data_dir, const DatasetManifest& manifest,
                                         int jobs);

}  // namespace herbage
