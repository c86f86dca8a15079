#include "herbage/pipeline.hpp"

#include <filesystem>

#include "herbage/dataio.hpp"

namespace fs = std::filesystem;

namespace herbage {

PrototypeModel fit_prototypes(const fs::path& data_dir, const DatasetManifest& manifest,
                              const std::vector<std::string>& ids, double temperature) {
  PrototypeFitter fitter(manifest.species);
  for (const auto& id : ids.empty() ? manifest.image_ids : ids) {
    const auto paths = scene_paths(data_dir, id);
    fitter.add(read_rgb(paths.rgb), read_label_png(paths.labels));
  }
  return fitter.finish(temperature);
}

void segment_dataset(const fs::path& data_dir, const DatasetManifest& manifest, const PrototypeModel& model,
                     const fs::path& out_dir, int jobs) {
  fs::create_directories(out_dir);
  parallel_for(manifest.image_ids.size(), jobs, [&](std::size_t i) {
    const auto& id = manifest.image_ids[i];
    write_score_map(out_dir / (id + ".smp"), segment(read_rgb(scene_paths(data_dir, id).rgb), model));
  });
}

FeatureTable dataset_features(const fs::path& data_dir, const DatasetManifest& manifest, const ScoreSource& scores,
                              FeatureMode mode, int jobs) {
  if (!scores.scores_dir && !scores.model) {
    throw Error(ErrorCode::InvalidArgument, "features need a score directory or a prototype model");
  }
  if (scores.model && scores.model->classes != manifest.species) {
    throw Error(ErrorCode::InvalidArgument, "prototype model classes do not match the dataset species");
  }
  FeatureTable table;
  table.mode = mode;
  table.classes = manifest.species;
  table.rows.resize(manifest.image_ids.size());
  parallel_for(manifest.image_ids.size(), jobs, [&](std::size_t i) {
    const auto& id = manifest.image_ids[i];
    const auto paths = scene_paths(data_dir, id);
    const ScoreMap s = scores.scores_dir ? read_score_map(*scores.scores_dir / (id + ".smp"))
                                         : segment(read_rgb(paths.rgb), *scores.model);
    if (static_cast<std::size_t>(s.classes()) != manifest.species.size()) {
      throw Error(ErrorCode::ShapeMismatch, "score map for '" + id + "' has the wrong class count");
    }
    std::optional<HeightMap> height;
    if (uses_height(mode)) height = read_height_raster(paths.height);
    table.rows[i] = FeatureRow{id, extract_features(s, height ? &*height : nullptr, mode).flatten()};
  });
  return table;
}

std::vector<PlantedInput> planted_inputs(const fs::path& data_dir, const DatasetManifest& manifest, int jobs) {
  std::vector<PlantedInput> out(manifest.image_ids.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const auto& id = manifest.image_ids[i];
    const auto paths = scene_paths(data_dir, id);
    out[i] = planted_input(id, read_label_png(paths.labels), read_height_raster(paths.height),
                           manifest.species.size());
  });
  return out;
}

}  // namespace herbage
