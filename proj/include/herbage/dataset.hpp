#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "herbage/assets.hpp"
#include "herbage/provenance.hpp"
#include "herbage/synthgen.hpp"

namespace herbage {

/// Overlay the GenConfig fields present in `j` onto `base`:
///   canvas_size (int or [w, h]), n_images, paste_count_range [a, b],
///   dirichlet_alpha [...], rotation_range, blur_radius_range,
///   brightness_range, resize_range ([min, max]), master_seed.
GenConfig gen_config_from_json(const nlohmann::json& j, GenConfig base = {});
nlohmann::json gen_config_to_json(const GenConfig& cfg);

/// Written as dataset.json next to the generated scenes.
struct DatasetManifest {
  std::vector<std::string> species;  // all classes, soil first
  GenConfig config;
  HeightNormalizer normalizer;
  std::vector<std::string> image_ids;
  Provenance provenance;
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest dataset_manifest_from_json(const nlohmann::json& j);
void write_dataset_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_dataset_manifest(const std::filesystem::path& path);

std::string scene_id(std::uint64_t index);

/// Generate cfg.n_images scenes into out_dir using `jobs` worker threads.
/// Pass 1 renders scenes, writes rgb/label files and pools the height
/// histogram; pass 2 normalizes heights with the fitted clip value. Output
/// bytes do not depend on `jobs`.
DatasetManifest generate_dataset(const AssetLibrary& lib, const GenConfig& cfg, const std::filesystem::path& out_dir,
                                 const Provenance& provenance, int jobs);

/// Run fn(i) for i in [0, n) on `jobs` threads. Exceptions are rethrown on
/// the calling thread (the lowest failing index wins).
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace herbage
