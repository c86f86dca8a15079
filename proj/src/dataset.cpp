#include "herbage/dataset.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "herbage/dataio.hpp"

namespace herbage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
Interval<T> read_interval(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be a [min, max] pair");
  }
  return {v[0].get<T>(), v[1].get<T>()};
}

}  // namespace

GenConfig gen_config_from_json(const json& j, GenConfig base) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "generator config must be a JSON object");
  static const std::set<std::string> known{"canvas_size",     "n_images",          "paste_count_range",
                                           "dirichlet_alpha", "rotation_range",    "blur_radius_range",
                                           "brightness_range", "resize_range",     "master_seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::InvalidConfig, "generator config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("canvas_size")) {
      const auto& c = j.at("canvas_size");
      if (c.is_array()) {
        if (c.size() != 2) throw Error(ErrorCode::InvalidConfig, "canvas_size must be an int or [w, h]");
        base.canvas_width = c[0].get<int>();
        base.canvas_height = c[1].get<int>();
      } else {
        base.canvas_width = base.canvas_height = c.get<int>();
      }
    }
    if (j.contains("n_images")) base.n_images = j.at("n_images").get<int>();
    if (j.contains("paste_count_range")) base.paste_count = read_interval<int>(j, "paste_count_range");
    if (j.contains("dirichlet_alpha")) base.dirichlet_alpha = j.at("dirichlet_alpha").get<std::vector<double>>();
    if (j.contains("rotation_range")) base.rotation_deg = read_interval<double>(j, "rotation_range");
    if (j.contains("blur_radius_range")) base.blur_radius = read_interval<double>(j, "blur_radius_range");
    if (j.contains("brightness_range")) base.brightness = read_interval<double>(j, "brightness_range");
    if (j.contains("resize_range")) base.resize = read_interval<double>(j, "resize_range");
    if (j.contains("master_seed")) base.master_seed = j.at("master_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("generator config: ") + e.what());
  }
  return base;
}

json gen_config_to_json(const GenConfig& cfg) {
  return {
      {"canvas_size", {cfg.canvas_width, cfg.canvas_height}},
      {"n_images", cfg.n_images},
      {"paste_count_range", {cfg.paste_count.min, cfg.paste_count.max}},
      {"dirichlet_alpha", cfg.dirichlet_alpha},
      {"rotation_range", {cfg.rotation_deg.min, cfg.rotation_deg.max}},
      {"blur_radius_range", {cfg.blur_radius.min, cfg.blur_radius.max}},
      {"brightness_range", {cfg.brightness.min, cfg.brightness.max}},
      {"resize_range", {cfg.resize.min, cfg.resize.max}},
      {"master_seed", cfg.master_seed},
  };
}

json to_json(const DatasetManifest& m) {
  return {
      {"species", m.species},
      {"generator", gen_config_to_json(m.config)},
      {"height_clip_value", m.normalizer.clip_value},
      {"images", m.image_ids},
      {"provenance", m.provenance},
  };
}

DatasetManifest dataset_manifest_from_json(const json& j) {
  try {
    DatasetManifest m;
    m.species = j.at("species").get<std::vector<std::string>>();
    m.config = gen_config_from_json(j.at("generator"));
    m.normalizer.clip_value = j.at("height_clip_value").get<double>();
    m.image_ids = j.at("images").get<std::vector<std::string>>();
    if (j.contains("provenance")) m.provenance = j.at("provenance").get<Provenance>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("dataset manifest: ") + e.what());
  }
}

void write_dataset_manifest(const fs::path& path, const DatasetManifest& m) {
  write_text_file(path, to_json(m).dump(2) + "\n");
}

DatasetManifest read_dataset_manifest(const fs::path& path) {
  try {
    return dataset_manifest_from_json(json::parse(read_text_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Decode, path.string() + ": " + e.what());
  }
}

std::string scene_id(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "syn_%06llu", static_cast<unsigned long long>(index));
  return buf;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::size_t err_index = n;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

DatasetManifest generate_dataset(const AssetLibrary& lib, const GenConfig& cfg, const fs::path& out_dir,
                                 const Provenance& provenance, int jobs) {
  cfg.validate(lib.species().pasteable_count());
  fs::create_directories(out_dir);

  const auto n = static_cast<std::size_t>(cfg.n_images);
  HeightHistogram pooled;
  std::mutex hist_mu;

  auto raw_path = [&](std::size_t i) { return out_dir / (scene_id(i) + "_rawheight.hht"); };

  parallel_for(n, jobs, [&](std::size_t i) {
    const SyntheticScene scene = generate_scene(lib, cfg, i);
    const auto paths = scene_paths(out_dir, scene_id(i));
    write_jpeg(paths.rgb, scene.rgb, 95);
    write_png(paths.labels, scene.labels);

    HeightMap counts(scene.width(), scene.height(), 1, 0.0f);
    for (std::size_t p = 0; p < counts.data.size(); ++p) counts.data[p] = static_cast<float>(scene.raw_height.data[p]);
    write_height_raster(raw_path(i), counts);

    HeightHistogram local;
    local.add(scene.raw_height);
    std::lock_guard lock(hist_mu);
    pooled.merge(local);
  });

  DatasetManifest m;
  m.species = lib.species().names();
  m.config = cfg;
  m.provenance = provenance;
  if (n > 0) m.normalizer = fit_height_normalizer(pooled);

  parallel_for(n, jobs, [&](std::size_t i) {
    const HeightMap counts = read_height_raster(raw_path(i));
    HeightCounts raw(counts.width, counts.height, 1, 0);
    for (std::size_t p = 0; p < raw.data.size(); ++p) raw.data[p] = static_cast<std::uint32_t>(counts.data[p]);
    write_height_raster(scene_paths(out_dir, scene_id(i)).height, normalize_height(raw, m.normalizer));
    fs::remove(raw_path(i));
  });

  for (std::size_t i = 0; i < n; ++i) m.image_ids.push_back(scene_id(i));
  write_dataset_manifest(out_dir / "dataset.json", m);
  return m;
}

}  // namespace herbage
