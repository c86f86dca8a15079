#include "herbage/assets.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "herbage/dataio.hpp"

namespace herbage {

namespace fs = std::filesystem;
using nlohmann::json;

void validate_sample(const SampleAsset& s) {
  if (s.rgb.channels != 3) throw Error(ErrorCode::Decode, "sample '" + s.id + "': rgb must have 3 channels");
  if (s.alpha.channels != 1 || !s.alpha.same_shape(s.rgb)) {
    throw Error(ErrorCode::ShapeMismatch, "sample '" + s.id + "': alpha and rgb dimensions differ");
  }
  if (s.species.index < 1) {
    throw Error(ErrorCode::UnknownSpecies, "sample '" + s.id + "': soil is not a pasteable species");
  }
  const bool any = std::any_of(s.alpha.data.begin(), s.alpha.data.end(),
                               [](std::uint8_t a) { return a > kAlphaThreshold; });
  if (!any) throw Error(ErrorCode::EmptyMask, "sample '" + s.id + "': empty alpha mask");
}

AssetLibrary::AssetLibrary(SpeciesSet species, std::vector<SampleAsset> samples,
                           std::vector<Background> backgrounds)
    : species_(std::move(species)), by_species_(species_.size()), backgrounds_(std::move(backgrounds)) {
  if (backgrounds_.empty()) throw Error(ErrorCode::NoBackgrounds, "no backgrounds");
  for (const auto& bg : backgrounds_) {
    if (bg.rgb.empty() || bg.rgb.channels != 3) {
      throw Error(ErrorCode::Decode, "background '" + bg.id + "': expected a non-empty RGB image");
    }
  }
  for (auto& s : samples) {
    if (!species_.contains(s.species)) {
      throw Error(ErrorCode::UnknownSpecies, "sample '" + s.id + "': species index out of range");
    }
    validate_sample(s);
    by_species_[static_cast<std::size_t>(s.species.index)].push_back(std::move(s));
  }
  for (std::size_t i = 1; i < by_species_.size(); ++i) {
    if (by_species_[i].empty()) {
      throw Error(ErrorCode::MissingSpecies, "no samples for species '" + species_.names()[i] + "'");
    }
  }
}

const std::vector<SampleAsset>& AssetLibrary::samples_of(SpeciesId id) const {
  if (id.index < 1 || !species_.contains(id)) {
    throw Error(ErrorCode::MissingSpecies, "species index " + std::to_string(id.index) + " has no samples");
  }
  return by_species_[static_cast<std::size_t>(id.index)];
}

std::size_t AssetLibrary::sample_count() const {
  std::size_t n = 0;
  for (const auto& v : by_species_) n += v.size();
  return n;
}

namespace {

SampleAsset load_sample(const std::string& id, const json& entry, const fs::path& base,
                        const SpeciesSet& species) {
  if (!entry.is_object() || !entry.contains("file") || !entry.contains("species")) {
    throw Error(ErrorCode::InvalidConfig, "sample '" + id + "': entry needs 'file' and 'species'");
  }
  const auto species_name = entry.at("species").get<std::string>();
  const auto sid = species.find(species_name);
  if (!sid) throw Error(ErrorCode::UnknownSpecies, "sample '" + id + "': unknown species '" + species_name + "'");
  if (sid->index == 0) throw Error(ErrorCode::UnknownSpecies, "sample '" + id + "': soil cannot be a sample");

  const fs::path file = base / entry.at("file").get<std::string>();
  if (!fs::exists(file)) throw Error(ErrorCode::Io, "sample '" + id + "': missing file " + file.string());

  SampleAsset s;
  s.id = id;
  s.species = *sid;
  try {
    auto img = read_image_with_alpha(file);
    s.rgb = std::move(img.rgb);
    if (entry.contains("mask")) {
      s.alpha = read_gray(base / entry.at("mask").get<std::string>());
    } else if (img.alpha) {
      s.alpha = std::move(*img.alpha);
    } else {
      const fs::path sibling = file.parent_path() / (file.stem().string() + "_mask.png");
      if (!fs::exists(sibling)) throw Error(ErrorCode::Decode, "no alpha channel and no mask file");
      s.alpha = read_gray(sibling);
    }
  } catch (const Error& e) {
    throw Error(e.code(), "sample '" + id + "': " + e.what());
  }
  validate_sample(s);
  return s;
}

}  // namespace

AssetLibrary load_library(const fs::path& manifest_path, const SpeciesSet& species) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Decode, "manifest " + manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.parent_path();

  std::vector<SampleAsset> samples;
  if (doc.contains("samples")) {
    // json objects iterate in key order, which fixes the library ordering.
    for (const auto& [id, entry] : doc.at("samples").items()) {
      samples.push_back(load_sample(id, entry, base, species));
    }
  }

  std::vector<Background> backgrounds;
  if (doc.contains("backgrounds")) {
    const auto& bgs = doc.at("backgrounds");
    auto load_bg = [&](const std::string& id, const std::string& rel) {
      const fs::path file = base / rel;
      if (!fs::exists(file)) throw Error(ErrorCode::Io, "background '" + id + "': missing file " + file.string());
      try {
        backgrounds.push_back({id, read_rgb(file)});
      } catch (const Error& e) {
        throw Error(e.code(), "background '" + id + "': " + e.what());
      }
    };
    if (bgs.is_array()) {
      for (const auto& b : bgs) {
        const auto rel = b.get<std::string>();
        load_bg(fs::path(rel).stem().string(), rel);
      }
    } else {
      for (const auto& [id, b] : bgs.items()) load_bg(id, b.get<std::string>());
    }
  }
  if (backgrounds.empty()) throw Error(ErrorCode::NoBackgrounds, "no backgrounds");

  return AssetLibrary(species, std::move(samples), std::move(backgrounds));
}

const SampleAsset& pick_sample(const AssetLibrary& lib, SpeciesId species, Rng& rng) {
  const auto& pool = lib.samples_of(species);
  return pool[rng.index(pool.size())];
}

}  // namespace herbage
