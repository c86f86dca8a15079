#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>

#include "herbage/assets.hpp"
#include "herbage/raster.hpp"
#include "herbage/rng.hpp"

namespace testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("herbage_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline herbage::SampleAsset solid_sample(std::string id, int species, int w, int h, std::uint8_t r, std::uint8_t g,
                                         std::uint8_t b, std::uint8_t alpha = 255) {
  herbage::SampleAsset s;
  s.id = std::move(id);
  s.species = herbage::SpeciesId{species};
  s.rgb = herbage::RgbImage(w, h, 3);
  for (std::size_t p = 0; p < s.rgb.pixel_count(); ++p) {
    s.rgb.data[p * 3] = r;
    s.rgb.data[p * 3 + 1] = g;
    s.rgb.data[p * 3 + 2] = b;
  }
  s.alpha = herbage::Mask(w, h, 1, alpha);
  return s;
}

inline herbage::Background solid_background(std::string id, int w, int h, std::uint8_t r = 110,
                                            std::uint8_t g = 80, std::uint8_t b = 60) {
  herbage::Background bg{std::move(id), herbage::RgbImage(w, h, 3)};
  for (std::size_t p = 0; p < bg.rgb.pixel_count(); ++p) {
    bg.rgb.data[p * 3] = r;
    bg.rgb.data[p * 3 + 1] = g;
    bg.rgb.data[p * 3 + 2] = b;
  }
  return bg;
}

/// {soil, grass, clover, weeds} with one flat-colored sample each.
inline herbage::AssetLibrary flat_library(int sample_size = 12) {
  std::vector<herbage::SampleAsset> samples{
      solid_sample("grass_0", 1, sample_size, sample_size / 2, 40, 150, 30),
      solid_sample("clover_0", 2, sample_size, sample_size, 150, 220, 150),
      solid_sample("weeds_0", 3, sample_size / 2, sample_size, 200, 190, 20),
  };
  return herbage::AssetLibrary(herbage::SpeciesSet::irish(), std::move(samples), {solid_background("bg0", 64, 64)});
}

/// Per-pixel probabilities from normalized positive random draws.
inline herbage::ScoreMap random_score_map(int w, int h, int classes, herbage::Rng& rng) {
  herbage::ScoreMap s(w, h, classes);
  for (std::size_t p = 0; p < s.pixel_count(); ++p) {
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) sum += (s.at(c, p) = rng.uniform() + 1e-6);
    for (int c = 0; c < classes; ++c) s.at(c, p) /= sum;
  }
  return s;
}

}  // namespace testing
