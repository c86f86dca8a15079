#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "herbage/labels.hpp"
#include "herbage/raster.hpp"
#include "herbage/segfeat.hpp"

namespace herbage {

struct SyntheticScene;

// --- images (PNG/JPEG via OpenCV) -------------------------------------------

struct DecodedImage {
  RgbImage rgb;
  std::optional<Mask> alpha;
};

RgbImage read_rgb(const std::filesystem::path& path);
Mask read_gray(const std::filesystem::path& path);
DecodedImage read_image_with_alpha(const std::filesystem::path& path);

void write_jpeg(const std::filesystem::path& path, const RgbImage& rgb, int quality = 95);
/// 1, 3 (RGB) or 4 (RGBA) channel 8-bit PNG.
void write_png(const std::filesystem::path& path, const Raster<std::uint8_t>& image);
LabelMap read_label_png(const std::filesystem::path& path);

// --- HHT1 height raster ------------------------------------------------------
// "HHT1" | u32 width LE | u32 height LE | zlib(row-major f32 LE values)

std::vector<std::uint8_t> encode_hht(const HeightMap& h);
HeightMap decode_hht(std::span<const std::uint8_t> bytes);
void write_height_raster(const std::filesystem::path& path, const HeightMap& h);
HeightMap read_height_raster(const std::filesystem::path& path);

// --- SMP1 score map ----------------------------------------------------------
// "SMP1" | u32 width LE | u32 height LE | u8 classes | zlib(C planar f32 LE planes)

inline constexpr double kScoreSumTolerance = 1e-2;
inline constexpr double kScoreRenormalizeTolerance = 1e-4;

/// Scores are narrowed to f32.
std::vector<std::uint8_t> encode_smp(const ScoreMap& s);
/// Rejects per-pixel sums further than 1e-2 from 1 and negative or
/// non-finite scores. Pixels whose sum is off by more than 1e-4 are
/// renormalized; the rest are returned as stored.
ScoreMap decode_smp(std::span<const std::uint8_t> bytes);
void write_score_map(const std::filesystem::path& path, const ScoreMap& s);
ScoreMap read_score_map(const std::filesystem::path& path);

// --- scenes ------------------------------------------------------------------

struct ScenePaths {
  std::filesystem::path rgb;     // {id}.jpg
  std::filesystem::path labels;  // {id}_labels.png
  std::filesystem::path height;  // {id}_height.hht
};

ScenePaths scene_paths(const std::filesystem::path& dir, const std::string& image_id);
void write_scene(const SyntheticScene& scene, const HeightMap& normalized_height,
                 const std::filesystem::path& dir, const std::string& image_id);

// --- CSV tables --------------------------------------------------------------
// Lines starting with '#' carry provenance as "# key=value" and are
// otherwise ignored by readers. Numbers are written with 6 significant
// digits.

/// header: image_id,total_mass,<species>_pct...,source
std::string format_label_table(const LabelTable& t);
LabelTable parse_label_table(std::string_view text);
void write_label_table(const std::filesystem::path& path, const LabelTable& t);
LabelTable read_label_table(const std::filesystem::path& path);

/// header: image_id,mode,<feature columns...>
std::string format_feature_table(const FeatureTable& t);
FeatureTable parse_feature_table(std::string_view text);
void write_feature_table(const std::filesystem::path& path, const FeatureTable& t);
FeatureTable read_feature_table(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_number(double v);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace herbage
