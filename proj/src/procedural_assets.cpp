#include "herbage/procedural_assets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "herbage/dataio.hpp"

namespace herbage {

namespace fs = std::filesystem;

namespace {

enum class Shape { Blade, Trefoil, Leaf };

struct Style {
  Shape shape;
  std::array<int, 3> color;
};

Style style_for(const std::string& name, std::size_t index) {
  if (name == "grass") return {Shape::Blade, {52, 128, 36}};
  if (name == "clover" || name == "white_clover") return {Shape::Trefoil, {120, 190, 110}};
  if (name == "red_clover") return {Shape::Trefoil, {150, 110, 120}};
  if (name == "weeds") return {Shape::Leaf, {170, 160, 40}};
  // Unknown species get a shape and hue derived from their index.
  const int hue = static_cast<int>((index * 67) % 180);
  return {static_cast<Shape>(index % 3), {60 + hue / 2, 200 - hue / 2, 40 + hue / 3}};
}

/// Signed distance (in pixels, positive inside) to an axis-aligned ellipse
/// centred at (cx, cy), rotated by theta. Approximate but smooth.
double ellipse_depth(double x, double y, double cx, double cy, double a, double b, double theta) {
  const double dx = x - cx;
  const double dy = y - cy;
  const double u = dx * std::cos(theta) + dy * std::sin(theta);
  const double v = -dx * std::sin(theta) + dy * std::cos(theta);
  const double r = std::sqrt((u / a) * (u / a) + (v / b) * (v / b));
  return (1.0 - r) * std::min(a, b);
}

SampleAsset draw_sample(const std::string& id, SpeciesId species, const Style& style, double scale, Rng& rng) {
  std::function<double(double, double)> depth;
  int w = 0, h = 0;
  switch (style.shape) {
    case Shape::Blade: {
      const double a = rng.uniform(7.0, 12.0) * scale;
      const double b = rng.uniform(1.3, 2.2) * scale;
      const double theta = rng.uniform(-0.4, 0.4);
      w = h = static_cast<int>(std::ceil(2 * a + 4));
      const double c = w / 2.0;
      depth = [=](double x, double y) { return ellipse_depth(x, y, c, c, a, b, theta); };
      break;
    }
    case Shape::Trefoil: {
      const double r = rng.uniform(2.6, 3.6) * scale;
      w = h = static_cast<int>(std::ceil(4.4 * r + 4));
      const double c = w / 2.0;
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      depth = [=](double x, double y) {
        double best = -1e9;
        for (int k = 0; k < 3; ++k) {
          const double ang = phase + k * 2.0 * M_PI / 3.0;
          const double lx = c + 1.1 * r * std::cos(ang);
          const double ly = c + 1.1 * r * std::sin(ang);
          best = std::max(best, ellipse_depth(x, y, lx, ly, r, r, 0.0));
        }
        return best;
      };
      break;
    }
    case Shape::Leaf: {
      const double a = rng.uniform(5.0, 7.5) * scale;
      const double b = rng.uniform(3.0, 4.5) * scale;
      const double theta = rng.uniform(0.0, M_PI);
      w = h = static_cast<int>(std::ceil(2 * a + 4));
      const double c = w / 2.0;
      depth = [=](double x, double y) { return ellipse_depth(x, y, c, c, a, b, theta); };
      break;
    }
  }

  SampleAsset s;
  s.id = id;
  s.species = species;
  s.rgb = RgbImage(w, h, 3, 0);
  s.alpha = Mask(w, h, 1, 0);
  const double tint = rng.uniform(0.9, 1.1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth(x + 0.5, y + 0.5);
      const double cover = std::clamp(d + 0.5, 0.0, 1.0);
      s.alpha.at(x, y) = static_cast<std::uint8_t>(std::lround(cover * 255.0));
      const double shade = 0.85 + 0.15 * std::clamp(d / 3.0, 0.0, 1.0);
      for (int ch = 0; ch < 3; ++ch) {
        const double v = style.color[ch] * tint * shade + rng.uniform(-8.0, 8.0);
        s.rgb.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return s;
}

RgbImage draw_soil(int size, Rng& rng) {
  RgbImage img(size, size, 3, 0);
  const std::array<int, 3> base{112, 82, 58};
  const double tone = rng.uniform(0.85, 1.1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double grain = rng.uniform(-14.0, 14.0);
      for (int ch = 0; ch < 3; ++ch) {
        const double v = base[ch] * tone + grain + rng.uniform(-4.0, 4.0);
        img.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

}  // namespace

AssetLibrary make_procedural_library(const SpeciesSet& species, const ProceduralOptions& opts) {
  if (opts.samples_per_species < 1 || opts.backgrounds < 1 || opts.background_size < 1 || !(opts.sample_scale > 0)) {
    throw Error(ErrorCode::InvalidConfig, "procedural library: counts and sizes must be positive");
  }
  Rng rng(derive_seed(opts.seed, 0x617373657473ULL));
  std::vector<SampleAsset> samples;
  for (std::size_t sp = 1; sp < species.size(); ++sp) {
    const auto& name = species.names()[sp];
    const Style style = style_for(name, sp);
    for (int k = 0; k < opts.samples_per_species; ++k) {
      samples.push_back(draw_sample(name + "_" + std::to_string(k), SpeciesId{static_cast<int>(sp)}, style,
                                    opts.sample_scale, rng));
    }
  }
  std::vector<Background> backgrounds;
  for (int k = 0; k < opts.backgrounds; ++k) {
    backgrounds.push_back({"soil_" + std::to_string(k), draw_soil(opts.background_size, rng)});
  }
  return AssetLibrary(species, std::move(samples), std::move(backgrounds));
}

fs::path write_library(const AssetLibrary& lib, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["species"] = lib.species().names();
  manifest["samples"] = nlohmann::json::object();
  for (std::size_t sp = 1; sp < lib.species().size(); ++sp) {
    for (const auto& s : lib.samples_of(SpeciesId{static_cast<int>(sp)})) {
      Raster<std::uint8_t> rgba(s.width(), s.height(), 4, 0);
      for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
          for (int c = 0; c < 3; ++c) rgba.at(x, y, c) = s.rgb.at(x, y, c);
          rgba.at(x, y, 3) = s.alpha.at(x, y);
        }
      }
      const std::string file = s.id + ".png";
      write_png(dir / file, rgba);
      manifest["samples"][s.id] = {{"file", file}, {"species", lib.species().name(s.species)}};
    }
  }
  manifest["backgrounds"] = nlohmann::json::array();
  for (const auto& bg : lib.backgrounds()) {
    const std::string file = bg.id + ".png";
    write_png(dir / file, bg.rgb);
    manifest["backgrounds"].push_back(file);
  }
  const fs::path path = dir / "manifest.json";
  write_text_file(path, manifest.dump(2) + "\n");
  return path;
}

}  // namespace herbage
