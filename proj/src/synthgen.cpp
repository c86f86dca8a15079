#include "herbage/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "cv_bridge.hpp"

namespace herbage {

namespace {

template <typename T>
void check_interval(const Interval<T>& iv, T lower_bound, const char* name) {
  if (!(iv.min <= iv.max)) throw Error(ErrorCode::InvalidConfig, std::string(name) + ": min must be <= max");
  if (!(iv.min >= lower_bound)) {
    throw Error(ErrorCode::InvalidConfig, std::string(name) + ": min below allowed bound");
  }
}

}  // namespace

void GenConfig::validate(std::size_t pasteable_species) const {
  if (canvas_width < 1 || canvas_height < 1) throw Error(ErrorCode::InvalidConfig, "canvas size must be positive");
  if (n_images < 0) throw Error(ErrorCode::InvalidConfig, "n_images must be >= 0");
  check_interval(paste_count, 1, "paste_count_range");
  if (dirichlet_alpha.size() != pasteable_species) {
    throw Error(ErrorCode::InvalidConfig, "dirichlet_alpha has " + std::to_string(dirichlet_alpha.size()) +
                                              " entries, species set has " + std::to_string(pasteable_species));
  }
  for (double a : dirichlet_alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidConfig, "dirichlet_alpha entries must be > 0");
  }
  if (!(rotation_deg.min <= rotation_deg.max)) throw Error(ErrorCode::InvalidConfig, "rotation_range: min > max");
  check_interval(blur_radius, 0.0, "blur_radius_range");
  check_interval(brightness, 0.0, "brightness_range");
  check_interval(resize, 0.0, "resize_range");
}

SyntheticScene::SyntheticScene(RgbImage background)
    : rgb(std::move(background)),
      labels(rgb.width, rgb.height, 1, 0),
      raw_height(rgb.width, rgb.height, 1, 0) {}

std::vector<double> draw_species_probs(std::span<const double> alpha, Rng& rng) {
  if (alpha.empty()) throw Error(ErrorCode::InvalidArgument, "dirichlet: empty alpha");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "dirichlet: alpha must be > 0");
  }
  std::vector<double> p(alpha.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    p[i] = rng.gamma(alpha[i]);
    sum += p[i];
  }
  if (!(sum > 0.0)) {
    // Every gamma variate underflowed (tiny alphas): fall back to a vertex.
    std::fill(p.begin(), p.end(), 0.0);
    p[rng.index(p.size())] = 1.0;
    return p;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;  // rounding left u just above the accumulated mass
}

TransformParams draw_transform_params(const GenConfig& cfg, Rng& rng) {
  TransformParams p;
  p.rotation_deg = rng.uniform(cfg.rotation_deg.min, cfg.rotation_deg.max);
  p.blur_radius = rng.uniform(cfg.blur_radius.min, cfg.blur_radius.max);
  p.brightness = rng.uniform(cfg.brightness.min, cfg.brightness.max);
  p.resize = rng.uniform(cfg.resize.min, cfg.resize.max);
  return p;
}

SampleAsset transform_sample(const SampleAsset& s, const TransformParams& p) {
  validate_sample(s);
  cv::Mat rgba;
  cv::merge(std::vector<cv::Mat>{detail::view(s.rgb), detail::view(s.alpha)}, rgba);

  if (p.rotation_deg != 0.0) {
    const double rad = p.rotation_deg * CV_PI / 180.0;
    const double c = std::abs(std::cos(rad));
    const double sn = std::abs(std::sin(rad));
    const int w = rgba.cols;
    const int h = rgba.rows;
    const int nw = std::max(1, static_cast<int>(std::ceil(w * c + h * sn - 1e-9)));
    const int nh = std::max(1, static_cast<int>(std::ceil(w * sn + h * c - 1e-9)));
    cv::Mat m = cv::getRotationMatrix2D(cv::Point2f(w / 2.0f, h / 2.0f), p.rotation_deg, 1.0);
    m.at<double>(0, 2) += nw / 2.0 - w / 2.0;
    m.at<double>(1, 2) += nh / 2.0 - h / 2.0;
    cv::Mat rotated;
    cv::warpAffine(rgba, rotated, m, cv::Size(nw, nh), cv::INTER_LINEAR, cv::BORDER_CONSTANT, cv::Scalar::all(0));
    rgba = rotated;
  }

  if (p.blur_radius > 0.0) {
    const int pad = static_cast<int>(std::ceil(3.0 * p.blur_radius));
    cv::Mat padded;
    cv::copyMakeBorder(rgba, padded, pad, pad, pad, pad, cv::BORDER_CONSTANT, cv::Scalar::all(0));
    cv::GaussianBlur(padded, rgba, cv::Size(2 * pad + 1, 2 * pad + 1), p.blur_radius, p.blur_radius,
                     cv::BORDER_CONSTANT);
  }

  if (p.brightness != 1.0) {
    for (int y = 0; y < rgba.rows; ++y) {
      auto* row = rgba.ptr<cv::Vec4b>(y);
      for (int x = 0; x < rgba.cols; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          const long v = std::lround(row[x][ch] * p.brightness);
          row[x][ch] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
        }
      }
    }
  }

  if (p.resize != 1.0) {
    const int nw = static_cast<int>(std::lround(rgba.cols * p.resize));
    const int nh = static_cast<int>(std::lround(rgba.rows * p.resize));
    if (nw < 1 || nh < 1) throw Error(ErrorCode::EmptyRaster, "sample '" + s.id + "': resize leaves no pixels");
    cv::Mat resized;
    cv::resize(rgba, resized, cv::Size(nw, nh), 0, 0, cv::INTER_LINEAR);
    rgba = resized;
  }

  std::vector<cv::Mat> planes;
  cv::split(rgba, planes);
  cv::Mat rgb;
  cv::merge(std::vector<cv::Mat>{planes[0], planes[1], planes[2]}, rgb);

  SampleAsset out;
  out.id = s.id;
  out.species = s.species;
  out.rgb = detail::to_raster(rgb);
  out.alpha = detail::to_raster(planes[3]);
  return out;
}

SampleAsset transform_sample(const SampleAsset& s, const GenConfig& cfg, Rng& rng) {
  return transform_sample(s, draw_transform_params(cfg, rng));
}

void paste(SyntheticScene& scene, const SampleAsset& s, int cx, int cy) {
  const int x0 = cx - s.width() / 2;
  const int y0 = cy - s.height() / 2;
  const int xs = std::max(0, -x0);
  const int ys = std::max(0, -y0);
  const int xe = std::min(s.width(), scene.width() - x0);
  const int ye = std::min(s.height(), scene.height() - y0);
  const auto label = static_cast<std::uint8_t>(s.species.index);
  for (int y = ys; y < ye; ++y) {
    for (int x = xs; x < xe; ++x) {
      const std::uint8_t a = s.alpha.at(x, y);
      if (a <= kAlphaThreshold) continue;
      const int px = x0 + x;
      const int py = y0 + y;
      for (int c = 0; c < 3; ++c) {
        const unsigned src = s.rgb.at(x, y, c);
        if (a == 255) {
          scene.rgb.at(px, py, c) = static_cast<std::uint8_t>(src);
        } else {
          const unsigned dst = scene.rgb.at(px, py, c);
          scene.rgb.at(px, py, c) = static_cast<std::uint8_t>((a * src + (255u - a) * dst + 127u) / 255u);
        }
      }
      scene.labels.at(px, py) = label;
      scene.raw_height.at(px, py) += 1;
    }
  }
}

RgbImage fit_background(const RgbImage& bg, int width, int height) {
  if (bg.same_shape(width, height)) return bg;
  cv::Mat out;
  const bool shrink = bg.width > width && bg.height > height;
  cv::resize(detail::view(bg), out, cv::Size(width, height), 0, 0, shrink ? cv::INTER_AREA : cv::INTER_LINEAR);
  return detail::to_raster(out);
}

SyntheticScene generate_scene(const AssetLibrary& lib, const GenConfig& cfg, std::uint64_t image_index) {
  cfg.validate(lib.species().pasteable_count());
  Rng rng(derive_seed(cfg.master_seed, image_index));

  const auto& backgrounds = lib.backgrounds();
  const auto& bg = backgrounds[rng.index(backgrounds.size())];
  SyntheticScene scene(fit_background(bg.rgb, cfg.canvas_width, cfg.canvas_height));

  const auto n_paste = rng.uniform_int(cfg.paste_count.min, cfg.paste_count.max);
  const auto probs = draw_species_probs(cfg.dirichlet_alpha, rng);

  constexpr int kMaxRedraws = 64;
  for (std::int64_t i = 0; i < n_paste; ++i) {
    const SpeciesId species{static_cast<int>(draw_categorical(probs, rng)) + 1};
    const SampleAsset& source = pick_sample(lib, species, rng);
    SampleAsset transformed;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRedraws && !ok; ++attempt) {
      try {
        transformed = transform_sample(source, cfg, rng);
        ok = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyRaster) throw;
      }
    }
    if (!ok) throw Error(ErrorCode::EmptyRaster, "sample '" + source.id + "': every resize draw was empty");
    const int cx = static_cast<int>(rng.uniform_int(0, cfg.canvas_width - 1));
    const int cy = static_cast<int>(rng.uniform_int(0, cfg.canvas_height - 1));
    paste(scene, transformed, cx, cy);
  }
  return scene;
}

void HeightHistogram::add(const HeightCounts& raw) {
  for (std::uint32_t v : raw.data) add_value(v);
}

void HeightHistogram::add_value(std::uint32_t value, std::uint64_t count) {
  if (value >= counts_.size()) counts_.resize(static_cast<std::size_t>(value) + 1, 0);
  counts_[value] += count;
  total_ += count;
}

void HeightHistogram::merge(const HeightHistogram& other) {
  if (other.counts_.size() > counts_.size()) counts_.resize(other.counts_.size(), 0);
  for (std::size_t i = 0; i < other.counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

double HeightHistogram::percentile(double q) const {
  if (total_ == 0) throw Error(ErrorCode::InvalidArgument, "percentile of an empty histogram");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "percentile: q must be in [0, 1]");
  const double pos = q * static_cast<double>(total_ - 1);
  const auto lo = static_cast<std::uint64_t>(std::floor(pos));
  const std::uint64_t hi = std::min(lo + 1, total_ - 1);
  const double frac = pos - static_cast<double>(lo);

  // Value at order statistic k (0-based).
  auto order_stat = [this](std::uint64_t k) {
    std::uint64_t cum = 0;
    for (std::size_t v = 0; v < counts_.size(); ++v) {
      cum += counts_[v];
      if (k < cum) return static_cast<double>(v);
    }
    return static_cast<double>(counts_.size() - 1);
  };
  const double v_lo = order_stat(lo);
  const double v_hi = order_stat(hi);
  return v_lo + frac * (v_hi - v_lo);
}

HeightNormalizer fit_height_normalizer(const HeightHistogram& hist) {
  if (hist.total() == 0) throw Error(ErrorCode::InvalidArgument, "fit_height_normalizer: no scenes");
  return {std::max(1.0, hist.percentile(kHeightPercentile))};
}

HeightNormalizer fit_height_normalizer(std::span<const SyntheticScene> scenes) {
  if (scenes.empty()) throw Error(ErrorCode::InvalidArgument, "fit_height_normalizer: no scenes");
  HeightHistogram hist;
  for (const auto& s : scenes) hist.add(s.raw_height);
  return fit_height_normalizer(hist);
}

HeightMap normalize_height(const HeightCounts& raw, const HeightNormalizer& norm) {
  if (!(norm.clip_value >= 1.0)) throw Error(ErrorCode::InvalidArgument, "normalize_height: clip_value must be >= 1");
  HeightMap out(raw.width, raw.height, 1, 0.0f);
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    out.data[i] = static_cast<float>(std::min(static_cast<double>(raw.data[i]) / norm.clip_value, 1.0));
  }
  return out;
}

}  // namespace herbage
