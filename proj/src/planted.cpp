#include "herbage/planted.hpp"

#include <algorithm>
#include <cmath>

#include "herbage/error.hpp"

namespace herbage {

PlantedMap PlantedMap::standard(const std::vector<std::string>& pasteable) {
  const auto s = static_cast<Eigen::Index>(pasteable.size());
  if (s < 1) throw Error(ErrorCode::InvalidArgument, "planted map needs at least one species");
  PlantedMap m;
  m.species = pasteable;
  m.pct_weights.resize(s, s + 1);
  for (Eigen::Index k = 0; k < s; ++k) {
    m.pct_weights(k, 0) = 100.0 / static_cast<double>(s);
    for (Eigen::Index j = 0; j < s; ++j) {
      if (s == 1) {
        m.pct_weights(k, j + 1) = 100.0;
      } else {
        m.pct_weights(k, j + 1) = k == j ? 70.0 : 30.0 / static_cast<double>(s - 1);
      }
    }
  }
  m.mass_weights.resize(s + 1);
  m.mass_weights(0) = 0.0;
  for (Eigen::Index j = 0; j < s; ++j) m.mass_weights(j + 1) = 1500.0 + 500.0 * static_cast<double>(j);
  return m;
}

LabelRow PlantedMap::apply(std::string image_id, const std::vector<double>& coverage, double mean_height) const {
  if (static_cast<Eigen::Index>(coverage.size()) != pct_weights.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "planted map: coverage length does not match class count");
  }
  const Eigen::Map<const Eigen::VectorXd> cov(coverage.data(), static_cast<Eigen::Index>(coverage.size()));
  LabelRow row;
  row.image_id = std::move(image_id);
  row.total_mass = mass_base + mass_weights.dot(cov) + mass_height_weight * mean_height;
  const Eigen::VectorXd pct = pct_weights * cov;
  row.species_pct.assign(pct.data(), pct.data() + pct.size());
  return row;
}

PlantedInput planted_input(std::string image_id, const LabelMap& labels, const HeightMap& height,
                           std::size_t classes) {
  if (labels.width != height.width || labels.height != height.height) {
    throw Error(ErrorCode::ShapeMismatch, "planted input: label and height rasters differ in size");
  }
  if (labels.pixel_count() == 0) throw Error(ErrorCode::EmptyRaster, "planted input: empty raster");
  std::vector<std::uint64_t> counts(classes, 0);
  for (auto v : labels.data) {
    if (v >= classes) throw Error(ErrorCode::UnknownSpecies, "planted input: label value out of range");
    ++counts[v];
  }
  PlantedInput in;
  in.image_id = std::move(image_id);
  const double n = static_cast<double>(labels.pixel_count());
  for (auto c : counts) in.coverage.push_back(static_cast<double>(c) / n);
  double sum = 0.0;
  for (float v : height.data) sum += v;
  in.mean_height = sum / n;
  return in;
}

PlantedLabels plant_labels(const PlantedMap& map, const std::vector<PlantedInput>& inputs, double noise_fraction,
                           Rng& rng) {
  if (!(noise_fraction >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise fraction must be >= 0");
  PlantedLabels out;
  out.labels.species = out.noiseless.species = map.species;
  for (const auto& in : inputs) {
    auto row = map.apply(in.image_id, in.coverage, in.mean_height);
    row.source = LabelSource::Trusted;
    out.noiseless.rows.push_back(std::move(row));
  }
  const std::size_t s = map.species.size();
  const std::size_t t = s + 1;
  std::vector<double> lo(t, INFINITY), hi(t, -INFINITY);
  for (const auto& r : out.noiseless.rows) {
    const auto y = to_targets(r);
    for (std::size_t i = 0; i < t; ++i) {
      lo[i] = std::min(lo[i], y[i]);
      hi[i] = std::max(hi[i], y[i]);
    }
  }
  out.noise_sigma.resize(t, 0.0);
  for (std::size_t i = 0; i < t && !inputs.empty(); ++i) out.noise_sigma[i] = noise_fraction * (hi[i] - lo[i]);

  const double zero_sum_scale = s > 1 ? std::sqrt(static_cast<double>(s) / static_cast<double>(s - 1)) : 0.0;
  for (const auto& clean : out.noiseless.rows) {
    LabelRow row = clean;
    row.total_mass = std::max(0.0, row.total_mass + out.noise_sigma[0] * rng.normal());
    std::vector<double> e(s);
    double mean = 0.0;
    for (std::size_t k = 0; k < s; ++k) {
      e[k] = out.noise_sigma[k + 1] * rng.normal();
      mean += e[k];
    }
    mean /= static_cast<double>(s);
    double sum = 0.0;
    for (std::size_t k = 0; k < s; ++k) {
      row.species_pct[k] = std::clamp(row.species_pct[k] + (e[k] - mean) * zero_sum_scale, 0.0, 100.0);
      sum += row.species_pct[k];
    }
    // Clipping only kicks in near the simplex boundary; restore the sum.
    if (sum > 0.0 && std::abs(sum - 100.0) > 1e-9) {
      for (auto& v : row.species_pct) v *= 100.0 / sum;
    }
    out.labels.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace herbage
