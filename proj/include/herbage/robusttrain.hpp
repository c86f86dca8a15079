#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "herbage/labels.hpp"
#include "herbage/raster.hpp"
#include "herbage/ridge.hpp"
#include "herbage/rng.hpp"
#include "herbage/segfeat.hpp"

namespace herbage {

struct LabeledRows {
  std::vector<std::string> ids;
  Eigen::MatrixXd features;  // rows x features
  Eigen::MatrixXd targets;   // rows x targets

  std::size_t size() const { return ids.size(); }
};

/// Trusted rows carry laboratory labels, automatic rows carry model
/// predictions with per-target noise level sigma (observed RMSE).
struct MixedDataset {
  FeatureMode feature_mode = FeatureMode::HL_SL_H;
  std::vector<std::string> feature_names;
  TargetLayout targets;
  LabeledRows trusted;
  LabeledRows automatic;
  std::vector<double> per_target_sigma;

  /// Disjoint ids, consistent shapes, sigma >= 0 per target.
  void validate() const;
};

MixedDataset make_mixed_dataset(const FeatureTable& features, const LabelTable& trusted, const LabelTable& automatic,
                                std::vector<double> per_target_sigma);

/// Per-target RMSE of a ridge model fitted on a random (1 - val_fraction)
/// split of the trusted labels and evaluated on the rest.
std::vector<double> estimate_sigma(const FeatureTable& features, const LabelTable& trusted, const RidgeOptions& opts,
                                   double val_fraction, Rng& rng);

struct BatchParams {
  int batch_size = 12;
  double trusted_fraction = 0.25;
  /// With trusted_fraction rounding to 0 trusted rows per batch, build
  /// automatic-only batches instead of failing.
  bool allow_pure_automatic = false;
};

struct Batch {
  std::vector<std::size_t> trusted;    // indices into MixedDataset::trusted
  std::vector<std::size_t> automatic;  // indices into MixedDataset::automatic
};

struct BatchPlan {
  BatchParams params;
  std::size_t trusted_per_batch = 0;
  std::vector<std::vector<Batch>> epochs;
};

/// round(batch_size * trusted_fraction)
std::size_t trusted_per_batch(const BatchParams& p);

/// Each epoch walks the shuffled automatic rows once, batch_size - k per
/// batch, and tops every batch up with exactly k trusted rows drawn from a
/// reshuffled cycle (the trusted set is oversampled). Without automatic
/// rows an epoch is a shuffled pass over the trusted rows.
BatchPlan build_batches(std::size_t n_trusted, std::size_t n_automatic, const BatchParams& params, int epochs,
                        Rng& rng);

/// Each target shifted by U(-2 sigma_t, +2 sigma_t), then clipped
/// (mass >= 0, percentages in [0, 100]).
std::vector<double> perturb_label(std::span<const double> label, std::span<const double> sigma,
                                  const TargetLayout& layout, Rng& rng);

struct AugmentOptions {
  double p_flip = 0.5;
  double p_gray = 0.2;
};

RgbImage flip_vertical(const RgbImage& img);
/// Rec.601 luma, rounded, replicated to all channels.
RgbImage to_grayscale(const RgbImage& img);
RgbImage augment_image(const RgbImage& img, Rng& rng, const AugmentOptions& opts = {});

struct TrainParams {
  int epochs = 100;
  double learning_rate = 0.03;
  std::vector<int> lr_milestones{50, 80};
  double lr_decay = 0.5;
  BatchParams batch;
  bool perturb = true;
  std::uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  std::size_t batches = 0;
  std::size_t min_trusted_per_batch = 0;
  std::size_t max_trusted_per_batch = 0;
};

struct TrainResult {
  LinearModel model;
  std::vector<EpochLog> log;
};

/// Mini-batch gradient descent on per-target MSE over the scheduled
/// batches; automatic labels are re-perturbed every epoch. Features and
/// targets are standardized internally. Throws Divergence when the loss
/// stops being finite.
TrainResult train_linear(const MixedDataset& ds, const TrainParams& params);

std::string format_epoch_log(const std::vector<EpochLog>& log, const Provenance& provenance);

TrainParams train_params_from_json(const nlohmann::json& j, TrainParams base = {});

}  // namespace herbage
