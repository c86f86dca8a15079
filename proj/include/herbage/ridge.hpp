#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "herbage/labels.hpp"
#include "herbage/provenance.hpp"
#include "herbage/segfeat.hpp"

namespace herbage {

struct RidgeOptions {
  double lambda = 1.0;
  /// Standardize features before solving (stats kept in the model). With
  /// false the penalty applies to raw features.
  bool standardize = true;
  /// Unpenalized intercept; with false the fit goes through the origin.
  bool fit_intercept = true;
  /// Rescale clipped percentages to sum to 100 after prediction.
  bool renormalize_pct = false;
};

/// Multi-target linear model y = W z + b with z = (x - mean) / scale.
/// Produced both by the closed-form ridge solver and by gradient training.
struct LinearModel {
  std::string kind = "ridge";
  FeatureMode feature_mode = FeatureMode::HL_SL_H;
  std::vector<std::string> feature_names;
  TargetLayout targets;
  Eigen::MatrixXd weights;          // targets x features, on standardized features
  Eigen::VectorXd intercepts;       // per target
  Eigen::VectorXd feature_mean;     // zeros when no centering
  Eigen::VectorXd feature_scale;    // ones when not standardized
  RidgeOptions options;
  bool rank_deficient = false;      // lambda = 0 and X lacked full column rank
  Provenance provenance;

  std::size_t feature_count() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t target_count() const { return static_cast<std::size_t>(weights.rows()); }
  /// Weights in raw feature space (W diag(1/scale)).
  Eigen::MatrixXd raw_weights() const;
  /// Intercepts in raw feature space.
  Eigen::VectorXd raw_intercepts() const;
};

using RidgeModel = LinearModel;

/// Per-feature centering/scaling statistics used by fit and train_linear.
void compute_standardization(const Eigen::MatrixXd& x, bool center, bool scale, Eigen::VectorXd& mean,
                             Eigen::VectorXd& scale_out);

/// Closed-form ridge: W = (Z'Z + lambda I)^-1 Z'Y on the standardized,
/// centered design, via LDLT. lambda = 0 uses a complete orthogonal
/// decomposition and returns the minimum-norm solution when X is rank
/// deficient (flagged in the model).
RidgeModel fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, const TargetLayout& layout,
                     const RidgeOptions& opts);

/// Fit on every labeled image; features are looked up by image id.
RidgeModel fit_ridge(const FeatureTable& features, const LabelTable& labels, const RidgeOptions& opts);

/// Linear map + intercept, no clipping.
Eigen::MatrixXd predict_unclipped(const LinearModel& m, const Eigen::MatrixXd& features);
/// Mass clipped at 0, percentages clipped to [0, 100] (and optionally
/// renormalized to 100).
Eigen::MatrixXd predict(const LinearModel& m, const Eigen::MatrixXd& features);
std::vector<double> predict_row(const LinearModel& m, std::span<const double> features);

std::string model_hash(const LinearModel& m);

/// Predict every row of `features` (minus `exclude` ids) into an automatic
/// label table whose provenance records the model hash.
LabelTable autolabel(const LinearModel& m, const FeatureTable& features,
                     const std::vector<std::string>& exclude = {});

/// Feature rows as a matrix, aligned with `ids` order.
Eigen::MatrixXd feature_matrix(const FeatureTable& t, const std::vector<std::string>& ids);
/// Target rows as a matrix, aligned with `ids` order.
Eigen::MatrixXd target_matrix(const LabelTable& t, const std::vector<std::string>& ids);

nlohmann::json model_to_json(const LinearModel& m);
LinearModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const LinearModel& m);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace herbage
