#include "herbage/robusttrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "herbage/dataio.hpp"

namespace herbage {

void MixedDataset::validate() const {
  const auto f = static_cast<Eigen::Index>(feature_names.size());
  const auto t = static_cast<Eigen::Index>(targets.size());
  for (const LabeledRows* rows : {&trusted, &automatic}) {
    if (static_cast<std::size_t>(rows->features.rows()) != rows->ids.size() ||
        static_cast<std::size_t>(rows->targets.rows()) != rows->ids.size() ||
        (!rows->ids.empty() && (rows->features.cols() != f || rows->targets.cols() != t))) {
      throw Error(ErrorCode::ShapeMismatch, "mixed dataset: inconsistent row shapes");
    }
  }
  std::set<std::string> seen(trusted.ids.begin(), trusted.ids.end());
  for (const auto& id : automatic.ids) {
    if (seen.count(id)) throw Error(ErrorCode::InvalidArgument, "image '" + id + "' is both trusted and automatic");
  }
  if (per_target_sigma.size() != targets.size()) {
    throw Error(ErrorCode::InvalidArgument, "per_target_sigma needs one entry per target");
  }
  for (double s : per_target_sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "per_target_sigma must be >= 0");
  }
}

namespace {

LabeledRows rows_from(const FeatureTable& features, const LabelTable& labels) {
  LabeledRows r;
  for (const auto& row : labels.rows) r.ids.push_back(row.image_id);
  r.features = feature_matrix(features, r.ids);
  r.targets = target_matrix(labels, r.ids);
  return r;
}

}  // namespace

MixedDataset make_mixed_dataset(const FeatureTable& features, const LabelTable& trusted, const LabelTable& automatic,
                                std::vector<double> per_target_sigma) {
  if (!automatic.rows.empty() && automatic.species != trusted.species) {
    throw Error(ErrorCode::InvalidArgument, "trusted and automatic tables list different species");
  }
  MixedDataset ds;
  ds.feature_mode = features.mode;
  ds.feature_names = features.column_names();
  ds.targets = TargetLayout::for_species(trusted.species);
  ds.trusted = rows_from(features, trusted);
  ds.automatic = rows_from(features, automatic);
  ds.per_target_sigma = std::move(per_target_sigma);
  ds.validate();
  return ds;
}

std::vector<double> estimate_sigma(const FeatureTable& features, const LabelTable& trusted, const RidgeOptions& opts,
                                   double val_fraction, Rng& rng) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "validation fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(trusted.rows.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(order.size())));
  if (n_val < 1 || n_val >= order.size()) {
    throw Error(ErrorCode::InvalidArgument, "too few trusted rows for a validation split");
  }
  LabelTable train{trusted.species, {}, {}}, val{trusted.species, {}, {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? val : train).rows.push_back(trusted.rows[order[i]]);
  }
  const RidgeModel m = fit_ridge(features, train, opts);
  std::vector<std::string> ids;
  for (const auto& r : val.rows) ids.push_back(r.image_id);
  const Eigen::MatrixXd pred = predict(m, feature_matrix(features, ids));
  const Eigen::MatrixXd truth = target_matrix(val, ids);
  std::vector<double> sigma(static_cast<std::size_t>(truth.cols()));
  for (Eigen::Index t = 0; t < truth.cols(); ++t) {
    sigma[static_cast<std::size_t>(t)] = std::sqrt((pred.col(t) - truth.col(t)).squaredNorm() / truth.rows());
  }
  return sigma;
}

std::size_t trusted_per_batch(const BatchParams& p) {
  return static_cast<std::size_t>(std::lround(p.batch_size * p.trusted_fraction));
}

namespace {

/// Endless reshuffled walk over [0, n).
class Cycler {
 public:
  Cycler(std::size_t n, Rng& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), 0);
    pos_ = n;
  }
  std::size_t next() {
    if (pos_ == order_.size()) {
      shuffle(order_, rng_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> order_;
  Rng& rng_;
  std::size_t pos_;
};

}  // namespace

BatchPlan build_batches(std::size_t n_trusted, std::size_t n_automatic, const BatchParams& params, int epochs,
                        Rng& rng) {
  if (params.batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (!(params.trusted_fraction >= 0.0 && params.trusted_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "trusted_fraction must be in [0, 1]");
  }
  if (epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 0");
  const auto bs = static_cast<std::size_t>(params.batch_size);

  BatchPlan plan;
  plan.params = params;
  plan.trusted_per_batch = trusted_per_batch(params);
  const std::size_t k = plan.trusted_per_batch;

  if (k == 0 && !params.allow_pure_automatic) {
    throw Error(ErrorCode::InvalidConfig, "trusted_fraction rounds to 0 trusted rows per batch");
  }
  if (k > 0 && n_trusted == 0) throw Error(ErrorCode::InvalidArgument, "trusted set is empty");
  if (k == 0 && n_automatic == 0) throw Error(ErrorCode::InvalidArgument, "no automatic rows to train on");
  if (k == bs && n_automatic > 0) {
    throw Error(ErrorCode::InvalidConfig, "trusted_fraction leaves no room for automatic rows");
  }

  Cycler trusted(n_trusted, rng);
  std::vector<std::size_t> autos(n_automatic);
  std::iota(autos.begin(), autos.end(), 0);

  for (int e = 0; e < epochs; ++e) {
    std::vector<Batch> batches;
    if (n_automatic == 0) {
      // Trusted-only training: one shuffled pass per epoch.
      std::vector<std::size_t> order(n_trusted);
      std::iota(order.begin(), order.end(), 0);
      shuffle(order, rng);
      for (std::size_t i = 0; i < order.size(); i += bs) {
        Batch b;
        b.trusted.assign(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(i + bs, order.size())));
        batches.push_back(std::move(b));
      }
    } else {
      shuffle(autos, rng);
      const std::size_t per_batch = bs - k;
      for (std::size_t i = 0; i < autos.size(); i += per_batch) {
        Batch b;
        b.automatic.assign(autos.begin() + static_cast<std::ptrdiff_t>(i),
                           autos.begin() + static_cast<std::ptrdiff_t>(std::min(i + per_batch, autos.size())));
        for (std::size_t j = 0; j < k; ++j) b.trusted.push_back(trusted.next());
        batches.push_back(std::move(b));
      }
    }
    plan.epochs.push_back(std::move(batches));
  }
  return plan;
}

std::vector<double> perturb_label(std::span<const double> label, std::span<const double> sigma,
                                  const TargetLayout& layout, Rng& rng) {
  if (label.size() != sigma.size() || label.size() != layout.size()) {
    throw Error(ErrorCode::ShapeMismatch, "perturb_label: label, sigma and layout lengths differ");
  }
  std::vector<double> out(label.size());
  for (std::size_t t = 0; t < label.size(); ++t) {
    if (!std::isfinite(sigma[t])) throw Error(ErrorCode::InvalidArgument, "perturb_label: sigma must be finite");
    const double half_width = 2.0 * std::abs(sigma[t]);
    out[t] = clip_target(label[t] + rng.uniform(-half_width, half_width), layout.kinds[t]);
  }
  return out;
}

RgbImage flip_vertical(const RgbImage& img) {
  RgbImage out(img.width, img.height, img.channels);
  const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) {
    std::copy_n(img.data.begin() + static_cast<std::ptrdiff_t>(row * (img.height - 1 - y)), row,
                out.data.begin() + static_cast<std::ptrdiff_t>(row * y));
  }
  return out;
}

RgbImage to_grayscale(const RgbImage& img) {
  if (img.channels != 3) throw Error(ErrorCode::InvalidArgument, "to_grayscale: expected RGB");
  RgbImage out(img.width, img.height, 3);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double y = 0.299 * img.data[p * 3] + 0.587 * img.data[p * 3 + 1] + 0.114 * img.data[p * 3 + 2];
    const auto v = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
    out.data[p * 3] = out.data[p * 3 + 1] = out.data[p * 3 + 2] = v;
  }
  return out;
}

RgbImage augment_image(const RgbImage& img, Rng& rng, const AugmentOptions& opts) {
  const bool flip = rng.bernoulli(opts.p_flip);
  const bool gray = rng.bernoulli(opts.p_gray);
  RgbImage out = flip ? flip_vertical(img) : img;
  return gray ? to_grayscale(out) : out;
}

TrainResult train_linear(const MixedDataset& ds, const TrainParams& params) {
  ds.validate();
  const std::size_t nt = ds.trusted.size();
  const std::size_t na = ds.automatic.size();
  if (nt + na == 0) throw Error(ErrorCode::InvalidArgument, "train_linear: empty dataset");
  if (params.epochs < 1 || !(params.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "train_linear: epochs and learning rate must be positive");
  }
  const auto f = static_cast<Eigen::Index>(ds.feature_names.size());
  const auto t = static_cast<Eigen::Index>(ds.targets.size());

  Eigen::MatrixXd all_x(static_cast<Eigen::Index>(nt + na), f);
  Eigen::MatrixXd all_y(static_cast<Eigen::Index>(nt + na), t);
  if (nt) {
    all_x.topRows(static_cast<Eigen::Index>(nt)) = ds.trusted.features;
    all_y.topRows(static_cast<Eigen::Index>(nt)) = ds.trusted.targets;
  }
  if (na) {
    all_x.bottomRows(static_cast<Eigen::Index>(na)) = ds.automatic.features;
    all_y.bottomRows(static_cast<Eigen::Index>(na)) = ds.automatic.targets;
  }
  Eigen::VectorXd x_mean, x_scale, y_mean, y_scale;
  compute_standardization(all_x, true, true, x_mean, x_scale);
  compute_standardization(all_y, true, true, y_mean, y_scale);

  auto standardize_x = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return (x.rowwise() - x_mean.transpose()) * x_scale.cwiseInverse().asDiagonal();
  };
  const Eigen::MatrixXd zt = nt ? standardize_x(ds.trusted.features) : Eigen::MatrixXd(0, f);
  const Eigen::MatrixXd za = na ? standardize_x(ds.automatic.features) : Eigen::MatrixXd(0, f);
  auto standardize_y = [&](const Eigen::RowVectorXd& y) -> Eigen::RowVectorXd {
    return (y - y_mean.transpose()).cwiseQuotient(y_scale.transpose());
  };

  Rng rng(derive_seed(params.seed, 0x747261696eULL));
  Rng perturb_rng(derive_seed(params.seed, 0x70657274ULL));
  const BatchPlan plan = build_batches(nt, na, params.batch, params.epochs, rng);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(t, f);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(t);
  std::vector<EpochLog> log;
  Eigen::MatrixXd auto_targets(static_cast<Eigen::Index>(na), t);

  for (int e = 0; e < params.epochs; ++e) {
    double lr = params.learning_rate;
    for (int milestone : params.lr_milestones) {
      if (e >= milestone) lr *= params.lr_decay;
    }
    // Fresh perturbation of every automatic label once per epoch.
    for (std::size_t i = 0; i < na; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      Eigen::RowVectorXd y = ds.automatic.targets.row(row);
      if (params.perturb) {
        const auto p = perturb_label({y.data(), static_cast<std::size_t>(t)}, ds.per_target_sigma, ds.targets,
                                     perturb_rng);
        y = Eigen::Map<const Eigen::RowVectorXd>(p.data(), t);
      }
      auto_targets.row(row) = standardize_y(y);
    }

    EpochLog entry;
    entry.epoch = e;
    entry.learning_rate = lr;
    entry.min_trusted_per_batch = std::numeric_limits<std::size_t>::max();
    double loss_sum = 0.0;
    std::size_t loss_rows = 0;
    for (const Batch& batch : plan.epochs[static_cast<std::size_t>(e)]) {
      const auto rows = static_cast<Eigen::Index>(batch.trusted.size() + batch.automatic.size());
      Eigen::MatrixXd xb(rows, f), yb(rows, t);
      Eigen::Index r = 0;
      for (auto i : batch.trusted) {
        xb.row(r) = zt.row(static_cast<Eigen::Index>(i));
        yb.row(r++) = standardize_y(ds.trusted.targets.row(static_cast<Eigen::Index>(i)));
      }
      for (auto i : batch.automatic) {
        xb.row(r) = za.row(static_cast<Eigen::Index>(i));
        yb.row(r++) = auto_targets.row(static_cast<Eigen::Index>(i));
      }
      const Eigen::MatrixXd resid = ((xb * w.transpose()).rowwise() + b.transpose()) - yb;
      loss_sum += resid.squaredNorm() / static_cast<double>(t);
      loss_rows += static_cast<std::size_t>(rows);
      const double scale = 2.0 / static_cast<double>(rows);
      w.noalias() -= lr * scale * resid.transpose() * xb;
      b -= lr * scale * resid.colwise().sum().transpose();

      entry.min_trusted_per_batch = std::min(entry.min_trusted_per_batch, batch.trusted.size());
      entry.max_trusted_per_batch = std::max(entry.max_trusted_per_batch, batch.trusted.size());
      ++entry.batches;
    }
    entry.mean_loss = loss_rows ? loss_sum / static_cast<double>(loss_rows) : 0.0;
    if (!std::isfinite(entry.mean_loss) || !w.allFinite()) {
      throw Error(ErrorCode::Divergence, "train_linear diverged at epoch " + std::to_string(e) +
                                             " (lr " + std::to_string(lr) + ", loss " +
                                             std::to_string(entry.mean_loss) + ")");
    }
    if (entry.batches == 0) entry.min_trusted_per_batch = 0;
    log.push_back(entry);
  }

  TrainResult out;
  LinearModel& m = out.model;
  m.kind = "linear_gd";
  m.feature_mode = ds.feature_mode;
  m.feature_names = ds.feature_names;
  m.targets = ds.targets;
  m.weights = y_scale.asDiagonal() * w;
  m.intercepts = y_mean + y_scale.cwiseProduct(b);
  m.feature_mean = x_mean;
  m.feature_scale = x_scale;
  m.options.lambda = 0.0;
  out.log = std::move(log);
  return out;
}

std::string format_epoch_log(const std::vector<EpochLog>& log, const Provenance& provenance) {
  std::ostringstream out;
  for (const auto& [k, v] : provenance) out << "# " << k << '=' << v << '\n';
  out << "epoch,learning_rate,mean_loss,batches,min_trusted_per_batch,max_trusted_per_batch\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_number(e.learning_rate) << ',' << format_number(e.mean_loss) << ','
        << e.batches << ',' << e.min_trusted_per_batch << ',' << e.max_trusted_per_batch << '\n';
  }
  return out.str();
}

TrainParams train_params_from_json(const nlohmann::json& j, TrainParams base) {
  try {
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<int>();
    if (j.contains("learning_rate")) base.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("lr_milestones")) base.lr_milestones = j.at("lr_milestones").get<std::vector<int>>();
    if (j.contains("lr_decay")) base.lr_decay = j.at("lr_decay").get<double>();
    if (j.contains("batch_size")) base.batch.batch_size = j.at("batch_size").get<int>();
    if (j.contains("trusted_fraction")) base.batch.trusted_fraction = j.at("trusted_fraction").get<double>();
    if (j.contains("allow_pure_automatic")) base.batch.allow_pure_automatic = j.at("allow_pure_automatic").get<bool>();
    if (j.contains("perturb")) base.perturb = j.at("perturb").get<bool>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("training config: ") + e.what());
  }
  return base;
}

}  // namespace herbage
