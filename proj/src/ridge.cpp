#include "herbage/ridge.hpp"

#include <algorithm>
#include <cmath>

#include "herbage/dataio.hpp"

namespace herbage {

using nlohmann::json;

Eigen::MatrixXd LinearModel::raw_weights() const {
  return weights * feature_scale.cwiseInverse().asDiagonal();
}

Eigen::VectorXd LinearModel::raw_intercepts() const {
  return intercepts - raw_weights() * feature_mean;
}

void compute_standardization(const Eigen::MatrixXd& x, bool center, bool scale, Eigen::VectorXd& mean,
                             Eigen::VectorXd& scale_out) {
  const auto f = x.cols();
  const double n = static_cast<double>(x.rows());
  mean = center ? Eigen::VectorXd(x.colwise().mean().transpose()) : Eigen::VectorXd::Zero(f);
  scale_out = Eigen::VectorXd::Ones(f);
  if (!scale) return;
  for (Eigen::Index j = 0; j < f; ++j) {
    const double s = std::sqrt((x.col(j).array() - mean(j)).square().sum() / n);
    // Constant columns keep unit scale; they carry no signal either way.
    scale_out(j) = s > 1e-12 ? s : 1.0;
  }
}

RidgeModel fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, const TargetLayout& layout,
                     const RidgeOptions& opts) {
  if (features.rows() < 1) throw Error(ErrorCode::InvalidArgument, "ridge fit: need at least one row");
  if (features.rows() != targets.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "ridge fit: feature and target row counts differ");
  }
  if (static_cast<std::size_t>(targets.cols()) != layout.size()) {
    throw Error(ErrorCode::ShapeMismatch, "ridge fit: target columns do not match the target layout");
  }
  if (!(opts.lambda >= 0.0) || !std::isfinite(opts.lambda)) {
    throw Error(ErrorCode::InvalidArgument, "ridge fit: lambda must be >= 0");
  }
  if (!features.allFinite() || !targets.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "ridge fit: non-finite input");
  }

  RidgeModel m;
  m.kind = "ridge";
  m.targets = layout;
  m.options = opts;
  compute_standardization(features, opts.fit_intercept, opts.standardize, m.feature_mean, m.feature_scale);

  const Eigen::MatrixXd z =
      (features.rowwise() - m.feature_mean.transpose()) * m.feature_scale.cwiseInverse().asDiagonal();
  Eigen::VectorXd y_mean = Eigen::VectorXd::Zero(targets.cols());
  if (opts.fit_intercept) y_mean = targets.colwise().mean().transpose();
  const Eigen::MatrixXd yc = targets.rowwise() - y_mean.transpose();

  Eigen::MatrixXd w;  // features x targets
  if (opts.lambda > 0.0) {
    Eigen::MatrixXd a = z.transpose() * z;
    a.diagonal().array() += opts.lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "ridge fit: factorization failed");
    w = ldlt.solve(z.transpose() * yc);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(z);
    m.rank_deficient = cod.rank() < z.cols();
    w = cod.solve(yc);
  }
  m.weights = w.transpose();
  m.intercepts = y_mean;
  return m;
}

RidgeModel fit_ridge(const FeatureTable& features, const LabelTable& labels, const RidgeOptions& opts) {
  std::vector<std::string> ids;
  for (const auto& r : labels.rows) ids.push_back(r.image_id);
  RidgeModel m = fit_ridge(feature_matrix(features, ids), target_matrix(labels, ids),
                           TargetLayout::for_species(labels.species), opts);
  m.feature_mode = features.mode;
  m.feature_names = features.column_names();
  return m;
}

Eigen::MatrixXd predict_unclipped(const LinearModel& m, const Eigen::MatrixXd& features) {
  if (static_cast<std::size_t>(features.cols()) != m.feature_count()) {
    throw Error(ErrorCode::ShapeMismatch, "predict: expected " + std::to_string(m.feature_count()) +
                                              " features, got " + std::to_string(features.cols()));
  }
  const Eigen::MatrixXd z =
      (features.rowwise() - m.feature_mean.transpose()) * m.feature_scale.cwiseInverse().asDiagonal();
  return (z * m.weights.transpose()).rowwise() + m.intercepts.transpose();
}

Eigen::MatrixXd predict(const LinearModel& m, const Eigen::MatrixXd& features) {
  Eigen::MatrixXd y = predict_unclipped(m, features);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double pct_sum = 0.0;
    for (Eigen::Index t = 0; t < y.cols(); ++t) {
      y(i, t) = clip_target(y(i, t), m.targets.kinds[static_cast<std::size_t>(t)]);
      if (m.targets.kinds[static_cast<std::size_t>(t)] == TargetKind::Percent) pct_sum += y(i, t);
    }
    if (m.options.renormalize_pct && pct_sum > 0.0) {
      for (Eigen::Index t = 0; t < y.cols(); ++t) {
        if (m.targets.kinds[static_cast<std::size_t>(t)] == TargetKind::Percent) y(i, t) *= 100.0 / pct_sum;
      }
    }
  }
  return y;
}

std::vector<double> predict_row(const LinearModel& m, std::span<const double> features) {
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) x(0, static_cast<Eigen::Index>(j)) = features[j];
  const Eigen::MatrixXd y = predict(m, x);
  return {y.data(), y.data() + y.size()};
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json model_to_json(const LinearModel& m) {
  json kinds = json::array();
  for (auto k : m.targets.kinds) kinds.push_back(k == TargetKind::Mass ? "mass" : "percent");
  return {
      {"kind", m.kind},
      {"feature_mode", std::string(to_string(m.feature_mode))},
      {"feature_names", m.feature_names},
      {"target_names", m.targets.names},
      {"target_kinds", kinds},
      {"weights", matrix_to_json(m.weights)},
      {"intercepts", vector_to_json(m.intercepts)},
      {"feature_mean", vector_to_json(m.feature_mean)},
      {"feature_scale", vector_to_json(m.feature_scale)},
      {"lambda", m.options.lambda},
      {"standardize", m.options.standardize},
      {"fit_intercept", m.options.fit_intercept},
      {"renormalize_pct", m.options.renormalize_pct},
      {"rank_deficient", m.rank_deficient},
      {"provenance", m.provenance},
  };
}

LinearModel model_from_json(const json& j) {
  try {
    LinearModel m;
    m.kind = j.at("kind").get<std::string>();
    m.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.targets.names = j.at("target_names").get<std::vector<std::string>>();
    for (const auto& k : j.at("target_kinds")) {
      m.targets.kinds.push_back(k.get<std::string>() == "mass" ? TargetKind::Mass : TargetKind::Percent);
    }
    const auto& rows = j.at("weights");
    const auto t = static_cast<Eigen::Index>(rows.size());
    const auto f = static_cast<Eigen::Index>(m.feature_names.size());
    m.weights.resize(t, f);
    for (Eigen::Index i = 0; i < t; ++i) {
      const auto r = rows.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(r.size()) != f) throw Error(ErrorCode::Decode, "model: weight row length");
      for (Eigen::Index k = 0; k < f; ++k) m.weights(i, k) = r[static_cast<std::size_t>(k)];
    }
    m.intercepts = vector_from_json(j.at("intercepts"));
    m.feature_mean = vector_from_json(j.at("feature_mean"));
    m.feature_scale = vector_from_json(j.at("feature_scale"));
    m.options.lambda = j.at("lambda").get<double>();
    m.options.standardize = j.at("standardize").get<bool>();
    m.options.fit_intercept = j.at("fit_intercept").get<bool>();
    m.options.renormalize_pct = j.value("renormalize_pct", false);
    m.rank_deficient = j.value("rank_deficient", false);
    if (j.contains("provenance")) m.provenance = j.at("provenance").get<Provenance>();
    if (m.intercepts.size() != t || m.feature_mean.size() != f || m.feature_scale.size() != f ||
        m.targets.kinds.size() != m.targets.names.size() || static_cast<Eigen::Index>(m.targets.size()) != t) {
      throw Error(ErrorCode::Decode, "model: inconsistent dimensions");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("model: ") + e.what());
  }
}

std::string model_hash(const LinearModel& m) {
  json j = model_to_json(m);
  j.erase("provenance");
  return hex64(fnv1a64(j.dump()));
}

void save_model(const std::filesystem::path& path, const LinearModel& m) {
  write_text_file(path, model_to_json(m).dump(2) + "\n");
}

LinearModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(json::parse(read_text_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Decode, path.string() + ": " + e.what());
  }
}

Eigen::MatrixXd feature_matrix(const FeatureTable& t, const std::vector<std::string>& ids) {
  const auto f = static_cast<Eigen::Index>(t.column_names().size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), f);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const FeatureRow* r = t.find(ids[i]);
    if (r == nullptr) throw Error(ErrorCode::IdMismatch, "no features for image '" + ids[i] + "'");
    for (Eigen::Index j = 0; j < f; ++j) x(static_cast<Eigen::Index>(i), j) = r->values[static_cast<std::size_t>(j)];
  }
  return x;
}

Eigen::MatrixXd target_matrix(const LabelTable& t, const std::vector<std::string>& ids) {
  const auto cols = static_cast<Eigen::Index>(t.species.size() + 1);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(ids.size()), cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const LabelRow* r = t.find(ids[i]);
    if (r == nullptr) throw Error(ErrorCode::IdMismatch, "no label for image '" + ids[i] + "'");
    const auto v = to_targets(*r);
    for (Eigen::Index j = 0; j < cols; ++j) y(static_cast<Eigen::Index>(i), j) = v[static_cast<std::size_t>(j)];
  }
  return y;
}

LabelTable autolabel(const LinearModel& m, const FeatureTable& features, const std::vector<std::string>& exclude) {
  if (features.column_names() != m.feature_names) {
    throw Error(ErrorCode::ShapeMismatch, "autolabel: feature columns do not match the model");
  }
  if (m.targets.size() < 1 || m.targets.kinds[0] != TargetKind::Mass) {
    throw Error(ErrorCode::InvalidArgument, "autolabel: model targets must start with total_mass");
  }
  LabelTable out;
  for (std::size_t t = 1; t < m.targets.size(); ++t) {
    const auto& name = m.targets.names[t];
    out.species.push_back(name.size() > 4 && name.ends_with("_pct") ? name.substr(0, name.size() - 4) : name);
  }
  out.provenance = m.provenance;
  out.provenance["model_hash"] = model_hash(m);

  std::vector<std::string> ids;
  for (const auto& r : features.rows) {
    if (std::find(exclude.begin(), exclude.end(), r.image_id) == exclude.end()) ids.push_back(r.image_id);
  }
  if (ids.empty()) return out;
  const Eigen::MatrixXd y = predict(m, feature_matrix(features, ids));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(y.cols()));
    for (Eigen::Index t = 0; t < y.cols(); ++t) row[static_cast<std::size_t>(t)] = y(static_cast<Eigen::Index>(i), t);
    out.rows.push_back(from_targets(ids[i], row, LabelSource::Automatic));
  }
  return out;
}

}  // namespace herbage
