#include "herbage/refseg.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "herbage/dataio.hpp"
#include "herbage/synthgen.hpp"

namespace herbage {

void PrototypeModel::validate() const {
  if (classes.size() < 2 || prototypes.size() != classes.size()) {
    throw Error(ErrorCode::InvalidConfig, "prototype model: need one prototype per class (>= 2 classes)");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidConfig, "prototype model: temperature must be > 0");
  }
}

PrototypeFitter::PrototypeFitter(std::vector<std::string> classes)
    : classes_(std::move(classes)), sums_(classes_.size(), {0.0, 0.0, 0.0}), counts_(classes_.size(), 0) {}

void PrototypeFitter::add(const RgbImage& rgb, const LabelMap& labels) {
  if (!rgb.same_shape(labels) || rgb.channels != 3) {
    throw Error(ErrorCode::ShapeMismatch, "prototype fit: rgb and labels differ in shape");
  }
  for (std::size_t p = 0; p < labels.data.size(); ++p) {
    const std::size_t c = labels.data[p];
    if (c >= classes_.size()) {
      throw Error(ErrorCode::UnknownSpecies, "prototype fit: label " + std::to_string(c) + " out of range");
    }
    for (int ch = 0; ch < 3; ++ch) sums_[c][ch] += rgb.data[p * 3 + ch];
    ++counts_[c];
  }
}

void PrototypeFitter::add(const SyntheticScene& scene) { add(scene.rgb, scene.labels); }

PrototypeModel PrototypeFitter::finish(double temperature) const {
  PrototypeModel m;
  m.classes = classes_;
  m.temperature = temperature;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    if (counts_[c] == 0) throw Error(ErrorCode::MissingSpecies, "class '" + classes_[c] + "' has no pixels");
    const double n = static_cast<double>(counts_[c]);
    m.prototypes.push_back({sums_[c][0] / n, sums_[c][1] / n, sums_[c][2] / n});
  }
  m.validate();
  return m;
}

ScoreMap segment(const RgbImage& img, const PrototypeModel& m) {
  m.validate();
  if (img.channels != 3) throw Error(ErrorCode::InvalidArgument, "segment: expected an RGB image");
  const int classes = static_cast<int>(m.classes.size());
  ScoreMap out(img.width, img.height, classes);
  std::vector<double> logits(static_cast<std::size_t>(classes));
  const std::size_t pixels = img.pixel_count();
  for (std::size_t p = 0; p < pixels; ++p) {
    double best = -INFINITY;
    for (int c = 0; c < classes; ++c) {
      double d2 = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        const double diff = img.data[p * 3 + ch] - m.prototypes[c][ch];
        d2 += diff * diff;
      }
      logits[c] = -std::sqrt(d2) / m.temperature;
      best = std::max(best, logits[c]);
    }
    double z = 0.0;
    for (int c = 0; c < classes; ++c) {
      logits[c] = std::exp(logits[c] - best);
      z += logits[c];
    }
    for (int c = 0; c < classes; ++c) out.at(c, p) = logits[c] / z;
  }
  return out;
}

std::string prototype_model_to_json(const PrototypeModel& m) {
  nlohmann::json j;
  j["classes"] = m.classes;
  j["prototypes"] = m.prototypes;
  j["temperature"] = m.temperature;
  return j.dump(2) + "\n";
}

PrototypeModel prototype_model_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PrototypeModel m;
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.prototypes = j.at("prototypes").get<std::vector<std::array<double, 3>>>();
    m.temperature = j.at("temperature").get<double>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("prototype model: ") + e.what());
  }
}

void save_prototype_model(const std::filesystem::path& path, const PrototypeModel& m) {
  write_text_file(path, prototype_model_to_json(m));
}

PrototypeModel load_prototype_model(const std::filesystem::path& path) {
  return prototype_model_from_json(read_text_file(path));
}

}  // namespace herbage
