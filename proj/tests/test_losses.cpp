#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "herbage/error.hpp"
#include "herbage/losses.hpp"
#include "support.hpp"

using namespace herbage;

namespace {

ScoreMap one_hot(const LabelMap& labels, int classes) {
  ScoreMap s(labels.width, labels.height, classes, 0.0);
  for (std::size_t p = 0; p < labels.data.size(); ++p) s.at(labels.data[p], p) = 1.0;
  return s;
}

LabelMap random_labels(Rng& rng, int w, int h, int classes) {
  LabelMap l(w, h);
  for (auto& v : l.data) v = static_cast<std::uint8_t>(rng.index(static_cast<std::size_t>(classes)));
  return l;
}

}  // namespace

TEST_CASE("species loss closed forms") {
  Rng rng(1);
  const auto labels = random_labels(rng, 5, 4, 4);
  CHECK(species_loss(one_hot(labels, 4), labels) == 0.0);
  CHECK(species_loss(ScoreMap(5, 4, 4, 0.25), labels) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const auto l5 = random_labels(rng, 3, 3, 5);
  CHECK(std::abs(species_loss(ScoreMap(3, 3, 5, 0.2), l5) - 1.6094379124341003) < 1e-9);
  // Zero score at the target is clamped, not infinite.
  ScoreMap wrong(1, 1, 2);
  wrong.at(1, 0) = 1.0;
  CHECK(species_loss(wrong, LabelMap(1, 1, 1, 0)) == doctest::Approx(-std::log(1e-12)));
  CHECK_THROWS_AS(species_loss(ScoreMap(2, 2, 3, 1.0 / 3), LabelMap(3, 2)), Error);
  CHECK_THROWS_AS(species_loss(ScoreMap(1, 1, 2, 0.5), LabelMap(1, 1, 1, 2)), Error);
}

TEST_CASE("species loss is positive unless the prediction is the one-hot target") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto s = testing::random_score_map(4, 3, 3, rng);
    const auto labels = random_labels(rng, 4, 3, 3);
    CHECK(species_loss(s, labels) > 0.0);
  }
}

TEST_CASE("species loss gradient matches central differences") {
  Rng rng(3);
  for (int t = 0; t < 25; ++t) {
    const int classes = 2 + static_cast<int>(rng.index(4));
    auto s = testing::random_score_map(3, 3, classes, rng);
    const auto labels = random_labels(rng, 3, 3, classes);
    const auto grad = species_loss_gradient(s, labels);
    const double h = 1e-7;
    for (int c = 0; c < classes; ++c) {
      for (std::size_t p = 0; p < s.pixel_count(); ++p) {
        const double orig = s.at(c, p);
        s.at(c, p) = orig + h;
        const double up = species_loss(s, labels);
        s.at(c, p) = orig - h;
        const double down = species_loss(s, labels);
        s.at(c, p) = orig;
        REQUIRE(std::abs((up - down) / (2 * h) - grad.at(c, p)) <= 1e-4);
      }
    }
  }
}

TEST_CASE("height loss") {
  HeightMap a(2, 1), b(2, 1);
  CHECK(height_loss(a, a) == 0.0);
  a.data = {0.8f, 0.1f};
  b.data = {0.3f, 0.6f};
  CHECK(height_loss(a, b) == doctest::Approx(0.5).epsilon(1e-7));
  HeightMap r1(2, 1), r0(2, 1, 1, 0.5f);
  r1.data = {0.8f, 0.1f};
  // residuals {0.3, -0.4}
  CHECK(height_loss(r1, r0) == doctest::Approx(std::sqrt(0.125)).epsilon(1e-6));
  CHECK_THROWS_AS(height_loss(HeightMap(2, 2), HeightMap(2, 3)), Error);

  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    HeightMap p(4, 4), q(4, 4);
    for (auto& v : p.data) v = static_cast<float>(rng.uniform());
    for (auto& v : q.data) v = static_cast<float>(rng.uniform());
    const double l = height_loss(p, q);
    CHECK(l >= 0.0);
    CHECK(l == height_loss(q, p));
    // Scaling every residual by k scales the loss by |k|.
    HeightMap q2 = q;
    for (std::size_t i = 0; i < q.data.size(); ++i) q2.data[i] = p.data[i] + 2.0f * (q.data[i] - p.data[i]);
    CHECK(height_loss(p, q2) >= l);
  }
}

TEST_CASE("total loss is the plain sum and ignores pixel order") {
  Rng rng(5);
  const auto labels = random_labels(rng, 4, 4, 4);
  PixelTargets t{labels, HeightMap(4, 4, 1, 0.2f)};
  CHECK(total_loss(one_hot(labels, 4), HeightMap(4, 4, 1, 0.2f), t) == 0.0);
  const double expected = std::log(4.0) + 0.5;
  CHECK(total_loss(ScoreMap(4, 4, 4, 0.25), HeightMap(4, 4, 1, 0.7f), t) == doctest::Approx(expected).epsilon(1e-7));

  auto s = testing::random_score_map(4, 4, 4, rng);
  HeightMap ph(4, 4);
  for (auto& v : ph.data) v = static_cast<float>(rng.uniform());
  const double base = total_loss(s, ph, t);
  // Reverse pixel order everywhere.
  ScoreMap rs(4, 4, 4);
  PixelTargets rt{LabelMap(4, 4), HeightMap(4, 4, 1, 0.2f)};
  HeightMap rph(4, 4);
  for (std::size_t p = 0; p < 16; ++p) {
    for (int c = 0; c < 4; ++c) rs.at(c, 15 - p) = s.at(c, p);
    rt.classes.data[15 - p] = labels.data[p];
    rph.data[15 - p] = ph.data[p];
  }
  CHECK(total_loss(rs, rph, rt) == doctest::Approx(base).epsilon(1e-14));
}
