#include <cmath>

#include "doctest.h"
#include "herbage/error.hpp"
#include "herbage/refseg.hpp"
#include "herbage/segfeat.hpp"
#include "herbage/synthgen.hpp"
#include "support.hpp"

using namespace herbage;

namespace {

PrototypeModel model3(double temperature = 25.0) {
  PrototypeModel m;
  m.classes = {"soil", "grass", "clover"};
  m.prototypes = {{{100, 80, 60}}, {{0, 255, 0}}, {{200, 200, 200}}};
  m.temperature = temperature;
  return m;
}

RgbImage pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img(1, 1, 3);
  img.data = {r, g, b};
  return img;
}

}  // namespace

TEST_CASE("prototype fitting") {
  SUBCASE("constant class color becomes the prototype") {
    auto scene = SyntheticScene(testing::solid_background("b", 6, 6, 10, 10, 10).rgb);
    paste(scene, testing::solid_sample("g", 1, 2, 2, 0, 255, 0), 3, 3);
    PrototypeFitter f({"soil", "grass"});
    f.add(scene);
    const auto m = f.finish();
    CHECK(m.prototypes[1] == std::array<double, 3>{0, 255, 0});
    CHECK(m.prototypes[0] == std::array<double, 3>{10, 10, 10});
  }
  SUBCASE("mean of two pixels") {
    RgbImage img(2, 1, 3);
    img.data = {0, 0, 0, 2, 2, 2};
    LabelMap labels(2, 1, 1, 1);
    PrototypeFitter f({"soil", "grass"});
    f.add(img, labels);
    RgbImage soil = pixel(9, 9, 9);
    f.add(soil, LabelMap(1, 1, 1, 0));
    CHECK(f.finish().prototypes[1] == std::array<double, 3>{1, 1, 1});
  }
  SUBCASE("absent class is named") {
    PrototypeFitter f({"soil", "grass", "clover"});
    f.add(pixel(1, 2, 3), LabelMap(1, 1, 1, 0));
    f.add(pixel(1, 2, 3), LabelMap(1, 1, 1, 1));
    try {
      f.finish();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingSpecies);
      CHECK(std::string(e.what()).find("clover") != std::string::npos);
    }
  }
  SUBCASE("labels outside the class list are rejected") {
    PrototypeFitter f({"soil", "grass"});
    CHECK_THROWS_AS(f.add(pixel(1, 2, 3), LabelMap(1, 1, 1, 5)), Error);
    CHECK_THROWS_AS(f.add(pixel(1, 2, 3), LabelMap(2, 1, 1, 0)), Error);
  }
}

TEST_CASE("segment scores") {
  const auto m = model3();
  SUBCASE("pixel on a prototype wins") {
    const auto s = segment(pixel(0, 255, 0), m);
    CHECK(hard_counts(s)[1] == 1);
    CHECK(s.at(1, 0) > 0.99);
  }
  SUBCASE("equidistant pixel gives uniform scores") {
    PrototypeModel eq;
    eq.classes = {"a", "b", "c"};
    eq.prototypes = {{{10, 0, 0}}, {{0, 10, 0}}, {{0, 0, 10}}};
    const auto s = segment(pixel(0, 0, 0), eq);
    for (int c = 0; c < 3; ++c) CHECK(s.at(c, 0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("huge temperature flattens the scores") {
    const auto s = segment(pixel(0, 255, 0), model3(1e12));
    for (int c = 0; c < 3; ++c) CHECK(s.at(c, 0) == doctest::Approx(1.0 / 3).epsilon(1e-6));
  }
  SUBCASE("tiny temperature does not overflow") {
    const auto s = segment(pixel(3, 250, 1), model3(1e-6));
    CHECK(s.at(1, 0) == 1.0);
    CHECK(std::isfinite(s.at(0, 0)));
  }
}

TEST_CASE("segment properties on random images") {
  Rng rng(3);
  auto m = model3();
  for (int t = 0; t < 20; ++t) {
    RgbImage img(9, 7, 3);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    const auto s = segment(img, m);
    for (std::size_t p = 0; p < s.pixel_count(); ++p) {
      double sum = 0.0;
      for (int c = 0; c < 3; ++c) sum += s.at(c, p);
      REQUIRE(std::abs(sum - 1.0) <= 1e-6);
    }
    // Class permutation (2, 0, 1) permutes the planes the same way.
    PrototypeModel perm = m;
    perm.classes = {m.classes[2], m.classes[0], m.classes[1]};
    perm.prototypes = {m.prototypes[2], m.prototypes[0], m.prototypes[1]};
    const auto sp = segment(img, perm);
    for (std::size_t p = 0; p < s.pixel_count(); ++p) {
      REQUIRE(sp.at(0, p) == doctest::Approx(s.at(2, p)).epsilon(1e-12));
      REQUIRE(sp.at(1, p) == doctest::Approx(s.at(0, p)).epsilon(1e-12));
      REQUIRE(sp.at(2, p) == doctest::Approx(s.at(1, p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("prototype model persistence and validation") {
  const auto m = model3(12.5);
  const auto back = prototype_model_from_json(prototype_model_to_json(m));
  CHECK(back.classes == m.classes);
  CHECK(back.prototypes == m.prototypes);
  CHECK(back.temperature == 12.5);
  testing::TempDir dir("proto");
  save_prototype_model(dir / "p.json", m);
  CHECK(load_prototype_model(dir / "p.json").prototypes == m.prototypes);
  CHECK_THROWS_AS(prototype_model_from_json("{"), Error);
  auto bad = m;
  bad.temperature = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  bad.prototypes.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
}
