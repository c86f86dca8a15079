#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "herbage/error.hpp"
#include "herbage/metrics.hpp"
#include "herbage/robusttrain.hpp"
#include "support.hpp"

using namespace herbage;

namespace {

const TargetLayout kIrish = TargetLayout::for_species({"grass", "clover", "weeds"});

struct Planted {
  Eigen::MatrixXd a;      // features x targets
  Eigen::RowVectorXd c;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return (x * a).rowwise() + c; }
};

Planted planted_rule() {
  Planted p;
  p.a.resize(3, 4);
  p.a << 400, 20, -10, -10,  //
      -300, -15, 20, -5,     //
      800, 5, -5, 0;
  p.c.resize(4);
  p.c << 1200, 60, 25, 15;
  return p;
}

LabeledRows make_rows(const std::string& prefix, std::size_t n, const Planted& rule, Rng& rng) {
  LabeledRows r;
  r.features.resize(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    r.ids.push_back(prefix + std::to_string(i));
    for (Eigen::Index j = 0; j < 3; ++j) r.features(static_cast<Eigen::Index>(i), j) = rng.uniform();
  }
  r.targets = rule.apply(r.features);
  return r;
}

MixedDataset planted_dataset(std::size_t nt, std::size_t na, Rng& rng) {
  MixedDataset ds;
  ds.feature_mode = FeatureMode::HL;
  ds.feature_names = {"a", "b", "c"};
  ds.targets = kIrish;
  const auto rule = planted_rule();
  ds.trusted = make_rows("t", nt, rule, rng);
  ds.automatic = make_rows("u", na, rule, rng);
  ds.per_target_sigma.assign(4, 0.0);
  return ds;
}

double heldout_rmse(const LinearModel& m, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto test = make_rows("h", n, planted_rule(), rng);
  const Eigen::MatrixXd pred = predict_unclipped(m, test.features);
  return std::sqrt((pred - test.targets).squaredNorm() / static_cast<double>(pred.size()));
}

}  // namespace

TEST_CASE("batch composition") {
  Rng rng(1);
  CHECK(trusted_per_batch({}) == 3);
  const auto plan = build_batches(52, 594, {}, 3, rng);
  REQUIRE(plan.epochs.size() == 3);
  std::vector<std::size_t> draws;
  for (const auto& epoch : plan.epochs) {
    CHECK(epoch.size() == 66);
    std::vector<int> seen(594, 0);
    for (const auto& b : epoch) {
      CHECK(b.trusted.size() == 3);
      CHECK(b.automatic.size() == 9);
      for (auto i : b.automatic) ++seen[i];
      draws.insert(draws.end(), b.trusted.begin(), b.trusted.end());
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
  }
  // The trusted stream, read across epochs, is a sequence of permutations.
  for (std::size_t start = 0; start + 52 <= draws.size(); start += 52) {
    CHECK(std::set<std::size_t>(draws.begin() + static_cast<std::ptrdiff_t>(start),
                                draws.begin() + static_cast<std::ptrdiff_t>(start + 52))
              .size() == 52);
  }
  // Short final batch: 10 automatic rows with 9 per batch.
  const auto short_plan = build_batches(4, 10, {}, 1, rng);
  REQUIRE(short_plan.epochs[0].size() == 2);
  CHECK(short_plan.epochs[0][1].automatic.size() == 1);
  CHECK(short_plan.epochs[0][1].trusted.size() == 3);
}

TEST_CASE("scheduler configurations") {
  Rng rng(2);
  BatchParams p;
  p.trusted_fraction = 0.0;
  CHECK_THROWS_AS(build_batches(10, 20, p, 1, rng), Error);
  p.allow_pure_automatic = true;
  const auto pure = build_batches(10, 20, p, 1, rng);
  CHECK(pure.epochs[0].size() == 2);
  for (const auto& b : pure.epochs[0]) CHECK(b.trusted.empty());

  CHECK_THROWS_AS(build_batches(0, 20, {}, 1, rng), Error);
  BatchParams all_trusted;
  all_trusted.trusted_fraction = 1.0;
  CHECK_THROWS_AS(build_batches(10, 20, all_trusted, 1, rng), Error);
  BatchParams bad;
  bad.trusted_fraction = 1.5;
  CHECK_THROWS_AS(build_batches(10, 20, bad, 1, rng), Error);

  // Trusted-only: every trusted row once per epoch.
  const auto t_only = build_batches(30, 0, {}, 2, rng);
  for (const auto& epoch : t_only.epochs) {
    CHECK(epoch.size() == 3);
    std::multiset<std::size_t> rows;
    for (const auto& b : epoch) rows.insert(b.trusted.begin(), b.trusted.end());
    CHECK(rows.size() == 30);
    CHECK(std::set<std::size_t>(rows.begin(), rows.end()).size() == 30);
  }
}

TEST_CASE("label perturbation") {
  Rng rng(3);
  const TargetLayout mass = TargetLayout::for_species({});
  const std::vector<double> sigma10{10.0};
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = perturb_label(std::vector<double>{50.0}, sigma10, mass, rng)[0];
    REQUIRE(v >= 30.0);
    REQUIRE(v <= 70.0);
    sum += v;
  }
  CHECK(std::abs(sum / 100000 - 50.0) <= 0.2);

  const std::vector<double> label{1500, 90, 7, 3};
  CHECK(perturb_label(label, std::vector<double>(4, 0.0), kIrish, rng) == label);
  for (int i = 0; i < 1000; ++i) {
    const auto p = perturb_label(std::vector<double>{5, 99, 1, 50}, std::vector<double>{100, 10, 10, 0}, kIrish, rng);
    CHECK(p[0] >= 0.0);
    CHECK(p[1] <= 100.0);
    CHECK(p[2] >= 0.0);
    CHECK(p[3] == 50.0);
  }
  CHECK_THROWS_AS(perturb_label(label, std::vector<double>(3, 0.0), kIrish, rng), Error);
  CHECK_THROWS_AS(perturb_label(label, std::vector<double>(4, NAN), kIrish, rng), Error);
}

TEST_CASE("augmentation") {
  RgbImage px(1, 1, 3);
  px.data = {100, 150, 200};
  CHECK(to_grayscale(px).data == std::vector<std::uint8_t>{141, 141, 141});

  Rng rng(4);
  RgbImage img(5, 4, 3);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  CHECK(flip_vertical(flip_vertical(img)).data == img.data);
  const auto flipped = flip_vertical(img);
  CHECK(std::equal(flipped.data.begin(), flipped.data.begin() + 15, img.data.end() - 15));
  CHECK(augment_image(img, rng, {0.0, 0.0}).data == img.data);
  CHECK(augment_image(img, rng, {1.0, 0.0}).data == flipped.data);

  int flips = 0, grays = 0;
  for (int i = 0; i < 4000; ++i) {
    const auto out = augment_image(img, rng);
    const auto base = out.data == img.data || out.data == flipped.data;
    if (!base) ++grays;
    if (out.data == flipped.data || out.data == flip_vertical(to_grayscale(img)).data) ++flips;
  }
  CHECK(flips / 4000.0 == doctest::Approx(0.5).epsilon(0.1));
  CHECK(grays / 4000.0 == doctest::Approx(0.2).epsilon(0.15));
}

TEST_CASE("mixed dataset construction") {
  FeatureTable ft;
  ft.mode = FeatureMode::HL;
  ft.classes = {"soil", "grass", "clover", "weeds"};
  LabelTable trusted, automatic;
  trusted.species = automatic.species = {"grass", "clover", "weeds"};
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const std::string id = "img" + std::to_string(i);
    std::vector<double> v(4);
    for (auto& e : v) e = rng.uniform();
    ft.rows.push_back({id, v});
    LabelRow r{id, 1000 + 900 * v[1] + rng.normal(0, 20), {60 + 30 * v[1], 20, 20 - 30 * v[1]}, LabelSource::Trusted};
    if (i < 20) {
      trusted.rows.push_back(r);
    } else {
      r.source = LabelSource::Automatic;
      automatic.rows.push_back(r);
    }
  }
  const auto sigma = estimate_sigma(ft, trusted, {}, 0.25, rng);
  REQUIRE(sigma.size() == 4);
  CHECK(sigma[0] > 0.0);
  CHECK(sigma[0] < 200.0);
  const auto ds = make_mixed_dataset(ft, trusted, automatic, sigma);
  CHECK(ds.trusted.size() == 20);
  CHECK(ds.automatic.size() == 20);
  CHECK(ds.trusted.features.cols() == 4);

  auto overlap = automatic;
  overlap.rows.push_back(trusted.rows[0]);
  CHECK_THROWS_AS(make_mixed_dataset(ft, trusted, overlap, sigma), Error);
  CHECK_THROWS_AS(make_mixed_dataset(ft, trusted, automatic, {1, 2, 3, -1}), Error);
  CHECK_THROWS_AS(estimate_sigma(ft, trusted, {}, 1.0, rng), Error);
}

TEST_CASE("linear training") {
  Rng rng(6);
  const auto ds = planted_dataset(52, 594, rng);
  TrainParams p;
  p.perturb = false;
  const auto res = train_linear(ds, p);
  CHECK(heldout_rmse(res.model, 200, 99) < 1e-3);
  CHECK(res.model.kind == "linear_gd");
  REQUIRE(res.log.size() == 100);
  CHECK(res.log[0].learning_rate == 0.03);
  CHECK(res.log[50].learning_rate == 0.015);
  CHECK(res.log[80].learning_rate == 0.0075);
  for (const auto& e : res.log) {
    CHECK(e.batches == 66);
    CHECK(e.min_trusted_per_batch == 3);
    CHECK(e.max_trusted_per_batch == 3);
  }
  const auto csv = format_epoch_log(res.log, {{"seed", "0"}});
  CHECK(csv.find("# seed=0\n") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 102);

  SUBCASE("deterministic") {
    const auto again = train_linear(ds, p);
    CHECK(again.model.weights == res.model.weights);
    CHECK(again.model.intercepts == res.model.intercepts);
  }
  SUBCASE("large label noise degrades the fit") {
    auto noisy = ds;
    noisy.per_target_sigma = {5000, 200, 200, 200};
    TrainParams q;
    const double clean = heldout_rmse(train_linear(ds, q).model, 200, 99);
    const double degraded = heldout_rmse(train_linear(noisy, q).model, 200, 99);
    CHECK(degraded > 10.0 * std::max(clean, 1e-3));
  }
  SUBCASE("trusted only") {
    auto t_only = ds;
    t_only.automatic = {};
    t_only.automatic.features.resize(0, 3);
    t_only.automatic.targets.resize(0, 4);
    const auto r = train_linear(t_only, p);
    CHECK(r.log[0].batches == 5);
    CHECK(heldout_rmse(r.model, 200, 99) < 1.0);
  }
  SUBCASE("divergence is reported") {
    TrainParams wild = p;
    wild.learning_rate = 1e6;
    CHECK_THROWS_AS(train_linear(ds, wild), Error);
    try {
      train_linear(ds, wild);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Divergence);
    }
  }
  SUBCASE("overlapping ids are rejected") {
    auto bad = ds;
    bad.automatic.ids[0] = bad.trusted.ids[0];
    CHECK_THROWS_AS(train_linear(bad, p), Error);
  }
}

TEST_CASE("training config") {
  const auto p = train_params_from_json(nlohmann::json{{"epochs", 7}, {"batch_size", 8}, {"trusted_fraction", 0.5}});
  CHECK(p.epochs == 7);
  CHECK(p.batch.batch_size == 8);
  CHECK(trusted_per_batch(p.batch) == 4);
  CHECK(p.learning_rate == 0.03);
  CHECK_THROWS_AS(train_params_from_json(nlohmann::json{{"epochs", "many"}}), Error);
}
