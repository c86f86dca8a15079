#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

Run run(const testing::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + HERBAGE_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::size_t count_ext(const fs::path& dir, const std::string& suffix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().ends_with(suffix)) ++n;
  }
  return n;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

}  // namespace

TEST_CASE("generate") {
  testing::TempDir dir("cli_gen");
  const auto d = dir.path().string();
  REQUIRE(run(dir, "generate --out '" + d + "/a' --n 20 --size 256 --seed 5 --jobs 2").code == 0);
  CHECK(count_ext(dir / "a", ".jpg") == 20);
  CHECK(count_ext(dir / "a", "_labels.png") == 20);
  CHECK(count_ext(dir / "a", ".hht") == 20);
  const json manifest = json::parse(slurp(dir / "a/dataset.json"));
  CHECK(manifest.at("images").size() == 20);
  CHECK(manifest.at("provenance").contains("config_hash"));
  CHECK(manifest.at("provenance").at("seed") == "5");

  REQUIRE(run(dir, "generate --out '" + d + "/b' --n 20 --size 256 --seed 5 --jobs 1").code == 0);
  for (const auto& id : manifest.at("images")) {
    const std::string s = id.get<std::string>();
    CHECK(slurp(dir / ("a/" + s + "_labels.png")) == slurp(dir / ("b/" + s + "_labels.png")));
    CHECK(slurp(dir / ("a/" + s + "_height.hht")) == slurp(dir / ("b/" + s + "_height.hht")));
  }

  const auto empty = run(dir, "generate --out '" + d + "/c' --n 0 --size 64");
  CHECK(empty.code == 0);
  CHECK(empty.err.find("warning") != std::string::npos);
  CHECK(fs::exists(dir / "c/dataset.json"));
  CHECK(count_ext(dir / "c", ".jpg") == 0);
}

TEST_CASE("config precedence and errors") {
  testing::TempDir dir("cli_cfg");
  const auto d = dir.path().string();
  write(dir / "cfg.json", R"({"generate": {"n_images": 3, "canvas_size": 48, "paste_count_range": [4, 8]}})");
  REQUIRE(run(dir, "generate --config '" + d + "/cfg.json' --out '" + d + "/x'").code == 0);
  CHECK(count_ext(dir / "x", ".jpg") == 3);
  REQUIRE(run(dir, "generate --config '" + d + "/cfg.json' --n 2 --out '" + d + "/y'").code == 0);
  CHECK(count_ext(dir / "y", ".jpg") == 2);
  const json m = json::parse(slurp(dir / "y/dataset.json"));
  CHECK(m.at("generator").at("canvas_size") == json({48, 48}));
  CHECK(m.at("generator").at("paste_count_range") == json({4, 8}));

  write(dir / "bad.json", R"({"generate": {"paste_count": [4, 8]}})");
  const auto bad = run(dir, "generate --config '" + d + "/bad.json' --out '" + d + "/z'");
  CHECK(bad.code == 2);
  const json err = json::parse(bad.err);
  CHECK(err.at("error").at("stage") == "generate");
  CHECK(err.at("error").at("message").get<std::string>().find("paste_count") != std::string::npos);

  const auto missing = run(dir, "fit --features '" + d + "/none.csv' --labels '" + d + "/none.csv' --out '" + d + "/m.json'");
  CHECK(missing.code == 3);
  CHECK(json::parse(missing.err).at("error").contains("code"));

  CHECK(run(dir, "generate --out '" + d + "/w' --size -4").code == 2);
  CHECK(run(dir, "no-such-stage").code != 0);
}

TEST_CASE("pipeline stages") {
  testing::TempDir dir("cli_pipe");
  const auto d = dir.path().string();
  write(dir / "cfg.json", R"({"generate": {"n_images": 24, "canvas_size": 96, "paste_count_range": [10, 20]}, "seed": 3})");
  const std::string cfg = " --config '" + d + "/cfg.json'";
  REQUIRE(run(dir, "generate --out '" + d + "/data'" + cfg).code == 0);
  REQUIRE(run(dir, "fit-prototypes --data '" + d + "/data' --out '" + d + "/proto.json'").code == 0);
  REQUIRE(run(dir, "segment --data '" + d + "/data' --prototypes '" + d + "/proto.json' --out '" + d + "/scores'").code == 0);
  CHECK(count_ext(dir / "scores", ".smp") == 24);

  REQUIRE(run(dir, "features --data '" + d + "/data' --scores '" + d + "/scores' --out '" + d + "/feats.csv'").code == 0);
  const auto feats = data_lines(slurp(dir / "feats.csv"));
  REQUIRE(feats.size() == 25);
  // image_id, mode, then 2C+1 = 9 features.
  CHECK(std::count(feats[1].begin(), feats[1].end(), ',') == 10);
  CHECK(slurp(dir / "feats.csv").find("# config_hash=") == 0);

  REQUIRE(run(dir, "plant-labels --data '" + d + "/data' --out '" + d + "/trusted.csv' --trusted 12 --rest-out '" + d +
                       "/rest.csv' --noise 0.02" + cfg)
              .code == 0);
  CHECK(data_lines(slurp(dir / "trusted.csv")).size() == 13);
  CHECK(data_lines(slurp(dir / "rest.csv")).size() == 13);

  REQUIRE(run(dir, "fit --features '" + d + "/feats.csv' --labels '" + d + "/trusted.csv' --lambda 1 --out '" + d +
                       "/ridge.json'")
              .code == 0);
  const json model = json::parse(slurp(dir / "ridge.json"));
  CHECK(model.at("lambda") == 1.0);
  CHECK(model.at("feature_mode") == "HL+SL+H");
  CHECK(model.at("provenance").contains("config_hash"));

  REQUIRE(run(dir, "autolabel --model '" + d + "/ridge.json' --features '" + d + "/feats.csv' --exclude '" + d +
                       "/trusted.csv' --out '" + d + "/auto.csv'")
              .code == 0);
  const auto auto_text = slurp(dir / "auto.csv");
  CHECK(data_lines(auto_text).size() == 13);
  CHECK(auto_text.find("model_hash=") != std::string::npos);
  CHECK(auto_text.find(",automatic") != std::string::npos);

  REQUIRE(run(dir, "train --features '" + d + "/feats.csv' --trusted '" + d + "/trusted.csv' --automatic '" + d +
                       "/auto.csv' --epochs 5 --out '" + d + "/gd.json' --log '" + d + "/log.csv'")
              .code == 0);
  const auto log = data_lines(slurp(dir / "log.csv"));
  REQUIRE(log.size() == 6);
  CHECK(log[0] == "epoch,learning_rate,mean_loss,batches,min_trusted_per_batch,max_trusted_per_batch");
  for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i].ends_with(",3,3"));
  CHECK(json::parse(slurp(dir / "gd.json")).at("kind") == "linear_gd");

  REQUIRE(run(dir, "predict --model '" + d + "/gd.json' --features '" + d + "/feats.csv' --out '" + d + "/pred.csv'").code == 0);
  const auto ev = run(dir, "eval --pred '" + d + "/auto.csv' --truth '" + d + "/rest.csv' --json '" + d + "/rep.json'");
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("HRMSE") != std::string::npos);
  CHECK(ev.out.find("Avg.") != std::string::npos);
  const json rep = json::parse(slurp(dir / "rep.json"));
  CHECK(rep.at("n") == 12);

  const auto mismatch = run(dir, "eval --pred '" + d + "/auto.csv' --truth '" + d + "/trusted.csv'");
  CHECK(mismatch.code == 4);
  CHECK(json::parse(mismatch.err).at("error").at("code") == "id_mismatch");
}
