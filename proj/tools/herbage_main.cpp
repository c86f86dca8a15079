// herbage: command-line driver for the synthetic herbage pipeline.
//
//   make-assets -> generate -> fit-prototypes -> segment -> features
//   plant-labels -> fit -> autolabel -> train -> predict -> eval

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "herbage/dataio.hpp"
#include "herbage/dataset.hpp"
#include "herbage/metrics.hpp"
#include "herbage/pipeline.hpp"
#include "herbage/planted.hpp"
#include "herbage/procedural_assets.hpp"
#include "herbage/provenance.hpp"
#include "herbage/ridge.hpp"
#include "herbage/robusttrain.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace herbage;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    json j = json::parse(read_text_file(path));
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config root must be an object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "config '" + path + "': " + e.what());
  }
}

json section(const json& cfg, const char* key) {
  return cfg.contains(key) ? cfg.at(key) : json::object();
}

template <class T>
T pick(const CLI::Option* flag, const T& flag_value, const json& cfg, const char* key, T fallback) {
  if (flag && flag->count() > 0) return flag_value;
  if (cfg.contains(key)) {
    try {
      return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("config key '") + key + "': " + e.what());
    }
  }
  return fallback;
}

int resolve_jobs(const CLI::Option* flag, int flag_value, const json& cfg) {
  if (flag->count() > 0) return std::max(1, flag_value);
  if (const char* env = std::getenv("HERBAGE_JOBS"); env && *env) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, std::string("HERBAGE_JOBS is not an integer: ") + env);
    }
  }
  if (cfg.contains("jobs")) return std::max(1, cfg.at("jobs").get<int>());
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> ids_of(const LabelTable& t) {
  std::vector<std::string> ids;
  for (const auto& r : t.rows) ids.push_back(r.image_id);
  return ids;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig: return 2;
    case ErrorCode::Io:
    case ErrorCode::Decode:
    case ErrorCode::BadMagic:
    case ErrorCode::Truncated:
    case ErrorCode::CorruptPayload: return 3;
    case ErrorCode::Divergence: return 5;
    default: return 4;
  }
}

void report_error(const std::string& stage, std::string_view code, const std::string& message) {
  std::cerr << json{{"error", {{"stage", stage}, {"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic herbage biomass pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path;
  int jobs_value = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON pipeline config");
    return sub->add_option("--jobs", jobs_value, "worker threads (falls back to HERBAGE_JOBS)");
  };

  // make-assets
  auto* make_assets = app.add_subcommand("make-assets", "write a procedural asset library");
  std::string assets_out, species_name = "irish";
  std::uint64_t assets_seed = 1;
  int samples_per_species = 4, n_backgrounds = 2, background_size = 256;
  add_common(make_assets);
  make_assets->add_option("--out", assets_out)->required();
  auto* ma_species = make_assets->add_option("--species", species_name, "irish | grassclover");
  auto* ma_seed = make_assets->add_option("--seed", assets_seed);
  auto* ma_samples = make_assets->add_option("--samples-per-species", samples_per_species);
  auto* ma_bgs = make_assets->add_option("--backgrounds", n_backgrounds);
  auto* ma_bgsize = make_assets->add_option("--background-size", background_size);

  // generate
  auto* generate = app.add_subcommand("generate", "render a synthetic dataset");
  std::string gen_out, gen_assets;
  int gen_n = 0, gen_size = 0;
  std::uint64_t gen_seed = 0;
  auto* gen_jobs = add_common(generate);
  generate->add_option("--out", gen_out)->required();
  auto* gen_n_opt = generate->add_option("--n", gen_n, "number of images");
  auto* gen_size_opt = generate->add_option("--size", gen_size, "square canvas size in pixels");
  auto* gen_seed_opt = generate->add_option("--seed", gen_seed, "master seed");
  auto* gen_assets_opt = generate->add_option("--assets", gen_assets, "asset manifest.json");
  auto* gen_species = generate->add_option("--species", species_name, "preset used without --assets");

  // fit-prototypes
  auto* fit_proto = app.add_subcommand("fit-prototypes", "fit color prototypes from a labeled dataset");
  std::string data_dir, proto_out;
  double temperature = kDefaultTemperature;
  int proto_limit = 0;
  add_common(fit_proto);
  fit_proto->add_option("--data", data_dir)->required();
  fit_proto->add_option("--out", proto_out)->required();
  auto* temp_opt = fit_proto->add_option("--temperature", temperature);
  fit_proto->add_option("--limit", proto_limit, "use only the first N images");

  // segment
  auto* segment_cmd = app.add_subcommand("segment", "write score maps for every dataset image");
  std::string proto_path, scores_out;
  auto* seg_jobs = add_common(segment_cmd);
  segment_cmd->add_option("--data", data_dir)->required();
  segment_cmd->add_option("--prototypes", proto_path)->required();
  segment_cmd->add_option("--out", scores_out)->required();

  // features
  auto* features_cmd = app.add_subcommand("features", "extract per-image feature vectors");
  std::string scores_dir, features_out, mode_name = "HL+SL+H";
  auto* feat_jobs = add_common(features_cmd);
  features_cmd->add_option("--data", data_dir)->required();
  features_cmd->add_option("--scores", scores_dir, "directory of .smp score maps");
  features_cmd->add_option("--prototypes", proto_path, "segment on the fly instead");
  auto* mode_opt = features_cmd->add_option("--mode", mode_name, "HL | SL | HL+SL | HL+SL+H");
  features_cmd->add_option("--out", features_out)->required();

  // plant-labels
  auto* plant_cmd = app.add_subcommand("plant-labels", "labels from a known linear map of the ground truth");
  std::string labels_out, rest_out;
  double noise_fraction = 0.02;
  int n_trusted = -1;
  std::uint64_t plant_seed = 0;
  auto* plant_jobs = add_common(plant_cmd);
  plant_cmd->add_option("--data", data_dir)->required();
  plant_cmd->add_option("--out", labels_out)->required();
  plant_cmd->add_option("--trusted", n_trusted, "random subset size written to --out");
  plant_cmd->add_option("--rest-out", rest_out, "remaining rows");
  plant_cmd->add_option("--noise", noise_fraction, "noise sigma as a fraction of each target range");
  auto* plant_seed_opt = plant_cmd->add_option("--seed", plant_seed);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "closed-form ridge regression");
  std::string features_path, labels_path, model_out, val_labels;
  double lambda = 1.0;
  bool no_standardize = false, no_intercept = false, renormalize = false;
  add_common(fit_cmd);
  fit_cmd->add_option("--features", features_path)->required();
  fit_cmd->add_option("--labels", labels_path)->required();
  fit_cmd->add_option("--out", model_out)->required();
  auto* lambda_opt = fit_cmd->add_option("--lambda", lambda);
  auto* fit_mode_opt = fit_cmd->add_option("--mode", mode_name, "feature subset to fit on");
  fit_cmd->add_flag("--no-standardize", no_standardize);
  fit_cmd->add_flag("--no-intercept", no_intercept);
  fit_cmd->add_flag("--renormalize-pct", renormalize);
  fit_cmd->add_option("--val-labels", val_labels, "print a per-feature-mode validation table");

  // autolabel / predict
  auto* autolabel_cmd = app.add_subcommand("autolabel", "label unlabeled images with a fitted model");
  std::string model_path, exclude_labels, pred_out;
  add_common(autolabel_cmd);
  autolabel_cmd->add_option("--model", model_path)->required();
  autolabel_cmd->add_option("--features", features_path)->required();
  autolabel_cmd->add_option("--exclude", exclude_labels, "label table whose ids are skipped");
  autolabel_cmd->add_option("--out", pred_out)->required();

  auto* predict_cmd = app.add_subcommand("predict", "predict labels for every feature row");
  add_common(predict_cmd);
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--features", features_path)->required();
  predict_cmd->add_option("--out", pred_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "mini-batch training on trusted + automatic labels");
  std::string trusted_path, automatic_path, log_out, sigma_text;
  int epochs = 100, batch_size = 12;
  double lr = 0.03, trusted_fraction = 0.25;
  std::uint64_t train_seed = 0;
  bool no_perturb = false, pure_auto = false;
  add_common(train_cmd);
  train_cmd->add_option("--features", features_path)->required();
  train_cmd->add_option("--trusted", trusted_path)->required();
  train_cmd->add_option("--automatic", automatic_path, "omit for trusted-only training");
  train_cmd->add_option("--out", model_out)->required();
  train_cmd->add_option("--log", log_out, "per-epoch CSV");
  auto* epochs_opt = train_cmd->add_option("--epochs", epochs);
  auto* lr_opt = train_cmd->add_option("--lr", lr);
  auto* bs_opt = train_cmd->add_option("--batch-size", batch_size);
  auto* frac_opt = train_cmd->add_option("--trusted-fraction", trusted_fraction);
  auto* tseed_opt = train_cmd->add_option("--seed", train_seed);
  auto* sigma_opt = train_cmd->add_option("--sigma", sigma_text, "per-target noise levels, comma separated");
  auto* noperturb_opt = train_cmd->add_flag("--no-perturb", no_perturb);
  auto* pure_opt = train_cmd->add_flag("--allow-pure-automatic", pure_auto);
  auto* train_mode_opt = train_cmd->add_option("--mode", mode_name, "feature subset to train on");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "compare predictions with ground truth");
  std::string eval_pred, eval_truth, eval_json;
  add_common(eval_cmd);
  eval_cmd->add_option("--pred", eval_pred)->required();
  eval_cmd->add_option("--truth", eval_truth)->required();
  eval_cmd->add_option("--json", eval_json, "also write the report as JSON");

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    const json cfg = load_config(config_path);

    if (*make_assets) {
      const std::string sp = pick(ma_species, species_name, cfg, "species", std::string("irish"));
      const json a = section(cfg, "assets");
      ProceduralOptions opts;
      opts.seed = pick(ma_seed, assets_seed, a, "seed", opts.seed);
      opts.samples_per_species = pick(ma_samples, samples_per_species, a, "samples_per_species", opts.samples_per_species);
      opts.backgrounds = pick(ma_bgs, n_backgrounds, a, "backgrounds", opts.backgrounds);
      opts.background_size = pick(ma_bgsize, background_size, a, "background_size", opts.background_size);
      const auto path = write_library(make_procedural_library(SpeciesSet::preset(sp), opts), assets_out);
      std::cout << path.string() << '\n';
    } else if (*generate) {
      const std::string sp = pick(gen_species, species_name, cfg, "species", std::string("irish"));
      const SpeciesSet species = SpeciesSet::preset(sp);
      GenConfig gc = gen_config_from_json(section(cfg, "generate"));
      if (gen_n_opt->count()) gc.n_images = gen_n;
      if (gen_size_opt->count()) gc.canvas_width = gc.canvas_height = gen_size;
      if (gen_seed_opt->count()) gc.master_seed = gen_seed;
      const std::string assets = pick(gen_assets_opt, gen_assets, cfg, "assets_manifest", std::string());
      const AssetLibrary lib = assets.empty() ? make_procedural_library(species, ProceduralOptions{})
                                              : load_library(assets, species);
      const json effective{{"species", sp}, {"assets_manifest", assets}, {"generate", gen_config_to_json(gc)}};
      const Provenance prov = make_provenance(effective.dump(), gc.master_seed);
      if (gc.n_images == 0) warn("n = 0: writing the manifest only");
      const DatasetManifest m = generate_dataset(lib, gc, gen_out, prov, resolve_jobs(gen_jobs, jobs_value, cfg));
      std::cout << m.image_ids.size() << " images, height clip value " << m.normalizer.clip_value << '\n';
    } else if (*fit_proto) {
      const DatasetManifest m = read_dataset_manifest(fs::path(data_dir) / "dataset.json");
      const json p = section(cfg, "prototypes");
      const double t = pick(temp_opt, temperature, p, "temperature", kDefaultTemperature);
      std::vector<std::string> ids = m.image_ids;
      if (proto_limit > 0 && static_cast<std::size_t>(proto_limit) < ids.size()) ids.resize(static_cast<std::size_t>(proto_limit));
      if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "dataset has no images");
      save_prototype_model(proto_out, fit_prototypes(data_dir, m, ids, t));
    } else if (*segment_cmd) {
      const DatasetManifest m = read_dataset_manifest(fs::path(data_dir) / "dataset.json");
      segment_dataset(data_dir, m, load_prototype_model(proto_path), scores_out, resolve_jobs(seg_jobs, jobs_value, cfg));
    } else if (*features_cmd) {
      const DatasetManifest m = read_dataset_manifest(fs::path(data_dir) / "dataset.json");
      const FeatureMode mode = parse_feature_mode(pick(mode_opt, mode_name, cfg, "feature_mode", std::string("HL+SL+H")));
      ScoreSource src;
      if (!scores_dir.empty()) src.scores_dir = scores_dir;
      else if (!proto_path.empty()) src.model = load_prototype_model(proto_path);
      FeatureTable t = dataset_features(data_dir, m, src, mode, resolve_jobs(feat_jobs, jobs_value, cfg));
      const json effective{{"data", data_dir}, {"mode", to_string(mode)}, {"scores", scores_dir}, {"prototypes", proto_path},
                           {"dataset_config_hash", m.provenance.count("config_hash") ? m.provenance.at("config_hash") : ""}};
      t.provenance = make_provenance(effective.dump(), m.config.master_seed);
      write_feature_table(features_out, t);
      std::cout << t.rows.size() << " rows x " << t.column_names().size() << " features\n";
    } else if (*plant_cmd) {
      const DatasetManifest m = read_dataset_manifest(fs::path(data_dir) / "dataset.json");
      const std::uint64_t seed = pick(plant_seed_opt, plant_seed, cfg, "seed", std::uint64_t{0});
      Rng rng(derive_seed(seed, 0x706c616e74ULL));
      const std::vector<std::string> pasteable(m.species.begin() + 1, m.species.end());
      PlantedLabels planted = plant_labels(PlantedMap::standard(pasteable),
                                           planted_inputs(data_dir, m, resolve_jobs(plant_jobs, jobs_value, cfg)),
                                           noise_fraction, rng);
      std::vector<std::size_t> order(planted.labels.rows.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      const std::size_t k = n_trusted < 0 ? order.size() : std::min(order.size(), static_cast<std::size_t>(n_trusted));
      if (k < order.size()) shuffle(order, rng);
      const json effective{{"data", data_dir}, {"noise", noise_fraction}, {"trusted", n_trusted}};
      LabelTable chosen{planted.labels.species, {}, make_provenance(effective.dump(), seed)};
      LabelTable rest = chosen;
      std::set<std::size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
      for (std::size_t i = 0; i < order.size(); ++i) {
        (picked.count(i) ? chosen : rest).rows.push_back(planted.labels.rows[i]);
      }
      std::string sigma;
      for (double s : planted.noise_sigma) sigma += (sigma.empty() ? "" : ",") + format_number(s);
      chosen.provenance["noise_sigma"] = rest.provenance["noise_sigma"] = sigma;
      write_label_table(labels_out, chosen);
      if (!rest_out.empty()) write_label_table(rest_out, rest);
      std::cout << chosen.rows.size() << " labeled rows, " << rest.rows.size() << " held back; noise sigma " << sigma << '\n';
    } else if (*fit_cmd) {
      FeatureTable ft = read_feature_table(features_path);
      const LabelTable labels = read_label_table(labels_path);
      const json r = section(cfg, "ridge");
      RidgeOptions opts;
      opts.lambda = pick(lambda_opt, lambda, r, "lambda", opts.lambda);
      opts.standardize = no_standardize ? false : r.value("standardize", true);
      opts.fit_intercept = no_intercept ? false : r.value("fit_intercept", true);
      opts.renormalize_pct = renormalize ? true : r.value("renormalize_pct", false);
      if (fit_mode_opt->count() || cfg.contains("feature_mode")) {
        ft = select_mode(ft, parse_feature_mode(pick(fit_mode_opt, mode_name, cfg, "feature_mode", mode_name)));
      }
      RidgeModel model = fit_ridge(ft, labels, opts);
      const json effective{{"features", features_path}, {"labels", labels_path}, {"lambda", opts.lambda},
                           {"standardize", opts.standardize}, {"fit_intercept", opts.fit_intercept},
                           {"renormalize_pct", opts.renormalize_pct}, {"mode", to_string(ft.mode)}};
      model.provenance = make_provenance(effective.dump(), 0);
      if (model.rank_deficient) warn("design matrix is rank deficient; minimum-norm solution returned");
      save_model(model_out, model);

      if (!val_labels.empty()) {
        const LabelTable val = read_label_table(val_labels);
        const FeatureTable full = read_feature_table(features_path);
        std::cout << "mode        HRMSE   RMSE%avg  HRAE%\n";
        for (FeatureMode mode : {FeatureMode::HL, FeatureMode::SL, FeatureMode::HL_SL, FeatureMode::HL_SL_H}) {
          if (!mode_contains(full.mode, mode)) continue;
          const FeatureTable sub = select_mode(full, mode);
          const RidgeModel mm = fit_ridge(sub, labels, opts);
          const LabelTable pred = autolabel(mm, sub, [&] {
            std::vector<std::string> ex;
            for (const auto& row : sub.rows) {
              if (!val.find(row.image_id)) ex.push_back(row.image_id);
            }
            return ex;
          }());
          const EvalReport rep = evaluate(pred, val);
          char line[128];
          std::snprintf(line, sizeof line, "%-9s %8.2f %9.3f %6.2f\n", std::string(to_string(mode)).c_str(),
                        rep.hrmse_total, rep.rmse_avg, rep.hrae);
          std::cout << line;
        }
      }
    } else if (*autolabel_cmd || *predict_cmd) {
      const LinearModel model = load_model(model_path);
      FeatureTable ft = read_feature_table(features_path);
      if (ft.mode != model.feature_mode && mode_contains(ft.mode, model.feature_mode)) {
        ft = select_mode(ft, model.feature_mode);
      }
      std::vector<std::string> exclude;
      if (*autolabel_cmd && !exclude_labels.empty()) exclude = ids_of(read_label_table(exclude_labels));
      const LabelTable out = autolabel(model, ft, exclude);
      write_label_table(pred_out, out);
      std::cout << out.rows.size() << " rows labeled\n";
    } else if (*train_cmd) {
      FeatureTable ft = read_feature_table(features_path);
      const json t = section(cfg, "train");
      if (train_mode_opt->count() || cfg.contains("feature_mode")) {
        ft = select_mode(ft, parse_feature_mode(pick(train_mode_opt, mode_name, cfg, "feature_mode", mode_name)));
      }
      TrainParams params = train_params_from_json(t);
      if (epochs_opt->count()) params.epochs = epochs;
      if (lr_opt->count()) params.learning_rate = lr;
      if (bs_opt->count()) params.batch.batch_size = batch_size;
      if (frac_opt->count()) params.batch.trusted_fraction = trusted_fraction;
      if (tseed_opt->count()) params.seed = train_seed;
      if (noperturb_opt->count()) params.perturb = false;
      if (pure_opt->count()) params.batch.allow_pure_automatic = true;

      const LabelTable trusted = read_label_table(trusted_path);
      const LabelTable automatic = automatic_path.empty() ? LabelTable{trusted.species, {}, {}}
                                                          : read_label_table(automatic_path);
      std::vector<double> sigma;
      if (sigma_opt->count()) {
        sigma = parse_list(sigma_text);
      } else if (t.contains("sigma")) {
        sigma = t.at("sigma").get<std::vector<double>>();
      } else if (!automatic.rows.empty()) {
        RidgeOptions ro;
        ro.lambda = section(cfg, "ridge").value("lambda", 1.0);
        Rng rng(derive_seed(params.seed, 0x7369676d61ULL));
        sigma = estimate_sigma(ft, trusted, ro, 0.2, rng);
      } else {
        sigma.assign(trusted.species.size() + 1, 0.0);
      }
      const MixedDataset ds = make_mixed_dataset(ft, trusted, automatic, sigma);
      TrainResult result = train_linear(ds, params);

      json effective{{"features", features_path}, {"trusted", trusted_path}, {"automatic", automatic_path},
                     {"epochs", params.epochs}, {"learning_rate", params.learning_rate},
                     {"lr_milestones", params.lr_milestones}, {"lr_decay", params.lr_decay},
                     {"batch_size", params.batch.batch_size}, {"trusted_fraction", params.batch.trusted_fraction},
                     {"perturb", params.perturb}, {"sigma", sigma}};
      result.model.provenance = make_provenance(effective.dump(), params.seed);
      save_model(model_out, result.model);
      if (!log_out.empty()) write_text_file(log_out, format_epoch_log(result.log, result.model.provenance));
      const auto& last = result.log.back();
      std::cout << "epochs " << result.log.size() << ", final loss " << last.mean_loss << ", trusted rows per batch "
                << last.min_trusted_per_batch << "-" << last.max_trusted_per_batch << '\n';
    } else if (*eval_cmd) {
      const EvalReport rep = evaluate(read_label_table(eval_pred), read_label_table(eval_truth));
      std::cout << format_report(rep);
      if (!eval_json.empty()) write_text_file(eval_json, report_to_json(rep).dump(2) + "\n");
    }
  } catch (const Error& e) {
    report_error(stage, to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error(stage, "Internal", e.what());
    return 1;
  }
  return 0;
}
