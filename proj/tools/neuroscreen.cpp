// neuroscreen CLI: generate | train | screen | report | gradcam
//
// Every subcommand is deterministic under a fixed --seed, accepts a JSON
// config file via --config (explicit flags win), and writes a snapshot of the
// effective configuration next to its outputs.

#include <CLI11.hpp>
#include <torch/torch.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neuroscreen/errors.hpp"
#include "neuroscreen/gradcam.hpp"
#include "neuroscreen/heatmap.hpp"
#include "neuroscreen/manifest.hpp"
#include "neuroscreen/model.hpp"
#include "neuroscreen/plate.hpp"
#include "neuroscreen/report.hpp"
#include "neuroscreen/rng.hpp"
#include "neuroscreen/screening.hpp"
#include "neuroscreen/synth.hpp"

using namespace neuroscreen;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

// Fills flag variables from the --config JSON document for options the user
// did not pass explicitly.
class ConfigDoc {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
      in >> doc_;
    } catch (const json::parse_error& e) {
      throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!doc_.is_object()) throw ConfigError("config file must hold a JSON object");
  }

  template <typename T>
  void fill(const CLI::Option* option, const char* key, T& var) const {
    if (option != nullptr && option->count() > 0) return;
    if (!doc_.contains(key)) return;
    try {
      var = doc_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }

 private:
  json doc_ = json::object();
};

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += c;
  }
  return out.empty() ? "compound" : out;
}

std::vector<Channel> parse_channel_list(const std::string& text) {
  std::vector<Channel> channels;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(',', start);
    const std::string token =
        text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!token.empty()) channels.push_back(parse_channel(token));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (channels.empty()) throw ConfigError("no channels given");
  return channels;
}

std::map<std::string, double> parse_protective_list(
    const std::vector<std::string>& entries) {
  std::map<std::string, double> out;
  for (const std::string& entry : entries) {
    const std::size_t eq = entry.rfind('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("--protective expects \"<name>=<p>\", got '" + entry + "'");
    }
    out[entry.substr(0, eq)] = std::stod(entry.substr(eq + 1));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void write_snapshot(const fs::path& out_dir, const json& snapshot) {
  write_text(out_dir / "run_config.json", snapshot.dump(2) + "\n");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) {
    std::cerr << "[neuroscreen] warning: " << w << "\n";
  }
}

json augment_to_json(const AugmentConfig& a) {
  return {{"crop_ratio", a.crop_ratio},
          {"max_rotation_deg", a.max_rotation_deg},
          {"max_shear_deg", a.max_shear_deg},
          {"max_zoom", a.max_zoom},
          {"hflip", a.hflip},
          {"vflip", a.vflip}};
}

AugmentConfig augment_from_json(const json& doc) {
  AugmentConfig a;
  a.crop_ratio = doc.value("crop_ratio", a.crop_ratio);
  a.max_rotation_deg = doc.value("max_rotation_deg", a.max_rotation_deg);
  a.max_shear_deg = doc.value("max_shear_deg", a.max_shear_deg);
  a.max_zoom = doc.value("max_zoom", a.max_zoom);
  a.hflip = doc.value("hflip", a.hflip);
  a.vflip = doc.value("vflip", a.vflip);
  return a;
}

// Batched inference over the Cy5 images of one plate.
std::vector<ImageScore> score_plate(Classifier& model, const Manifest& manifest,
                                    const std::string& plate_id, double crop_ratio) {
  std::vector<const ManifestEntry*> entries;
  for (const ManifestEntry& rec : manifest.records) {
    if (rec.plate_id == plate_id && rec.channel == Channel::kCy5) {
      entries.push_back(&rec);
    }
  }
  std::vector<ImageScore> scores;
  torch::NoGradGuard no_grad;
  model.net()->eval();
  constexpr std::size_t kBatch = 16;
  for (std::size_t begin = 0; begin < entries.size(); begin += kBatch) {
    const std::size_t end = std::min(entries.size(), begin + kBatch);
    std::vector<ImageF32> images;
    for (std::size_t i = begin; i < end; ++i) {
      images.push_back(center_crop_resize(read_png_gray(entries[i]->path), crop_ratio,
                                          model.config().input_size));
    }
    const auto probs = model.forward_probs(model.batch_tensor(images));
    for (std::size_t i = begin; i < end; ++i) {
      scores.push_back({plate_id, entries[i]->well, entries[i]->field_index,
                        probs[static_cast<std::int64_t>(i - begin)][kLabelAbeta]
                            .item<double>()});
    }
  }
  return scores;
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string out;
  int plates = 36;
  int fields = 30;
  std::string channels = "Cy5,DAPI,dsRed,FITC";
  int image_size = 256;
  double effect_size = 1.0;
  std::vector<std::string> protective;
  double dose_k = 3.0;
  std::uint64_t seed = 0;
  std::string catalog_path;
  std::string layout_path;
  int threads = 2;
};

int cmd_generate(const GenerateOptions& opt) {
  SynthConfig config;
  config.effect_size = opt.effect_size;
  config.protective_map = parse_protective_list(opt.protective);
  config.dose_k_um = opt.dose_k;
  config.image_size = opt.image_size;
  config.fields_per_well = opt.fields;
  config.channels = parse_channel_list(opt.channels);
  config.base_seed = opt.seed;
  config.threads = opt.threads;
  config.validate();

  const CompoundCatalog catalog = opt.catalog_path.empty()
                                      ? CompoundCatalog::builtin()
                                      : CompoundCatalog::load(opt.catalog_path);
  if (opt.plates < 1 || opt.plates > static_cast<int>(catalog.names().size())) {
    throw ConfigError("--plates must be in [1," +
                      std::to_string(catalog.names().size()) + "]");
  }

  std::optional<PlateLayout> layout_template;
  if (!opt.layout_path.empty()) layout_template = load_layout(opt.layout_path);

  const fs::path root(opt.out);
  fs::create_directories(root);

  std::vector<PlateImageRecord> combined;
  for (int i = 0; i < opt.plates; ++i) {
    const std::string& compound = catalog.names()[static_cast<std::size_t>(i)];
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "p%02d", i + 1);
    const std::string plate_id = std::string(prefix) + "_" + slug(compound);

    const PlateLayout layout =
        layout_template.has_value()
            ? PlateLayout(plate_id, compound, layout_template->assignment())
            : default_layout(compound, plate_id);

    const auto records = generate_plate(layout, config, root / plate_id);
    save_layout(layout, root / plate_id / "layout.json");
    write_manifest_csv(records, root / plate_id / "manifest.csv");
    for (PlateImageRecord rec : records) {
      rec.filename = plate_id + "/" + rec.filename;
      combined.push_back(std::move(rec));
    }
    std::cout << "generated " << plate_id << " (" << records.size() << " images)\n";
  }
  write_manifest_csv(combined, root / "manifest.csv");

  json protective = json::object();
  for (const auto& [name, p] : config.protective_map) protective[name] = p;
  write_snapshot(root, {{"subcommand", "generate"},
                        {"plates", opt.plates},
                        {"fields", opt.fields},
                        {"channels", opt.channels},
                        {"image_size", opt.image_size},
                        {"effect_size", opt.effect_size},
                        {"protective", protective},
                        {"dose_k_um", opt.dose_k},
                        {"seed", opt.seed}});
  std::cout << "wrote " << combined.size() << " images under " << root.string()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string data_root;
  std::string out;
  int n_test = 2;
  std::uint64_t seed = 0;
  TrainConfig train;
  ModelConfig model;
  AugmentConfig augment;
  int threads = 2;
};

int cmd_train(const TrainOptions& opt) {
  if (!fs::exists(opt.data_root)) {
    throw ConfigError("data root does not exist: " + opt.data_root);
  }
  const fs::path out(opt.out);
  fs::create_directories(out);

  const Manifest manifest = build_manifest(opt.data_root);
  print_warnings(manifest.warnings);
  const auto layouts = load_layouts(opt.data_root);

  const PlateSplit split = split_plates(manifest, opt.n_test, opt.seed);
  save_split(split, out / "split.json");
  std::cout << "split: " << split.train.size() << " train / " << split.test.size()
            << " test plates (seed " << opt.seed << ")\n";

  const TrainingPairs train_pairs =
      training_pairs(filter_plates(manifest, {split.train.begin(), split.train.end()}),
                     layouts);
  const TrainingPairs valid_pairs =
      training_pairs(filter_plates(manifest, {split.test.begin(), split.test.end()}),
                     layouts);
  print_warnings(train_pairs.warnings);
  print_warnings(valid_pairs.warnings);

  const int total_epochs = opt.train.epochs_stage1 + opt.train.epochs_stage2;
  if (valid_pairs.examples.empty() && total_epochs > 0) {
    throw ConfigError("held-out plates provide no validation examples");
  }

  TrainConfig train_config = opt.train;
  train_config.seed = opt.seed;
  train_config.num_threads = opt.threads;
  train_config.metrics_csv = out / "metrics.csv";
  std::error_code ec;
  fs::remove(train_config.metrics_csv, ec);

  torch::manual_seed(static_cast<int64_t>(opt.seed));
  Classifier model = build_model(opt.model);

  const LoadedDataset train_data = load_dataset(train_pairs.examples);
  const LoadedDataset valid_data = load_dataset(valid_pairs.examples);
  std::cout << "training on " << train_data.size() << " images, validating on "
            << valid_data.size() << "\n";

  TrainReport report;
  if (total_epochs > 0) {
    TrainReport stage1 =
        train_stage1(model, train_data, valid_data, train_config, opt.augment);
    for (const EpochMetrics& m : stage1.epochs) {
      std::cout << "stage 1 epoch " << m.epoch << ": train_loss " << m.train_loss
                << " train_acc " << m.train_accuracy << " valid_loss " << m.valid_loss
                << " valid_acc " << m.valid_accuracy << "\n";
    }
    TrainReport stage2 =
        train_stage2(model, train_data, valid_data, train_config, opt.augment);
    for (const EpochMetrics& m : stage2.epochs) {
      std::cout << "stage 2 epoch " << m.epoch << ": train_loss " << m.train_loss
                << " train_acc " << m.train_accuracy << " valid_loss " << m.valid_loss
                << " valid_acc " << m.valid_accuracy << "\n";
    }
    report.epochs = stage1.epochs;
    report.epochs.insert(report.epochs.end(), stage2.epochs.begin(),
                         stage2.epochs.end());
  }

  const json meta = {{"train_config",
                      {{"epochs_stage1", train_config.epochs_stage1},
                       {"lr_stage1", train_config.lr_stage1},
                       {"epochs_stage2", train_config.epochs_stage2},
                       {"lr_stage2", train_config.lr_stage2},
                       {"momentum", train_config.momentum},
                       {"batch_size", train_config.batch_size},
                       {"weight_decay", train_config.weight_decay},
                       {"seed", train_config.seed}}},
                     {"augment", augment_to_json(opt.augment)},
                     {"split_hash", split.hash()},
                     {"pretrained_fallback", model.pretrained_fallback()}};
  model.save(out / "checkpoint.pt", meta.dump());
  write_text(out / "train_report.json", train_report_to_json(report));

  write_snapshot(out, {{"subcommand", "train"},
                       {"data_root", opt.data_root},
                       {"n_test", opt.n_test},
                       {"seed", opt.seed},
                       {"model_config", json::parse(model_config_to_json(opt.model))},
                       {"train_config", meta.at("train_config")},
                       {"augment", meta.at("augment")}});

  // Final metrics in the four-column table shape.
  std::cout << "train_loss, train_acc, valid_loss, valid_acc\n";
  if (report.epochs.empty()) {
    std::cout << "-, -, -, -\n";
  } else {
    const EpochMetrics& f = report.final_metrics();
    char row[128];
    std::snprintf(row, sizeof(row), "%.4f, %.2f%%, %.4f, %.2f%%\n", f.train_loss,
                  f.train_accuracy * 100.0, f.valid_loss, f.valid_accuracy * 100.0);
    std::cout << row;
  }
  std::cout << "checkpoint: " << (out / "checkpoint.pt").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ScreenOptions {
  std::string data_root;
  std::string checkpoint;
  std::string out;
  double threshold = 0.5;
  std::vector<std::string> plates;  // empty = held-out plates from split file
  std::string split_path;
  int threads = 2;
};

int cmd_screen(const ScreenOptions& opt) {
  if (!fs::exists(opt.checkpoint)) {
    throw ConfigError("checkpoint not found: " + opt.checkpoint);
  }
  if (opt.threshold <= 0.0 || opt.threshold >= 1.0) {
    throw ConfigError("--threshold must lie strictly inside (0,1)");
  }
  const fs::path out(opt.out);
  fs::create_directories(out);
  if (opt.threads > 0) torch::set_num_threads(opt.threads);

  LoadedClassifier loaded = Classifier::load(opt.checkpoint);
  AugmentConfig augment;
  if (!loaded.meta_json.empty()) {
    const json meta = json::parse(loaded.meta_json, nullptr, false);
    if (meta.is_object() && meta.contains("augment")) {
      augment = augment_from_json(meta["augment"]);
    }
  }

  const Manifest manifest = build_manifest(opt.data_root);
  print_warnings(manifest.warnings);
  const auto layouts = load_layouts(opt.data_root);

  std::vector<std::string> plates = opt.plates;
  if (plates.empty() && !opt.split_path.empty()) {
    plates = load_split(opt.split_path).test;
  }
  if (plates.empty()) {
    const auto all = manifest.plates();
    plates.assign(all.begin(), all.end());
  }

  json all_verdicts = json::array();
  for (const std::string& plate : plates) {
    const auto layout_it = layouts.find(plate);
    if (layout_it == layouts.end()) throw MissingLayoutError("no layout for " + plate);

    const auto scores =
        score_plate(loaded.model, manifest, plate, augment.crop_ratio);
    if (scores.empty()) throw EmptyDirectoryError("no Cy5 images for plate " + plate);

    write_scores_csv(scores, out / ("scores_" + plate + ".csv"));
    const auto summaries = summarize_plate(layout_it->second, scores);
    write_summary_csv(layout_it->second, summaries, scores,
                      out / ("summary_" + plate + ".csv"));

    const CompoundScreenResult result = screen_compound(
        layout_it->second.compound_name(), plate, summaries, opt.threshold);
    write_text(out / ("verdicts_" + plate + ".json"), verdicts_to_json(result));
    all_verdicts.push_back(json::parse(verdicts_to_json(result)));

    std::cout << plate << " (" << result.compound_name << "): ";
    for (const ScreeningVerdict& v : result.verdicts) {
      std::cout << v.compound_dose_um << "uM="
                << (v.protective ? "protective" : "non-protective") << " ";
    }
    if (!result.controls_valid) std::cout << "[invalid controls]";
    std::cout << "\n";
  }
  write_text(out / "verdicts.json", all_verdicts.dump(2) + "\n");

  write_snapshot(out, {{"subcommand", "screen"},
                       {"data_root", opt.data_root},
                       {"checkpoint", opt.checkpoint},
                       {"threshold", opt.threshold},
                       {"plates", plates}});
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReportOptions {
  std::string scores;
  std::string data_root;
  std::string out;
};

int cmd_report(const ReportOptions& opt) {
  if (!fs::exists(opt.scores)) {
    throw ConfigError("scores file not found: " + opt.scores);
  }
  const auto scores = read_scores_csv(opt.scores);
  if (scores.empty()) throw ConfigError("scores file is empty: " + opt.scores);

  const auto layouts = load_layouts(opt.data_root);
  const fs::path out(opt.out);
  fs::create_directories(out);

  std::map<std::string, std::vector<ImageScore>> by_plate;
  for (const ImageScore& s : scores) by_plate[s.plate_id].push_back(s);

  for (const auto& [plate, plate_scores] : by_plate) {
    const auto layout_it = layouts.find(plate);
    if (layout_it == layouts.end()) throw MissingLayoutError("no layout for " + plate);
    const auto histograms = bin_scores(layout_it->second, plate_scores);
    write_histogram_csv(histograms, out / ("hist_" + plate + ".csv"));
    write_png_rgb8(render_histogram_grid(layout_it->second, histograms),
                   out / ("hist_" + plate + ".png"));
    std::cout << "report for " << plate << ": " << histograms.size()
              << " well histograms\n";
  }

  write_snapshot(out, {{"subcommand", "report"},
                       {"scores", opt.scores},
                       {"data_root", opt.data_root}});
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GradcamOptions {
  std::string data_root;
  std::string checkpoint;
  std::string plate;
  std::string out;
  std::uint64_t seed = 0;
  double alpha = 0.45;
  int target_class = -1;  // -1 = predicted class
};

int cmd_gradcam(const GradcamOptions& opt) {
  if (!fs::exists(opt.checkpoint)) {
    throw ConfigError("checkpoint not found: " + opt.checkpoint);
  }
  const fs::path out(opt.out);
  fs::create_directories(out);

  LoadedClassifier loaded = Classifier::load(opt.checkpoint);
  AugmentConfig augment;
  if (!loaded.meta_json.empty()) {
    const json meta = json::parse(loaded.meta_json, nullptr, false);
    if (meta.is_object() && meta.contains("augment")) {
      augment = augment_from_json(meta["augment"]);
    }
  }

  const Manifest manifest = build_manifest(opt.data_root);
  const auto layouts = load_layouts(opt.data_root);
  const auto layout_it = layouts.find(opt.plate);
  if (layout_it == layouts.end()) {
    throw ConfigError("plate not found under data root: " + opt.plate);
  }
  const PlateLayout& layout = layout_it->second;

  // One random Cy5 field per compound-dose regime (doses {1,3,10} x Abeta).
  Rng rng(mix_seed(opt.seed, fnv1a64("gradcam|" + opt.plate)));
  int written = 0;
  for (const TreatmentRegime& regime : all_regimes()) {
    if (regime.compound_dose_um == 0) continue;

    std::vector<const ManifestEntry*> candidates;
    for (const ManifestEntry& rec : manifest.records) {
      if (rec.plate_id != opt.plate || rec.channel != Channel::kCy5) continue;
      if (layout.regime_of(rec.well) == regime) candidates.push_back(&rec);
    }
    if (candidates.empty()) {
      throw EmptyDirectoryError("no Cy5 images for regime " + regime.str());
    }
    const ManifestEntry& pick =
        *candidates[static_cast<std::size_t>(rng.below(candidates.size()))];

    const ImageF32 input = center_crop_resize(
        read_png_gray(pick.path), augment.crop_ratio,
        loaded.model.config().input_size);
    const float p_abeta = loaded.model.predict(input);
    const int predicted = p_abeta >= 0.5f ? kLabelAbeta : kLabelControl;
    const int target = opt.target_class >= 0 ? opt.target_class : predicted;

    const Heatmap heatmap = grad_cam(loaded.model, input, target);
    const ImageRGB blended = overlay(input, heatmap, opt.alpha);

    char field_part[8];
    std::snprintf(field_part, sizeof(field_part), "f%02d", pick.field_index);
    const std::string stem = opt.plate + "_" + pick.well.str() + "_" + field_part +
                             "_cam_c" + std::to_string(target);
    write_png_rgb8(blended, out / (stem + ".png"));

    // Caption triple (a, b, c): doses plus the score of the regime's nominal
    // class, mirroring the figure captions.
    const double nominal_score =
        regime.abeta_dose_um > 0 ? p_abeta : 1.0 - p_abeta;
    const json caption = {{"compound_dose_um", regime.compound_dose_um},
                          {"abeta_dose_um", regime.abeta_dose_um},
                          {"predicted_score", nominal_score},
                          {"p_abeta", p_abeta},
                          {"target_class", target},
                          {"well", pick.well.str()},
                          {"field", pick.field_index}};
    write_text(out / (stem + ".json"), caption.dump(2) + "\n");
    ++written;
    std::cout << "cam " << stem << ".png (p_abeta " << p_abeta << ")\n";
  }

  write_snapshot(out, {{"subcommand", "gradcam"},
                       {"data_root", opt.data_root},
                       {"checkpoint", opt.checkpoint},
                       {"plate", opt.plate},
                       {"seed", opt.seed},
                       {"alpha", opt.alpha},
                       {"target_class", opt.target_class}});
  std::cout << written << " overlays under " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compound-screening pipeline over high-content neuronal imagery"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override");
  ConfigDoc config;

  // generate ---------------------------------------------------------------
  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand("generate", "Render synthetic assay plates");
  auto* g_out = generate->add_option("--out", gen.out, "Output directory");
  auto* g_plates = generate->add_option("--plates", gen.plates, "Plate count (<= catalog size)");
  auto* g_fields = generate->add_option("--fields", gen.fields, "Field views per well");
  auto* g_channels = generate->add_option("--channels", gen.channels, "Comma-separated channel list");
  auto* g_size = generate->add_option("--image-size", gen.image_size, "Square image side in pixels");
  auto* g_effect = generate->add_option("--effect-size", gen.effect_size, "Class separation in [0,1]");
  auto* g_prot = generate->add_option("--protective", gen.protective,
                                      "Protective fraction as \"<name>=<p>\" (repeatable)");
  auto* g_dose_k = generate->add_option("--dose-k", gen.dose_k, "Half-saturation dose in uM");
  auto* g_seed = generate->add_option("--seed", gen.seed, "Base seed");
  auto* g_catalog = generate->add_option("--catalog", gen.catalog_path, "Catalog JSON (36 names)");
  auto* g_layout = generate->add_option("--layout", gen.layout_path, "Layout JSON template");
  auto* g_threads = generate->add_option("--threads", gen.threads, "Render threads");

  // train ------------------------------------------------------------------
  TrainOptions tr;
  CLI::App* train = app.add_subcommand("train", "Two-stage fine-tuning on control regimes");
  auto* t_root = train->add_option("--data-root", tr.data_root, "Generated data root");
  auto* t_out = train->add_option("--out", tr.out, "Output directory");
  auto* t_ntest = train->add_option("--n-test", tr.n_test, "Held-out plate count");
  auto* t_seed = train->add_option("--seed", tr.seed, "Split/training seed");
  auto* t_e1 = train->add_option("--epochs-stage1", tr.train.epochs_stage1, "Stage-1 epochs");
  auto* t_lr1 = train->add_option("--lr-stage1", tr.train.lr_stage1, "Stage-1 learning rate");
  auto* t_e2 = train->add_option("--epochs-stage2", tr.train.epochs_stage2, "Stage-2 epochs");
  auto* t_lr2 = train->add_option("--lr-stage2", tr.train.lr_stage2, "Stage-2 learning rate");
  auto* t_mom = train->add_option("--momentum", tr.train.momentum, "SGD momentum");
  auto* t_bs = train->add_option("--batch-size", tr.train.batch_size, "Batch size");
  auto* t_wd = train->add_option("--weight-decay", tr.train.weight_decay, "Weight decay");
  auto* t_input = train->add_option("--input-size", tr.model.input_size, "Model input side");
  auto* t_head = train->add_option("--head-width", tr.model.head_width, "Head width");
  auto* t_drop = train->add_option("--dropout", tr.model.dropout_p, "Head dropout");
  auto* t_pre = train->add_flag("--pretrained", tr.model.pretrained, "Start from transferred weights");
  auto* t_prep = train->add_option("--pretrained-path", tr.model.pretrained_path,
                                   "Checkpoint for --pretrained");
  auto* t_crop = train->add_option("--crop-ratio", tr.augment.crop_ratio, "Crop ratio");
  auto* t_threads = train->add_option("--threads", tr.threads, "Backend threads");

  // screen -----------------------------------------------------------------
  ScreenOptions sc;
  CLI::App* screen = app.add_subcommand("screen", "Score plates and issue verdicts");
  auto* s_root = screen->add_option("--data-root", sc.data_root, "Generated data root");
  auto* s_ckpt = screen->add_option("--checkpoint", sc.checkpoint, "Trained checkpoint");
  auto* s_out = screen->add_option("--out", sc.out, "Output directory");
  auto* s_thr = screen->add_option("--threshold", sc.threshold, "Decision threshold");
  auto* s_plates = screen->add_option("--plates", sc.plates, "Plates to screen (default: split test set)");
  auto* s_split = screen->add_option("--split", sc.split_path, "split.json from training");
  auto* s_threads = screen->add_option("--threads", sc.threads, "Backend threads");

  // report -----------------------------------------------------------------
  ReportOptions rp;
  CLI::App* report = app.add_subcommand("report", "Per-well score-distribution report");
  auto* r_scores = report->add_option("--scores", rp.scores, "Scores CSV from screen");
  auto* r_root = report->add_option("--data-root", rp.data_root, "Generated data root (layouts)");
  auto* r_out = report->add_option("--out", rp.out, "Output directory");

  // gradcam ----------------------------------------------------------------
  GradcamOptions gc;
  CLI::App* gradcam_cmd = app.add_subcommand("gradcam", "Attention overlays for one plate");
  auto* c_root = gradcam_cmd->add_option("--data-root", gc.data_root, "Generated data root");
  auto* c_ckpt = gradcam_cmd->add_option("--checkpoint", gc.checkpoint, "Trained checkpoint");
  auto* c_plate = gradcam_cmd->add_option("--plate", gc.plate, "Plate id");
  auto* c_out = gradcam_cmd->add_option("--out", gc.out, "Output directory");
  auto* c_seed = gradcam_cmd->add_option("--seed", gc.seed, "Sampling seed");
  auto* c_alpha = gradcam_cmd->add_option("--alpha", gc.alpha, "Overlay opacity in [0,1]");
  auto* c_class = gradcam_cmd->add_option("--target-class", gc.target_class,
                                          "0=control, 1=Abeta, -1=predicted");

  try {
    app.parse(argc, argv);
    config.load(config_path);

    if (generate->parsed()) {
      config.fill(g_out, "out", gen.out);
      config.fill(g_plates, "plates", gen.plates);
      config.fill(g_fields, "fields", gen.fields);
      config.fill(g_channels, "channels", gen.channels);
      config.fill(g_size, "image_size", gen.image_size);
      config.fill(g_effect, "effect_size", gen.effect_size);
      config.fill(g_prot, "protective", gen.protective);
      config.fill(g_dose_k, "dose_k_um", gen.dose_k);
      config.fill(g_seed, "seed", gen.seed);
      config.fill(g_catalog, "catalog", gen.catalog_path);
      config.fill(g_layout, "layout", gen.layout_path);
      config.fill(g_threads, "threads", gen.threads);
      if (gen.out.empty()) throw ConfigError("generate requires --out");
      return cmd_generate(gen);
    }
    if (train->parsed()) {
      config.fill(t_root, "data_root", tr.data_root);
      config.fill(t_out, "out", tr.out);
      config.fill(t_ntest, "n_test", tr.n_test);
      config.fill(t_seed, "seed", tr.seed);
      config.fill(t_e1, "epochs_stage1", tr.train.epochs_stage1);
      config.fill(t_lr1, "lr_stage1", tr.train.lr_stage1);
      config.fill(t_e2, "epochs_stage2", tr.train.epochs_stage2);
      config.fill(t_lr2, "lr_stage2", tr.train.lr_stage2);
      config.fill(t_mom, "momentum", tr.train.momentum);
      config.fill(t_bs, "batch_size", tr.train.batch_size);
      config.fill(t_wd, "weight_decay", tr.train.weight_decay);
      config.fill(t_input, "input_size", tr.model.input_size);
      config.fill(t_head, "head_width", tr.model.head_width);
      config.fill(t_drop, "dropout_p", tr.model.dropout_p);
      config.fill(t_pre, "pretrained", tr.model.pretrained);
      config.fill(t_prep, "pretrained_path", tr.model.pretrained_path);
      config.fill(t_crop, "crop_ratio", tr.augment.crop_ratio);
      config.fill(t_threads, "threads", tr.threads);
      if (tr.data_root.empty() || tr.out.empty()) {
        throw ConfigError("train requires --data-root and --out");
      }
      tr.model.validate();
      tr.train.validate();
      return cmd_train(tr);
    }
    if (screen->parsed()) {
      config.fill(s_root, "data_root", sc.data_root);
      config.fill(s_ckpt, "checkpoint", sc.checkpoint);
      config.fill(s_out, "out", sc.out);
      config.fill(s_thr, "threshold", sc.threshold);
      config.fill(s_plates, "plates", sc.plates);
      config.fill(s_split, "split", sc.split_path);
      config.fill(s_threads, "threads", sc.threads);
      if (sc.data_root.empty() || sc.checkpoint.empty() || sc.out.empty()) {
        throw ConfigError("screen requires --data-root, --checkpoint and --out");
      }
      return cmd_screen(sc);
    }
    if (report->parsed()) {
      config.fill(r_scores, "scores", rp.scores);
      config.fill(r_root, "data_root", rp.data_root);
      config.fill(r_out, "out", rp.out);
      if (rp.scores.empty() || rp.data_root.empty() || rp.out.empty()) {
        throw ConfigError("report requires --scores, --data-root and --out");
      }
      return cmd_report(rp);
    }
    if (gradcam_cmd->parsed()) {
      config.fill(c_root, "data_root", gc.data_root);
      config.fill(c_ckpt, "checkpoint", gc.checkpoint);
      config.fill(c_plate, "plate", gc.plate);
      config.fill(c_out, "out", gc.out);
      config.fill(c_seed, "seed", gc.seed);
      config.fill(c_alpha, "alpha", gc.alpha);
      config.fill(c_class, "target_class", gc.target_class);
      if (gc.data_root.empty() || gc.checkpoint.empty() || gc.plate.empty() ||
          gc.out.empty()) {
        throw ConfigError(
            "gradcam requires --data-root, --checkpoint, --plate and --out");
      }
      return cmd_gradcam(gc);
    }
    throw ConfigError("no subcommand given");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
