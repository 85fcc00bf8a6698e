#include "neuroscreen/model.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "neuroscreen/errors.hpp"
#include "neuroscreen/rng.hpp"

namespace neuroscreen {

using nlohmann::json;

void ModelConfig::validate() const {
  if (input_size < 32) throw ConfigError("input_size must be at least 32");
  if (head_width < 1) throw ConfigError("head_width must be positive");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("dropout_p must be in [0,1)");
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
}

void TrainConfig::validate() const {
  if (epochs_stage1 < 0 || epochs_stage2 < 0) throw ConfigError("epoch counts must be >= 0");
  // Zero is tolerated so degenerate schedules stay testable.
  if (lr_stage1 < 0.0 || lr_stage2 < 0.0) throw ConfigError("learning rates must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0,1)");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

const EpochMetrics& TrainReport::final_metrics() const {
  if (epochs.empty()) throw EmptyDatasetError("train report has no epochs");
  return epochs.back();
}

std::string model_config_to_json(const ModelConfig& config) {
  const json doc = {{"input_size", config.input_size},
                    {"head_width", config.head_width},
                    {"dropout_p", config.dropout_p},
                    {"num_classes", config.num_classes},
                    {"pretrained", config.pretrained},
                    {"pretrained_path", config.pretrained_path}};
  return doc.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("model config is not valid JSON: " + std::string(e.what()));
  }
  ModelConfig config;
  config.input_size = doc.value("input_size", config.input_size);
  config.head_width = doc.value("head_width", config.head_width);
  config.dropout_p = doc.value("dropout_p", config.dropout_p);
  config.num_classes = doc.value("num_classes", config.num_classes);
  config.pretrained = doc.value("pretrained", config.pretrained);
  config.pretrained_path = doc.value("pretrained_path", config.pretrained_path);
  return config;
}

std::string train_report_to_json(const TrainReport& report) {
  json epochs = json::array();
  for (const EpochMetrics& m : report.epochs) {
    epochs.push_back({{"stage", m.stage},
                      {"epoch", m.epoch},
                      {"train_loss", m.train_loss},
                      {"train_acc", m.train_accuracy},
                      {"valid_loss", m.valid_loss},
                      {"valid_acc", m.valid_accuracy}});
  }
  return json{{"epochs", epochs}}.dump(2) + "\n";
}

ResidualBlockImpl::ResidualBlockImpl(int in_planes, int planes, int stride) {
  conv1 = register_module(
      "conv1", torch::nn::Conv2d(
                   torch::nn::Conv2dOptions(in_planes, planes, 3).stride(stride).padding(1).bias(false)));
  bn1 = register_module("bn1", torch::nn::BatchNorm2d(planes));
  conv2 = register_module(
      "conv2", torch::nn::Conv2d(
                   torch::nn::Conv2dOptions(planes, planes, 3).stride(1).padding(1).bias(false)));
  bn2 = register_module("bn2", torch::nn::BatchNorm2d(planes));
  if (stride != 1 || in_planes != planes) {
    shortcut = torch::nn::Sequential(
        torch::nn::Conv2d(
            torch::nn::Conv2dOptions(in_planes, planes, 1).stride(stride).bias(false)),
        torch::nn::BatchNorm2d(planes));
    register_module("shortcut", shortcut);
  }
}

torch::Tensor ResidualBlockImpl::forward(torch::Tensor x) {
  auto out = torch::relu(bn1->forward(conv1->forward(x)));
  out = bn2->forward(conv2->forward(out));
  out = out + (shortcut.is_empty() ? x : shortcut->forward(x));
  return torch::relu(out);
}

namespace {

torch::nn::Sequential make_stage(int in_planes, int planes, int stride) {
  return torch::nn::Sequential(ResidualBlock(in_planes, planes, stride),
                               ResidualBlock(planes, planes, 1));
}

}  // namespace

ClassifierNetImpl::ClassifierNetImpl(const ModelConfig& config) {
  conv1 = register_module(
      "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(config.in_channels(), 64, 7)
                                     .stride(2)
                                     .padding(3)
                                     .bias(false)));
  bn1 = register_module("bn1", torch::nn::BatchNorm2d(64));
  stage1 = register_module("stage1", make_stage(64, 64, 1));
  stage2 = register_module("stage2", make_stage(64, 128, 2));
  stage3 = register_module("stage3", make_stage(128, 256, 2));
  stage4 = register_module("stage4", make_stage(256, 512, 2));
  fc1 = register_module("fc1", torch::nn::Linear(512, config.head_width));
  dropout = register_module("dropout", torch::nn::Dropout(config.dropout_p));
  fc2 = register_module("fc2", torch::nn::Linear(config.head_width, config.num_classes));

  for (auto& module : modules(/*include_self=*/false)) {
    if (auto* conv = module->as<torch::nn::Conv2d>()) {
      torch::nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut,
                                       torch::kReLU);
    } else if (auto* bn = module->as<torch::nn::BatchNorm2d>()) {
      torch::nn::init::ones_(bn->weight);
      torch::nn::init::zeros_(bn->bias);
    }
  }
}

torch::Tensor ClassifierNetImpl::features(torch::Tensor x) {
  x = torch::relu(bn1->forward(conv1->forward(x)));
  x = torch::max_pool2d(x, /*kernel_size=*/3, /*stride=*/2, /*padding=*/1);
  x = stage1->forward(x);
  x = stage2->forward(x);
  x = stage3->forward(x);
  return stage4->forward(x);
}

torch::Tensor ClassifierNetImpl::head(torch::Tensor feats) {
  auto x = torch::adaptive_avg_pool2d(feats, {1, 1}).flatten(1);
  x = torch::relu(fc1->forward(x));
  x = dropout->forward(x);
  return fc2->forward(x);
}

Classifier::Classifier(ModelConfig config) : Classifier(std::move(config), SkipPretrained{}) {
  if (config_.pretrained) try_load_pretrained();
}

Classifier::Classifier(ModelConfig config, SkipPretrained)
    : config_(std::move(config)) {
  config_.validate();
  net_ = ClassifierNet(config_);
}

void Classifier::try_load_pretrained() {
  const auto warn_fallback = [this](const std::string& reason) {
    std::cerr << "[neuroscreen] warning: pretrained weights unavailable (" << reason
              << "); continuing from random initialization\n";
    pretrained_fallback_ = true;
  };
  if (config_.pretrained_path.empty()) {
    warn_fallback("no pretrained_path configured");
    return;
  }
  if (!std::filesystem::exists(config_.pretrained_path)) {
    warn_fallback("file not found: " + config_.pretrained_path);
    return;
  }
  try {
    torch::serialize::InputArchive archive;
    archive.load_from(config_.pretrained_path);
    torch::serialize::InputArchive net_archive;
    if (archive.try_read("net", net_archive)) {
      net_->load(net_archive);
    } else {
      net_->load(archive);
    }
  } catch (const std::exception& e) {
    warn_fallback(e.what());
  }
}

torch::Tensor Classifier::input_tensor(const ImageF32& image) const {
  if (image.width != config_.input_size || image.height != config_.input_size) {
    throw ShapeMismatchError("expected " + std::to_string(config_.input_size) + "x" +
                             std::to_string(config_.input_size) + " input, got " +
                             std::to_string(image.width) + "x" +
                             std::to_string(image.height));
  }
  auto t = torch::from_blob(const_cast<float*>(image.px.data()),
                            {1, 1, image.height, image.width}, torch::kFloat32)
               .clone();
  if (config_.in_channels() == 3) t = t.repeat({1, 3, 1, 1});
  return t;
}

torch::Tensor Classifier::batch_tensor(std::span<const ImageF32> images) const {
  if (images.empty()) throw EmptyDatasetError("batch_tensor: no images");
  std::vector<torch::Tensor> tensors;
  tensors.reserve(images.size());
  for (const ImageF32& img : images) tensors.push_back(input_tensor(img));
  return torch::cat(tensors, 0);
}

torch::Tensor Classifier::forward_logits(torch::Tensor input) {
  return net_->forward(std::move(input));
}

torch::Tensor Classifier::forward_probs(torch::Tensor input) {
  return torch::softmax(forward_logits(std::move(input)), /*dim=*/1);
}

std::pair<torch::Tensor, torch::Tensor> Classifier::forward_with_features(
    torch::Tensor input) {
  auto feats = net_->features(std::move(input));
  auto logits = net_->head(feats);
  return {feats, logits};
}

float Classifier::predict(const ImageF32& image) {
  torch::NoGradGuard no_grad;
  net_->eval();
  const auto probs = forward_probs(input_tensor(image));
  return probs[0][kLabelAbeta].item<float>();
}

void Classifier::set_stage1_trainable() {
  static const std::array<std::string, 3> kTrainablePrefixes = {"stage4.", "fc1.",
                                                                "fc2."};
  for (auto& pair : net_->named_parameters()) {
    const std::string& name = pair.key();
    const bool trainable =
        std::any_of(kTrainablePrefixes.begin(), kTrainablePrefixes.end(),
                    [&](const std::string& prefix) { return name.starts_with(prefix); });
    pair.value().set_requires_grad(trainable);
  }
}

void Classifier::set_all_trainable() {
  for (auto& pair : net_->named_parameters()) pair.value().set_requires_grad(true);
}

std::vector<torch::Tensor> Classifier::trainable_parameters() {
  std::vector<torch::Tensor> params;
  for (auto& p : net_->parameters()) {
    if (p.requires_grad()) params.push_back(p);
  }
  return params;
}

void Classifier::save(const std::filesystem::path& path,
                      const std::string& meta_json) const {
  torch::serialize::OutputArchive archive;
  torch::serialize::OutputArchive net_archive;
  net_->save(net_archive);
  archive.write("net", net_archive);
  archive.write("model_config", c10::IValue(model_config_to_json(config_)));
  archive.write("meta", c10::IValue(meta_json));
  archive.save_to(path.string());
}

LoadedClassifier Classifier::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("checkpoint not found: " + path.string());
  }
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  c10::IValue config_text;
  archive.read("model_config", config_text);
  ModelConfig config = model_config_from_json(config_text.toStringRef());

  Classifier model(config, SkipPretrained{});
  torch::serialize::InputArchive net_archive;
  archive.read("net", net_archive);
  model.net_->load(net_archive);

  c10::IValue meta;
  std::string meta_json;
  if (archive.try_read("meta", meta)) meta_json = meta.toStringRef();
  return LoadedClassifier{std::move(model), std::move(meta_json)};
}

Classifier build_model(const ModelConfig& config) { return Classifier(config); }

void LoadedDataset::add(ImageF32 image, int label) {
  images.push_back(std::move(image));
  labels.push_back(label);
}

LoadedDataset load_dataset(const std::vector<LabeledExample>& examples) {
  LoadedDataset data;
  data.images.reserve(examples.size());
  data.labels.reserve(examples.size());
  for (const LabeledExample& ex : examples) {
    data.add(read_png_gray(ex.path), ex.label);
  }
  return data;
}

namespace {

torch::Tensor label_tensor(const std::vector<int>& labels, std::size_t begin,
                           std::size_t end) {
  std::vector<std::int64_t> slice(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                  labels.begin() + static_cast<std::ptrdiff_t>(end));
  return torch::tensor(slice, torch::kInt64);
}

}  // namespace

EvalResult evaluate(Classifier& model, const LoadedDataset& data, double crop_ratio,
                    int batch_size) {
  if (data.empty()) throw EmptyDatasetError("evaluate: empty dataset");
  torch::NoGradGuard no_grad;
  model.net()->eval();

  const int input_size = model.config().input_size;
  double loss_sum = 0.0;
  std::int64_t correct = 0;
  for (std::size_t begin = 0; begin < data.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(data.size(), begin + static_cast<std::size_t>(batch_size));
    std::vector<ImageF32> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(center_crop_resize(data.images[i], crop_ratio, input_size));
    }
    const auto x = model.batch_tensor(batch);
    const auto y = label_tensor(data.labels, begin, end);
    const auto logits = model.forward_logits(x);
    loss_sum += torch::nn::functional::cross_entropy(
                    logits, y,
                    torch::nn::functional::CrossEntropyFuncOptions().reduction(torch::kSum))
                    .item<double>();
    correct += logits.argmax(1).eq(y).sum().item<std::int64_t>();
  }
  const double n = static_cast<double>(data.size());
  return EvalResult{loss_sum / n, static_cast<double>(correct) / n};
}

namespace {

void append_metrics_csv(const std::filesystem::path& path, const EpochMetrics& m) {
  if (path.empty()) return;
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append metrics CSV: " + path.string());
  if (fresh) out << "stage,epoch,train_loss,train_acc,valid_loss,valid_acc\n";
  out.precision(10);
  out << m.stage << ',' << m.epoch << ',' << m.train_loss << ',' << m.train_accuracy
      << ',' << m.valid_loss << ',' << m.valid_accuracy << '\n';
}

TrainReport run_stage(Classifier& model, int stage, int epochs, double lr,
                      const LoadedDataset& train, const LoadedDataset& valid,
                      const TrainConfig& config, const AugmentConfig& augment_config) {
  config.validate();
  if (train.empty()) throw EmptyDatasetError("training set is empty");
  if (valid.empty()) throw EmptyDatasetError("validation set is empty");
  if (config.num_threads > 0) torch::set_num_threads(config.num_threads);

  if (stage == 1) {
    model.set_stage1_trainable();
  } else {
    model.set_all_trainable();
  }

  TrainReport report;
  if (epochs == 0) return report;

  torch::optim::SGD optimizer(model.trainable_parameters(),
                              torch::optim::SGDOptions(lr)
                                  .momentum(config.momentum)
                                  .weight_decay(config.weight_decay));

  const int input_size = model.config().input_size;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const std::uint64_t epoch_key = fnv1a64("stage" + std::to_string(stage) +
                                            "|epoch" + std::to_string(epoch));
    // Backend RNG drives dropout; reseeded per epoch for reproducibility.
    torch::manual_seed(static_cast<int64_t>(mix_seed(config.seed, epoch_key)));
    model.net()->train();

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(mix_seed(config.seed, mix_seed(epoch_key, fnv1a64("shuffle"))));
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      std::vector<ImageF32> batch;
      batch.reserve(end - begin);
      std::vector<int> batch_labels;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        // Seeded by the example's stable index, not its shuffle position.
        const std::uint64_t aug_seed =
            mix_seed(config.seed, mix_seed(epoch_key, fnv1a64("aug" + std::to_string(idx))));
        batch.push_back(augment(train.images[idx], aug_seed, augment_config, input_size));
        batch_labels.push_back(train.labels[idx]);
      }
      const auto x = model.batch_tensor(batch);
      const auto y = torch::tensor(
          std::vector<std::int64_t>(batch_labels.begin(), batch_labels.end()),
          torch::kInt64);

      optimizer.zero_grad();
      const auto logits = model.forward_logits(x);
      const auto loss = torch::nn::functional::cross_entropy(logits, y);
      loss.backward();
      optimizer.step();

      loss_sum += loss.item<double>() * static_cast<double>(end - begin);
      correct += logits.argmax(1).eq(y).sum().item<std::int64_t>();
    }

    EpochMetrics metrics;
    metrics.stage = stage;
    metrics.epoch = epoch;
    metrics.train_loss = loss_sum / static_cast<double>(train.size());
    metrics.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    const EvalResult val = evaluate(model, valid, augment_config.crop_ratio,
                                    std::max(config.batch_size, 16));
    metrics.valid_loss = val.loss;
    metrics.valid_accuracy = val.accuracy;
    report.epochs.push_back(metrics);
    append_metrics_csv(config.metrics_csv, metrics);
  }
  return report;
}

}  // namespace

TrainReport train_stage1(Classifier& model, const LoadedDataset& train,
                         const LoadedDataset& valid, const TrainConfig& config,
                         const AugmentConfig& augment) {
  return run_stage(model, 1, config.epochs_stage1, config.lr_stage1, train, valid,
                   config, augment);
}

TrainReport train_stage2(Classifier& model, const LoadedDataset& train,
                         const LoadedDataset& valid, const TrainConfig& config,
                         const AugmentConfig& augment) {
  return run_stage(model, 2, config.epochs_stage2, config.lr_stage2, train, valid,
                   config, augment);
}

}  // namespace neuroscreen
