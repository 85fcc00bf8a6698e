#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neuroscreen/augment.hpp"
#include "neuroscreen/image.hpp"
#include "neuroscreen/manifest.hpp"

namespace neuroscreen {

// 18-layer residual classifier configuration. The residual pattern is fixed
// (4 stages x 2 two-layer blocks, widths 64/128/256/512); only the head and
// input geometry are adjustable.
struct ModelConfig {
  int input_size = 128;
  int head_width = 512;
  double dropout_p = 0.35;
  int num_classes = 2;
  bool pretrained = false;
  std::string pretrained_path;  // checkpoint in this tool's format

  // Grayscale input is replicated to 3 planes when transferring weights that
  // expect RGB.
  int in_channels() const { return pretrained ? 3 : 1; }

  void validate() const;
};

struct TrainConfig {
  int epochs_stage1 = 10;
  double lr_stage1 = 1e-3;
  int epochs_stage2 = 10;
  double lr_stage2 = 1e-4;
  double momentum = 0.9;
  int batch_size = 4;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  int num_threads = 0;               // 0 = leave the backend default
  std::filesystem::path metrics_csv;  // optional per-epoch CSV append

  void validate() const;
};

struct EpochMetrics {
  int stage = 0;
  int epoch = 0;  // 1-based within the stage
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double valid_loss = 0.0;
  double valid_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;

  const EpochMetrics& final_metrics() const;  // throws EmptyDatasetError if empty
};

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);
std::string train_report_to_json(const TrainReport& report);

// Two-layer residual block with identity or 1x1-projection shortcut.
struct ResidualBlockImpl : torch::nn::Module {
  ResidualBlockImpl(int in_planes, int planes, int stride);
  torch::Tensor forward(torch::Tensor x);

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  torch::nn::Sequential shortcut{nullptr};
};
TORCH_MODULE(ResidualBlock);

// ResNet18 trunk plus the screening head:
// global pool -> fc(512) -> ReLU -> dropout -> fc(num_classes).
struct ClassifierNetImpl : torch::nn::Module {
  explicit ClassifierNetImpl(const ModelConfig& config);

  torch::Tensor features(torch::Tensor x);       // last conv stage activations
  torch::Tensor head(torch::Tensor features);    // logits
  torch::Tensor forward(torch::Tensor x) { return head(features(x)); }

  torch::nn::Conv2d conv1{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr};
  torch::nn::Sequential stage1, stage2, stage3, stage4;
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
  torch::nn::Dropout dropout{nullptr};
};
TORCH_MODULE(ClassifierNet);

struct LoadedClassifier;

// Owning wrapper binding the net to its configuration.
class Classifier {
 public:
  explicit Classifier(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ClassifierNet& net() { return net_; }
  bool pretrained_fallback() const { return pretrained_fallback_; }

  // [1,c,s,s] tensor from a preprocessed image; throws ShapeMismatchError
  // unless the image is input_size x input_size.
  torch::Tensor input_tensor(const ImageF32& image) const;
  torch::Tensor batch_tensor(std::span<const ImageF32> images) const;

  torch::Tensor forward_logits(torch::Tensor input);
  torch::Tensor forward_probs(torch::Tensor input);  // softmax rows
  // (last conv stage activations, logits) with the autograd path intact.
  std::pair<torch::Tensor, torch::Tensor> forward_with_features(torch::Tensor input);

  // P(Abeta class) for one preprocessed image; eval mode, deterministic.
  float predict(const ImageF32& image);

  void set_stage1_trainable();  // last residual stage + head only
  void set_all_trainable();
  std::vector<torch::Tensor> trainable_parameters();

  // Single-file checkpoint: weights + model config + caller metadata.
  void save(const std::filesystem::path& path, const std::string& meta_json) const;
  static LoadedClassifier load(const std::filesystem::path& path);

 private:
  struct SkipPretrained {};
  Classifier(ModelConfig config, SkipPretrained);
  void try_load_pretrained();

  ModelConfig config_;
  ClassifierNet net_{nullptr};
  bool pretrained_fallback_ = false;
};

struct LoadedClassifier {
  Classifier model;
  std::string meta_json;
};

// build_model = validate + construct (+ pretrained weight load when asked).
Classifier build_model(const ModelConfig& config);

// Raw images with labels, held in memory for the training loop.
struct LoadedDataset {
  std::vector<ImageF32> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  void add(ImageF32 image, int label);
};

LoadedDataset load_dataset(const std::vector<LabeledExample>& examples);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Cross-entropy and argmax accuracy under the deterministic inference path
// (center crop + resize). Ties at argmax resolve to class 0.
EvalResult evaluate(Classifier& model, const LoadedDataset& data,
                    double crop_ratio = 0.875, int batch_size = 32);

// Stage 1: 10 epochs, lr 1e-3, last conv stage + head only.
TrainReport train_stage1(Classifier& model, const LoadedDataset& train,
                         const LoadedDataset& valid, const TrainConfig& config,
                         const AugmentConfig& augment = {});

// Stage 2: 10 epochs, lr 1e-4, every layer trainable.
TrainReport train_stage2(Classifier& model, const LoadedDataset& train,
                         const LoadedDataset& valid, const TrainConfig& config,
                         const AugmentConfig& augment = {});

}  // namespace neuroscreen
