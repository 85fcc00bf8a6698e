#include "neuroscreen/gradcam.hpp"

#include <cstring>

#include "neuroscreen/errors.hpp"

namespace neuroscreen {

torch::Tensor cam_from_activations(const torch::Tensor& activations,
                                   const torch::Tensor& gradients) {
  if (!activations.defined() || activations.dim() != 4 || activations.size(0) != 1) {
    throw ShapeMismatchError("cam_from_activations expects [1,K,h,w] activations");
  }
  if (!gradients.sizes().equals(activations.sizes())) {
    throw ShapeMismatchError("activation/gradient shapes differ");
  }
  const auto alphas = gradients.mean({2, 3}, /*keepdim=*/true);  // [1,K,1,1]
  return torch::relu((activations * alphas).sum(1)).squeeze(0);  // [h,w]
}

Heatmap grad_cam(FeatureScoringModel& model, torch::Tensor input, int target_class,
                 int out_size) {
  // Gradients flow to the activations through the input even when every
  // parameter is frozen.
  input = input.detach().clone().set_requires_grad(true);
  auto [activations, logits] = model.forward_with_features(input);
  if (!activations.defined()) {
    throw NoConvStageError("model exposes no conv-stage activations");
  }
  if (logits.dim() != 2 || logits.size(0) != 1) {
    throw ShapeMismatchError("grad_cam expects [1,C] logits");
  }
  if (target_class < 0 || target_class >= logits.size(1)) {
    throw ShapeMismatchError("target_class " + std::to_string(target_class) +
                             " out of range");
  }

  const auto score = logits[0][target_class];
  const auto grads = torch::autograd::grad({score}, {activations});
  auto raw = cam_from_activations(activations.detach(), grads[0].detach());

  // Upsample, then max-normalize; for a non-negative map this equals
  // normalize-then-upsample with the peak pinned at exactly 1.
  auto up = torch::nn::functional::interpolate(
                raw.unsqueeze(0).unsqueeze(0),
                torch::nn::functional::InterpolateFuncOptions()
                    .size(std::vector<std::int64_t>{out_size, out_size})
                    .mode(torch::kBilinear)
                    .align_corners(false))
                .squeeze(0)
                .squeeze(0)
                .contiguous();
  const double peak = up.max().item<double>();
  if (peak > 0.0) up = up / peak;

  Heatmap heatmap;
  heatmap.target_class = target_class;
  heatmap.values = ImageF32(out_size, out_size);
  std::memcpy(heatmap.values.px.data(), up.data_ptr<float>(),
              heatmap.values.px.size() * sizeof(float));
  return heatmap;
}

namespace {

class ClassifierAdapter final : public FeatureScoringModel {
 public:
  explicit ClassifierAdapter(Classifier& model) : model_(model) {}
  std::pair<torch::Tensor, torch::Tensor> forward_with_features(
      torch::Tensor input) override {
    return model_.forward_with_features(std::move(input));
  }

 private:
  Classifier& model_;
};

}  // namespace

Heatmap grad_cam(Classifier& model, const ImageF32& image, int target_class) {
  model.net()->eval();
  ClassifierAdapter adapter(model);
  return grad_cam(adapter, model.input_tensor(image), target_class,
                  model.config().input_size);
}

}  // namespace neuroscreen
