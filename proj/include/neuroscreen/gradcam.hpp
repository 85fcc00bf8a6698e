#pragma once

#include <torch/torch.h>

#include <utility>

#include "neuroscreen/heatmap.hpp"
#include "neuroscreen/image.hpp"
#include "neuroscreen/model.hpp"

namespace neuroscreen {

// Anything that can expose its final conv-stage activations alongside the
// class logits. The activations tensor may be undefined for models without
// an identifiable conv stage.
class FeatureScoringModel {
 public:
  virtual ~FeatureScoringModel() = default;
  // input [1,c,h,w] -> (activations [1,K,h',w'], logits [1,C]).
  virtual std::pair<torch::Tensor, torch::Tensor> forward_with_features(
      torch::Tensor input) = 0;
};

// Channel weights are spatial means of d(logit_c)/d(activation_k); the raw map
// is ReLU of the weighted activation sum. Returns the [h,w] map, un-normalized.
torch::Tensor cam_from_activations(const torch::Tensor& activations,
                                   const torch::Tensor& gradients);

// Full pipeline: autograd pass, weighted combination, bilinear upsampling to
// out_size, max-normalization (a zero map stays zero).
Heatmap grad_cam(FeatureScoringModel& model, torch::Tensor input, int target_class,
                 int out_size);

// Convenience overload for the screening classifier (eval mode, gradients
// taken with respect to the pre-softmax scores).
Heatmap grad_cam(Classifier& model, const ImageF32& image, int target_class);

}  // namespace neuroscreen
