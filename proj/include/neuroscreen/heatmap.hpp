#pragma once

#include <array>

#include "neuroscreen/image.hpp"

namespace neuroscreen {

// Class-attention map over an input image. Values are non-negative and
// max-normalized: the peak is 1 unless the map is identically zero.
struct Heatmap {
  ImageF32 values;
  int target_class = 0;
};

// Classic blue->cyan->yellow->red ramp; h in [0,1].
std::array<float, 3> colormap_jet(float h);

// Colormapped heatmap alpha-blended over the grayscale image.
// alpha = 0 returns the image unchanged (as RGB).
ImageRGB overlay(const ImageF32& image, const Heatmap& heatmap, double alpha);

}  // namespace neuroscreen
