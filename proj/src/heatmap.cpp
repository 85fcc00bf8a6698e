#include "neuroscreen/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "neuroscreen/errors.hpp"

namespace neuroscreen {

std::array<float, 3> colormap_jet(float h) {
  h = std::clamp(h, 0.0f, 1.0f);
  const auto ramp = [](float v) { return std::clamp(v, 0.0f, 1.0f); };
  return {ramp(1.5f - std::fabs(4.0f * h - 3.0f)),
          ramp(1.5f - std::fabs(4.0f * h - 2.0f)),
          ramp(1.5f - std::fabs(4.0f * h - 1.0f))};
}

ImageRGB overlay(const ImageF32& image, const Heatmap& heatmap, double alpha) {
  if (!image.same_shape(heatmap.values)) {
    throw ShapeMismatchError("overlay: image and heatmap shapes differ");
  }
  if (alpha < 0.0 || alpha > 1.0) {
    throw ShapeMismatchError("overlay: alpha must be in [0,1]");
  }
  ImageRGB out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const float g = std::clamp(image.at(x, y), 0.0f, 1.0f);
      const std::array<float, 3> c = colormap_jet(heatmap.values.at(x, y));
      std::uint8_t* px = out.at(x, y);
      for (int k = 0; k < 3; ++k) {
        const double v = (1.0 - alpha) * g + alpha * c[static_cast<std::size_t>(k)];
        px[k] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  return out;
}

}  // namespace neuroscreen
