#include "neuroscreen/augment.hpp"

#include <algorithm>
#include <cmath>

#include "neuroscreen/errors.hpp"
#include "neuroscreen/rng.hpp"

namespace neuroscreen {
namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

// Reflect coordinate into [0, n-1].
inline int reflect(int v, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  v = ((v % period) + period) % period;
  return v < n ? v : period - v;
}

inline float sample_bilinear(const ImageF32& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int xa = reflect(x0, img.width), xb = reflect(x0 + 1, img.width);
  const int ya = reflect(y0, img.height), yb = reflect(y0 + 1, img.height);
  const double top = (1.0 - fx) * img.at(xa, ya) + fx * img.at(xb, ya);
  const double bot = (1.0 - fx) * img.at(xa, yb) + fx * img.at(xb, yb);
  return static_cast<float>((1.0 - fy) * top + fy * bot);
}

bool is_identity(const AugmentParams& p) {
  return p.rotation_deg == 0.0 && p.shear_deg == 0.0 && p.zoom == 1.0;
}

}  // namespace

AugmentParams sample_augment_params(const AugmentConfig& config, std::uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a64("augment")));
  AugmentParams p;
  p.rotation_deg = rng.uniform(-config.max_rotation_deg, config.max_rotation_deg);
  p.shear_deg = rng.uniform(-config.max_shear_deg, config.max_shear_deg);
  p.zoom = rng.uniform(1.0 - config.max_zoom, 1.0 + config.max_zoom);
  p.hflip = config.hflip && rng.bernoulli(0.5);
  p.vflip = config.vflip && rng.bernoulli(0.5);
  p.crop_cx = rng.uniform();
  p.crop_cy = rng.uniform();
  return p;
}

AugmentParams neutral_augment_params() { return AugmentParams{}; }

ImageF32 flip_horizontal(const ImageF32& image) {
  ImageF32 out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      out.at(x, y) = image.at(image.width - 1 - x, y);
    }
  }
  return out;
}

ImageF32 flip_vertical(const ImageF32& image) {
  ImageF32 out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      out.at(x, y) = image.at(x, image.height - 1 - y);
    }
  }
  return out;
}

ImageF32 resize_bilinear(const ImageF32& image, int out_w, int out_h) {
  if (image.width == out_w && image.height == out_h) return image;
  ImageF32 out(out_w, out_h);
  const double sx = static_cast<double>(image.width) / out_w;
  const double sy = static_cast<double>(image.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      out.at(x, y) = sample_bilinear(image, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
    }
  }
  return out;
}

ImageF32 apply_augment(const ImageF32& image, const AugmentParams& params,
                       const AugmentConfig& config, int out_size) {
  if (image.width != image.height || image.width <= 0) {
    throw ShapeMismatchError("augment expects a non-empty square image");
  }

  ImageF32 work = image;
  if (!is_identity(params)) {
    // Inverse-map output pixels through the affine transform about the center.
    const double theta = params.rotation_deg * kDegToRad;
    const double shear = std::tan(params.shear_deg * kDegToRad);
    const double z = params.zoom;
    // Forward: zoom, axis shear, rotation (det = z^2, always invertible).
    const double a = z * (std::cos(theta) + shear * -std::sin(theta));
    const double b = z * -std::sin(theta);
    const double c = z * (std::sin(theta) + shear * std::cos(theta));
    const double d = z * std::cos(theta);
    const double det = a * d - b * c;
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    const double cx = (image.width - 1) / 2.0;
    const double cy = (image.height - 1) / 2.0;

    ImageF32 warped(image.width, image.height);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double sx = ia * dx + ib * dy + cx;
        const double sy = ic * dx + id * dy + cy;
        warped.at(x, y) = sample_bilinear(image, sx, sy);
      }
    }
    work = std::move(warped);
  }

  if (params.hflip) work = flip_horizontal(work);
  if (params.vflip) work = flip_vertical(work);

  const int crop_side = std::max(
      1, static_cast<int>(std::lround(config.crop_ratio * work.width)));
  const int max_off = work.width - crop_side;
  const int off_x = static_cast<int>(std::lround(params.crop_cx * max_off));
  const int off_y = static_cast<int>(std::lround(params.crop_cy * max_off));

  ImageF32 cropped(crop_side, crop_side);
  for (int y = 0; y < crop_side; ++y) {
    for (int x = 0; x < crop_side; ++x) {
      cropped.at(x, y) = work.at(x + off_x, y + off_y);
    }
  }
  return resize_bilinear(cropped, out_size, out_size);
}

ImageF32 augment(const ImageF32& image, std::uint64_t seed,
                 const AugmentConfig& config, int out_size) {
  return apply_augment(image, sample_augment_params(config, seed), config, out_size);
}

ImageF32 center_crop_resize(const ImageF32& image, double crop_ratio, int out_size) {
  AugmentConfig config;
  config.crop_ratio = crop_ratio;
  return apply_augment(image, neutral_augment_params(), config, out_size);
}

}  // namespace neuroscreen
