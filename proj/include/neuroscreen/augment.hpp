#pragma once

#include <cstdint>

#include "neuroscreen/image.hpp"

namespace neuroscreen {

// Bounds of the label-preserving training transforms. Rotation/shear/zoom
// bounds quantify the source protocol's "small" transforms; recorded here as
// configuration, not truth.
struct AugmentConfig {
  double crop_ratio = 0.875;      // crop side / input side
  double max_rotation_deg = 15.0;
  double max_shear_deg = 10.0;
  double max_zoom = 0.10;         // scale in [1-z, 1+z]
  bool hflip = true;
  bool vflip = true;
};

// One concrete draw of the transform parameters.
struct AugmentParams {
  double rotation_deg = 0.0;
  double shear_deg = 0.0;
  double zoom = 1.0;
  bool hflip = false;
  bool vflip = false;
  double crop_cx = 0.5;  // crop-window center, relative to the valid range
  double crop_cy = 0.5;
};

AugmentParams sample_augment_params(const AugmentConfig& config, std::uint64_t seed);

// All transforms at neutral values: center crop + resize only.
AugmentParams neutral_augment_params();

// Affine warp (rotation/shear/zoom about the center, bilinear, reflected
// border), then flips, then crop, then resize to out_size.
ImageF32 apply_augment(const ImageF32& image, const AugmentParams& params,
                       const AugmentConfig& config, int out_size);

// sample_augment_params + apply_augment.
ImageF32 augment(const ImageF32& image, std::uint64_t seed,
                 const AugmentConfig& config, int out_size);

// Deterministic inference path: center crop at crop_ratio, resize to out_size.
ImageF32 center_crop_resize(const ImageF32& image, double crop_ratio, int out_size);

ImageF32 flip_horizontal(const ImageF32& image);
ImageF32 flip_vertical(const ImageF32& image);
ImageF32 resize_bilinear(const ImageF32& image, int out_w, int out_h);

}  // namespace neuroscreen
