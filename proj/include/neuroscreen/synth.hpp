#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "neuroscreen/image.hpp"
#include "neuroscreen/plate.hpp"

namespace neuroscreen {

// Imaging channels of the four stains. Cy5 (cytoskeleton) carries the class
// signal; the others are rendered as plain blob fields.
enum class Channel { kCy5, kDapi, kDsRed, kFitc };

inline constexpr std::array<Channel, 4> kAllChannels = {Channel::kCy5, Channel::kDapi,
                                                        Channel::kDsRed, Channel::kFitc};

std::string channel_name(Channel channel);
Channel parse_channel(std::string_view name);  // throws ConfigError

// Parameters of the deterministic generator.
struct SynthConfig {
  // Morphological separation between control and Abeta classes, in [0,1].
  double effect_size = 1.0;
  // compound name -> fraction of the Abeta effect cancelled at saturating dose.
  std::map<std::string, double> protective_map;
  // Half-saturation constant of the compound dose response, in uM.
  double dose_k_um = 3.0;
  int image_size = 256;
  int fields_per_well = 30;
  std::vector<Channel> channels{Channel::kCy5, Channel::kDapi, Channel::kDsRed,
                                Channel::kFitc};
  std::uint64_t base_seed = 0;
  int threads = 2;  // 0 = hardware concurrency

  void validate() const;  // throws ConfigError
  double protective_fraction(const std::string& compound) const;
};

// One grayscale field-view capture.
struct FieldImage {
  std::string plate_id;
  WellAddress well;
  int field_index = 0;
  Channel channel = Channel::kCy5;
  ImageF32 pixels;
};

// Effective Abeta exposure of a regime after the compound's dose response:
//   e = (abeta/30) * (1 - p * d / (d + K)),   d = compound dose.
double effective_exposure(const TreatmentRegime& regime, double protective_p,
                          double dose_k_um);

// Seed for one field image; any subset of a plate is reproducible in isolation.
std::uint64_t field_seed(std::uint64_t base_seed, const std::string& plate_id,
                         const WellAddress& well, int field_index, Channel channel);

// Renders one field view. Deterministic in (seed, parameters); the morphology
// depends on exposure and effect_size only through their product.
ImageF32 render_field(double exposure, double effect_size, Channel channel,
                      int image_size, std::uint64_t seed);

// `{plate_id}_{row}{col}_f{field:02d}_{channel}.png`
std::string field_image_filename(const std::string& plate_id, const WellAddress& well,
                                 int field_index, Channel channel);

// One manifest row for a generated image.
struct PlateImageRecord {
  std::string plate_id;
  std::string compound;
  WellAddress well;
  int field_index = 0;
  Channel channel = Channel::kCy5;
  int compound_dose_um = 0;
  int abeta_dose_um = 0;
  std::string filename;  // relative to the plate directory
};

// Renders every (well, field, channel) of the plate into out_dir and returns
// manifest rows in canonical (well row-major, field, channel) order. Rendering
// may be parallel; per-image seeds keep the output independent of scheduling.
std::vector<PlateImageRecord> generate_plate(const PlateLayout& layout,
                                             const SynthConfig& config,
                                             const std::filesystem::path& out_dir);

// Manifest CSV: plate_id, compound, row, col, field, channel, compound_dose_um,
// abeta_dose_um, path. `path_prefix` is prepended to each filename.
void write_manifest_csv(const std::vector<PlateImageRecord>& records,
                        const std::filesystem::path& csv_path,
                        const std::string& path_prefix = "");

}  // namespace neuroscreen
