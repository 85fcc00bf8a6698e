#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "neuroscreen/plate.hpp"
#include "neuroscreen/synth.hpp"

namespace neuroscreen {

// One image discovered on disk, keyed by (plate, well, field, channel).
struct ManifestEntry {
  std::string plate_id;
  WellAddress well;
  int field_index = 0;
  Channel channel = Channel::kCy5;
  std::filesystem::path path;
};

struct Manifest {
  std::vector<ManifestEntry> records;
  std::vector<std::string> warnings;  // unparseable filenames, one line each

  std::set<std::string> plates() const;
};

// Parses `{plate_id}_{row}{col}_f{NN}_{channel}` from a filename stem.
// plate_id may itself contain underscores; the last three tokens win.
std::optional<ManifestEntry> parse_image_filename(const std::filesystem::path& path);

// Scans root recursively for PNG files matching the naming convention.
// Throws EmptyDirectoryError when nothing parseable is found and
// DuplicateKeyError when two files share a key.
Manifest build_manifest(const std::filesystem::path& root);

Manifest filter_plates(const Manifest& manifest, const std::set<std::string>& keep);

// Plate-level train/test split.
struct PlateSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::uint64_t seed = 0;

  // Stable digest of the partition, recorded in checkpoints.
  std::string hash() const;
};

PlateSplit split_plates(const Manifest& manifest, int n_test, std::uint64_t seed);
void save_split(const PlateSplit& split, const std::filesystem::path& path);
PlateSplit load_split(const std::filesystem::path& path);

// Training label: 0 = vehicle control (0,0), 1 = Abeta (0,30).
inline constexpr int kLabelControl = 0;
inline constexpr int kLabelAbeta = 1;

struct LabeledExample {
  std::filesystem::path path;
  int label = kLabelControl;
  std::string plate_id;
  WellAddress well;
  int field_index = 0;
};

struct TrainingPairs {
  std::vector<LabeledExample> examples;
  std::vector<std::string> warnings;  // plates contributing zero of a class
};

// Selects Cy5 images of the two control regimes. Every plate in the manifest
// must have a layout; wells outside the layout raise UnassignedWellError.
TrainingPairs training_pairs(const Manifest& manifest,
                             const std::map<std::string, PlateLayout>& layouts);

// Loads `<plate dir>/layout.json` for every direct subdirectory of root.
std::map<std::string, PlateLayout> load_layouts(const std::filesystem::path& root);

}  // namespace neuroscreen
