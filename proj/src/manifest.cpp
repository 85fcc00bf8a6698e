#include "neuroscreen/manifest.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuroscreen/errors.hpp"
#include "neuroscreen/rng.hpp"

namespace neuroscreen {

using nlohmann::json;

std::set<std::string> Manifest::plates() const {
  std::set<std::string> out;
  for (const ManifestEntry& rec : records) out.insert(rec.plate_id);
  return out;
}

std::optional<ManifestEntry> parse_image_filename(const std::filesystem::path& path) {
  if (path.extension() != ".png") return std::nullopt;
  const std::string stem = path.stem().string();

  std::vector<std::string> tokens;
  std::size_t start = 0;
  for (std::size_t pos = stem.find('_'); pos != std::string::npos;
       pos = stem.find('_', start)) {
    tokens.push_back(stem.substr(start, pos - start));
    start = pos + 1;
  }
  tokens.push_back(stem.substr(start));
  if (tokens.size() < 4) return std::nullopt;

  const std::string channel_token = tokens[tokens.size() - 1];
  const std::string field_token = tokens[tokens.size() - 2];
  const std::string well_token = tokens[tokens.size() - 3];

  if (field_token.size() < 2 || field_token[0] != 'f') return std::nullopt;
  int field = 0;
  for (std::size_t i = 1; i < field_token.size(); ++i) {
    if (field_token[i] < '0' || field_token[i] > '9') return std::nullopt;
    field = field * 10 + (field_token[i] - '0');
  }

  ManifestEntry entry;
  try {
    entry.well = WellAddress::parse(well_token);
    entry.channel = parse_channel(channel_token);
  } catch (const Error&) {
    return std::nullopt;
  }
  entry.field_index = field;
  entry.path = path;
  std::string plate_id;
  for (std::size_t i = 0; i + 3 < tokens.size(); ++i) {
    if (i > 0) plate_id += '_';
    plate_id += tokens[i];
  }
  entry.plate_id = plate_id;
  return entry;
}

Manifest build_manifest(const std::filesystem::path& root) {
  Manifest manifest;
  std::vector<std::filesystem::path> files;
  try {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError("cannot scan " + root.string() + ": " + e.what());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, const ManifestEntry*> seen;
  for (const auto& file : files) {
    if (file.extension() != ".png") continue;
    auto parsed = parse_image_filename(file);
    if (!parsed) {
      manifest.warnings.push_back("unrecognized image filename: " + file.string());
      continue;
    }
    manifest.records.push_back(*parsed);
  }
  for (const ManifestEntry& rec : manifest.records) {
    const std::string key = rec.plate_id + "|" + rec.well.str() + "|" +
                            std::to_string(rec.field_index) + "|" +
                            channel_name(rec.channel);
    const auto [it, inserted] = seen.emplace(key, &rec);
    if (!inserted) {
      throw DuplicateKeyError("duplicate image key " + key + " (" +
                              it->second->path.string() + " vs " + rec.path.string() + ")");
    }
  }
  if (manifest.records.empty()) {
    throw EmptyDirectoryError("no images matching the naming convention under " +
                              root.string());
  }
  return manifest;
}

Manifest filter_plates(const Manifest& manifest, const std::set<std::string>& keep) {
  Manifest out;
  out.warnings = manifest.warnings;
  for (const ManifestEntry& rec : manifest.records) {
    if (keep.count(rec.plate_id)) out.records.push_back(rec);
  }
  return out;
}

std::string PlateSplit::hash() const {
  std::string blob = "seed=" + std::to_string(seed) + ";train=";
  for (const auto& p : train) blob += p + ",";
  blob += ";test=";
  for (const auto& p : test) blob += p + ",";
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(blob)));
  return std::string(buf);
}

PlateSplit split_plates(const Manifest& manifest, int n_test, std::uint64_t seed) {
  const std::set<std::string> plate_set = manifest.plates();
  std::vector<std::string> plates(plate_set.begin(), plate_set.end());
  if (n_test < 0) throw ConfigError("n_test must be non-negative");
  if (static_cast<std::size_t>(n_test) >= plates.size()) {
    throw TooFewPlatesError("cannot hold out " + std::to_string(n_test) + " of " +
                            std::to_string(plates.size()) + " plates");
  }

  Rng rng(mix_seed(seed, fnv1a64("plate-split")));
  shuffle(plates, rng);

  PlateSplit split;
  split.seed = seed;
  split.test.assign(plates.begin(), plates.begin() + n_test);
  split.train.assign(plates.begin() + n_test, plates.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

void save_split(const PlateSplit& split, const std::filesystem::path& path) {
  const json doc = {{"train", split.train}, {"test", split.test}, {"seed", split.seed}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split file: " + path.string());
  out << doc.dump(2) << "\n";
}

PlateSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("split file is not valid JSON: " + std::string(e.what()));
  }
  PlateSplit split;
  try {
    split.train = doc.at("train").get<std::vector<std::string>>();
    split.test = doc.at("test").get<std::vector<std::string>>();
    split.seed = doc.value("seed", 0ULL);
  } catch (const json::exception& e) {
    throw ConfigError("malformed split file: " + std::string(e.what()));
  }
  return split;
}

TrainingPairs training_pairs(const Manifest& manifest,
                             const std::map<std::string, PlateLayout>& layouts) {
  TrainingPairs out;
  std::map<std::string, std::array<int, 2>> per_plate_counts;

  for (const ManifestEntry& rec : manifest.records) {
    if (rec.channel != Channel::kCy5) continue;
    const auto layout_it = layouts.find(rec.plate_id);
    if (layout_it == layouts.end()) {
      throw MissingLayoutError("no layout for plate " + rec.plate_id);
    }
    const TreatmentRegime regime = layout_it->second.regime_of(rec.well);
    int label = -1;
    if (regime.is_vehicle_control()) {
      label = kLabelControl;
    } else if (regime.is_abeta_control()) {
      label = kLabelAbeta;
    } else {
      continue;  // compound regimes are inference-only
    }
    out.examples.push_back({rec.path, label, rec.plate_id, rec.well, rec.field_index});
    per_plate_counts[rec.plate_id][label]++;
  }

  for (const auto& [plate, counts] : per_plate_counts) {
    if (counts[kLabelControl] == 0) {
      out.warnings.push_back("plate " + plate + " contributes no control examples");
    }
    if (counts[kLabelAbeta] == 0) {
      out.warnings.push_back("plate " + plate + " contributes no Abeta examples");
    }
  }
  return out;
}

std::map<std::string, PlateLayout> load_layouts(const std::filesystem::path& root) {
  std::map<std::string, PlateLayout> layouts;
  try {
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
      if (!entry.is_directory()) continue;
      const auto layout_path = entry.path() / "layout.json";
      if (!std::filesystem::exists(layout_path)) continue;
      PlateLayout layout = load_layout(layout_path);
      if (layout.plate_id() != entry.path().filename().string()) {
        throw ConfigError("layout plate_id '" + layout.plate_id() +
                          "' does not match directory " + entry.path().string());
      }
      layouts.emplace(layout.plate_id(), std::move(layout));
    }
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError("cannot scan " + root.string() + ": " + e.what());
  }
  return layouts;
}

}  // namespace neuroscreen
