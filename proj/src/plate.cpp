#include "neuroscreen/plate.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuroscreen/errors.hpp"

namespace neuroscreen {

using nlohmann::json;

bool is_valid_row(char row) {
  return std::find(kRowLetters.begin(), kRowLetters.end(), row) != kRowLetters.end();
}

bool is_valid_column(int col) { return col >= kMinColumn && col <= kMaxColumn; }

bool is_valid_compound_dose(int dose_um) {
  return dose_um == 0 || dose_um == 1 || dose_um == 3 || dose_um == 10;
}

bool is_valid_abeta_dose(int dose_um) { return dose_um == 0 || dose_um == 30; }

WellAddress WellAddress::checked(char row, int col) {
  if (!is_valid_row(row)) {
    throw UnknownRowError("unknown plate row '" + std::string(1, row) +
                          "' (expected one of B,C,D,E,F,G,H,J)");
  }
  if (!is_valid_column(col)) {
    throw ColumnOutOfRangeError("plate column " + std::to_string(col) +
                                " out of range [2,7]");
  }
  return WellAddress{row, col};
}

WellAddress WellAddress::parse(std::string_view token) {
  if (token.size() < 2) {
    throw UnknownRowError("well address too short: '" + std::string(token) + "'");
  }
  const char row = token[0];
  int col = 0;
  for (std::size_t i = 1; i < token.size(); ++i) {
    if (token[i] < '0' || token[i] > '9') {
      throw ColumnOutOfRangeError("malformed well column in '" + std::string(token) + "'");
    }
    col = col * 10 + (token[i] - '0');
  }
  return checked(row, col);
}

TreatmentRegime TreatmentRegime::checked(int compound_dose_um, int abeta_dose_um) {
  if (!is_valid_compound_dose(compound_dose_um)) {
    throw InvalidDoseError("compound dose " + std::to_string(compound_dose_um) +
                           " uM not in {0,1,3,10}");
  }
  if (!is_valid_abeta_dose(abeta_dose_um)) {
    throw InvalidDoseError("Abeta dose " + std::to_string(abeta_dose_um) +
                           " uM not in {0,30}");
  }
  return TreatmentRegime{compound_dose_um, abeta_dose_um};
}

std::array<TreatmentRegime, kRegimeCount> all_regimes() {
  return {TreatmentRegime{0, 0},  TreatmentRegime{0, 30}, TreatmentRegime{1, 0},
          TreatmentRegime{1, 30}, TreatmentRegime{3, 0},  TreatmentRegime{3, 30},
          TreatmentRegime{10, 0}, TreatmentRegime{10, 30}};
}

PlateLayout::PlateLayout(std::string plate_id, std::string compound_name,
                         std::map<WellAddress, TreatmentRegime> assignment,
                         LayoutValidation validation)
    : plate_id_(std::move(plate_id)),
      compound_name_(std::move(compound_name)),
      assignment_(std::move(assignment)) {
  for (const auto& [well, regime] : assignment_) {
    WellAddress::checked(well.row, well.col);
    TreatmentRegime::checked(regime.compound_dose_um, regime.abeta_dose_um);
  }
  if (validation == LayoutValidation::kStrict) {
    std::map<TreatmentRegime, int> counts;
    for (const auto& [well, regime] : assignment_) counts[regime]++;
    for (const TreatmentRegime& regime : all_regimes()) {
      const int n = counts.count(regime) ? counts.at(regime) : 0;
      if (n != kWellsPerRegime) {
        throw RegimeCountMismatchError("regime " + regime.str() + " has " +
                                       std::to_string(n) + " wells, expected " +
                                       std::to_string(kWellsPerRegime));
      }
    }
    // 8 regimes x 6 wells in a std::map keyed by well implies 48 distinct wells.
  }
}

TreatmentRegime PlateLayout::regime_of(const WellAddress& well) const {
  const auto it = assignment_.find(well);
  if (it == assignment_.end()) {
    throw UnassignedWellError("well " + well.str() + " not assigned on plate " + plate_id_);
  }
  return it->second;
}

std::vector<WellAddress> PlateLayout::wells_of(const TreatmentRegime& regime) const {
  std::vector<WellAddress> out;
  for (const auto& [well, r] : assignment_) {
    if (r == regime) out.push_back(well);
  }
  return out;  // map iteration is already row-major
}

std::vector<WellAddress> PlateLayout::wells() const {
  std::vector<WellAddress> out;
  out.reserve(assignment_.size());
  for (const auto& [well, r] : assignment_) out.push_back(well);
  return out;
}

PlateLayout parse_layout(const std::string& json_text, LayoutValidation validation) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("layout document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("wells") || !doc["wells"].is_array()) {
    throw ConfigError("layout document must be an object with a 'wells' array");
  }

  std::map<WellAddress, TreatmentRegime> assignment;
  for (const auto& rec : doc["wells"]) {
    if (!rec.contains("row") || !rec.contains("col") ||
        !rec.contains("compound_dose_um") || !rec.contains("abeta_dose_um")) {
      throw ConfigError("well record must carry row, col, compound_dose_um, abeta_dose_um");
    }
    std::string row_text;
    int col = 0, compound_dose = 0, abeta_dose = 0;
    try {
      row_text = rec["row"].get<std::string>();
      col = rec["col"].get<int>();
      compound_dose = rec["compound_dose_um"].get<int>();
      abeta_dose = rec["abeta_dose_um"].get<int>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed well record: ") + e.what());
    }
    if (row_text.size() != 1) {
      throw UnknownRowError("well row must be a single letter, got '" + row_text + "'");
    }
    const WellAddress well = WellAddress::checked(row_text[0], col);
    const TreatmentRegime regime = TreatmentRegime::checked(compound_dose, abeta_dose);
    const auto [it, inserted] = assignment.emplace(well, regime);
    if (!inserted) {
      throw DuplicateWellError("well " + well.str() + " assigned twice");
    }
  }

  return PlateLayout(doc.value("plate_id", std::string{}),
                     doc.value("compound", std::string{}), std::move(assignment),
                     validation);
}

std::string serialize_layout(const PlateLayout& layout) {
  json wells = json::array();
  for (const auto& [well, regime] : layout.assignment()) {
    wells.push_back({{"row", std::string(1, well.row)},
                     {"col", well.col},
                     {"compound_dose_um", regime.compound_dose_um},
                     {"abeta_dose_um", regime.abeta_dose_um}});
  }
  const json doc = {{"plate_id", layout.plate_id()},
                    {"compound", layout.compound_name()},
                    {"wells", wells}};
  return doc.dump(2) + "\n";
}

PlateLayout load_layout(const std::filesystem::path& path, LayoutValidation validation) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_layout(buf.str(), validation);
}

void save_layout(const PlateLayout& layout, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write layout file: " + path.string());
  out << serialize_layout(layout);
}

PlateLayout default_layout(const std::string& compound_name, const std::string& plate_id) {
  struct RowPair {
    char cols234;  // row letter holding columns 2,3,4
    char cols567;  // row letter holding columns 5,6,7
    TreatmentRegime regime;
  };
  // Position map rows; the final row is the corrected one (J, not F).
  const std::array<RowPair, kRegimeCount> rows = {{
      {'B', 'C', {0, 0}},
      {'C', 'D', {0, 30}},
      {'D', 'E', {1, 0}},
      {'E', 'F', {1, 30}},
      {'F', 'G', {3, 0}},
      {'G', 'H', {3, 30}},
      {'H', 'J', {10, 0}},
      {'J', 'B', {10, 30}},
  }};

  std::map<WellAddress, TreatmentRegime> assignment;
  for (const RowPair& r : rows) {
    for (int col = 2; col <= 4; ++col) assignment.emplace(WellAddress{r.cols234, col}, r.regime);
    for (int col = 5; col <= 7; ++col) assignment.emplace(WellAddress{r.cols567, col}, r.regime);
  }
  return PlateLayout(plate_id, compound_name, std::move(assignment));
}

CompoundCatalog::CompoundCatalog(std::vector<std::string> names) : names_(std::move(names)) {
  if (static_cast<int>(names_.size()) != kCatalogSize) {
    throw CatalogSizeError("compound catalog must list exactly " +
                           std::to_string(kCatalogSize) + " names, got " +
                           std::to_string(names_.size()));
  }
}

const CompoundCatalog& CompoundCatalog::builtin() {
  static const CompoundCatalog catalog(std::vector<std::string>{
      "Amprolium",      "Bucladesine",      "Camptothecin",   "Carbimazol",
      "Cefapirin",      "Chloropyrazine",   "Chloroquine",    "Chrysenequinone",
      "Cyclopentolate", "Danazol",          "Diflunisal",     "Dihydroergotamine",
      "Doxylamine",     "Ellipticine",      "Ethisterone",    "Etidronic Acid",
      "Fulvestrant",    "Harpagoside",      "Irinotecan",     "Isocarboxazid",
      "Levobunolol",    "Menadione",        "Mephenytoin",    "Mercaptopurine",
      "Metaclopramide", "Ofloxacin",        "Orciprenaline",  "Oxolamine",
      "Oxybenzone",     "Piperlongumine",   "Puromycin",      "Raubasine",
      "Rifabutin",      "Sanguinarine",     "Terazosin",      "Thiamphenicol"});
  return catalog;
}

CompoundCatalog CompoundCatalog::from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("catalog is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("catalog must be a JSON list of names");
  std::vector<std::string> names;
  for (const auto& item : doc) names.push_back(item.get<std::string>());
  return CompoundCatalog(std::move(names));
}

CompoundCatalog CompoundCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open catalog file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string CompoundCatalog::to_json() const {
  return json(names_).dump(2) + "\n";
}

bool CompoundCatalog::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

}  // namespace neuroscreen
