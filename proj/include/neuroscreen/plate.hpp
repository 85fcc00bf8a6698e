#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace neuroscreen {

// The assay uses 8 row letters (no 'I') and columns 2..7 of a 96-well plate.
inline constexpr std::array<char, 8> kRowLetters = {'B', 'C', 'D', 'E', 'F', 'G', 'H', 'J'};
inline constexpr int kMinColumn = 2;
inline constexpr int kMaxColumn = 7;
inline constexpr int kRegimeCount = 8;
inline constexpr int kWellsPerRegime = 6;
inline constexpr int kWellsPerPlate = kRegimeCount * kWellsPerRegime;
inline constexpr int kCatalogSize = 36;

bool is_valid_row(char row);
bool is_valid_column(int col);
bool is_valid_compound_dose(int dose_um);  // {0, 1, 3, 10}
bool is_valid_abeta_dose(int dose_um);     // {0, 30}

// One well, e.g. B2. Ordering is row-major: B2 < B3 < ... < B7 < C2 < ... < J7.
struct WellAddress {
  char row = 'B';
  int col = kMinColumn;

  auto operator<=>(const WellAddress&) const = default;

  std::string str() const { return std::string(1, row) + std::to_string(col); }

  // Parses "B2".."J7"; throws UnknownRowError / ColumnOutOfRangeError.
  static WellAddress parse(std::string_view token);

  // Validating constructor helper; throws on bad row/col.
  static WellAddress checked(char row, int col);
};

// (compound dose, Abeta dose) pair in micromolar. (0,0) is the vehicle control.
struct TreatmentRegime {
  int compound_dose_um = 0;
  int abeta_dose_um = 0;

  auto operator<=>(const TreatmentRegime&) const = default;

  bool is_vehicle_control() const { return compound_dose_um == 0 && abeta_dose_um == 0; }
  bool is_abeta_control() const { return compound_dose_um == 0 && abeta_dose_um == 30; }

  std::string str() const {
    return std::to_string(compound_dose_um) + "/" + std::to_string(abeta_dose_um);
  }

  static TreatmentRegime checked(int compound_dose_um, int abeta_dose_um);
};

// The 8 regimes in canonical (compound dose, Abeta dose) order.
std::array<TreatmentRegime, kRegimeCount> all_regimes();

enum class LayoutValidation {
  kStrict,   // exactly 8 regimes x 6 wells = 48 wells
  kRelaxed,  // any well set; addresses and doses still validated
};

// Immutable after construction; safe to share across threads.
class PlateLayout {
 public:
  PlateLayout(std::string plate_id, std::string compound_name,
              std::map<WellAddress, TreatmentRegime> assignment,
              LayoutValidation validation = LayoutValidation::kStrict);

  const std::string& plate_id() const { return plate_id_; }
  const std::string& compound_name() const { return compound_name_; }
  const std::map<WellAddress, TreatmentRegime>& assignment() const { return assignment_; }

  // Throws UnassignedWellError for wells outside the assignment.
  TreatmentRegime regime_of(const WellAddress& well) const;

  // Wells of a regime in row-major order (6 for standard layouts).
  std::vector<WellAddress> wells_of(const TreatmentRegime& regime) const;

  std::vector<WellAddress> wells() const;  // all assigned wells, row-major

  bool operator==(const PlateLayout&) const = default;

 private:
  std::string plate_id_;
  std::string compound_name_;
  std::map<WellAddress, TreatmentRegime> assignment_;
};

// Layout document: JSON with keys plate_id, compound and wells
// (list of {row, col, compound_dose_um, abeta_dose_um}).
PlateLayout parse_layout(const std::string& json_text,
                         LayoutValidation validation = LayoutValidation::kStrict);
std::string serialize_layout(const PlateLayout& layout);
PlateLayout load_layout(const std::filesystem::path& path,
                        LayoutValidation validation = LayoutValidation::kStrict);
void save_layout(const PlateLayout& layout, const std::filesystem::path& path);

// The published position map with the corrected final row: the printed table
// assigns F{2,3,4} twice, so the 10/30 regime uses J{2,3,4} instead (the only
// row letter otherwise unused in columns 2-4). See tests for the literal,
// rejected variant.
PlateLayout default_layout(const std::string& compound_name, const std::string& plate_id = "");

// Ordered list of exactly 36 candidate compound names.
class CompoundCatalog {
 public:
  explicit CompoundCatalog(std::vector<std::string> names);

  static const CompoundCatalog& builtin();
  static CompoundCatalog from_json(const std::string& json_text);
  static CompoundCatalog load(const std::filesystem::path& path);
  std::string to_json() const;

  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& name) const;

 private:
  std::vector<std::string> names_;
};

}  // namespace neuroscreen
