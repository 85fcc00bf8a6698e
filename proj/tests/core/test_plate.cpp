#include <doctest.h>

#include <set>

#include "neuroscreen/errors.hpp"
#include "neuroscreen/plate.hpp"

using namespace neuroscreen;

namespace {

// Layout document transcribing the published position map. `corrected` swaps
// the final row's duplicated F{2,3,4} for J{2,3,4}.
std::string position_map_document(bool corrected) {
  struct Row {
    char c234, c567;
    int compound, abeta;
  };
  const std::vector<Row> rows = {
      {'B', 'C', 0, 0},  {'C', 'D', 0, 30}, {'D', 'E', 1, 0},
      {'E', 'F', 1, 30}, {'F', 'G', 3, 0},  {'G', 'H', 3, 30},
      {'H', 'J', 10, 0}, {corrected ? 'J' : 'F', 'B', 10, 30},
  };
  std::string wells;
  for (const Row& r : rows) {
    for (int col = 2; col <= 7; ++col) {
      const char row_letter = col <= 4 ? r.c234 : r.c567;
      if (!wells.empty()) wells += ",";
      wells += "{\"row\":\"" + std::string(1, row_letter) +
               "\",\"col\":" + std::to_string(col) +
               ",\"compound_dose_um\":" + std::to_string(r.compound) +
               ",\"abeta_dose_um\":" + std::to_string(r.abeta) + "}";
    }
  }
  return "{\"plate_id\":\"p1\",\"compound\":\"Raubasine\",\"wells\":[" + wells + "]}";
}

}  // namespace

TEST_CASE("well addresses validate and order row-major") {
  CHECK(WellAddress::parse("B2") == WellAddress{'B', 2});
  CHECK(WellAddress::parse("J7") == WellAddress{'J', 7});
  CHECK(WellAddress{'B', 7} < WellAddress{'C', 2});
  CHECK(WellAddress{'H', 4} < WellAddress{'J', 2});
  CHECK_THROWS_AS(WellAddress::parse("I3"), UnknownRowError);
  CHECK_THROWS_AS(WellAddress::parse("A2"), UnknownRowError);
  CHECK_THROWS_AS(WellAddress::parse("B1"), ColumnOutOfRangeError);
  CHECK_THROWS_AS(WellAddress::parse("B8"), ColumnOutOfRangeError);
  CHECK_THROWS_AS(WellAddress::parse("B"), UnknownRowError);
  CHECK_THROWS_AS(WellAddress::parse("Bx"), ColumnOutOfRangeError);
}

TEST_CASE("treatment regimes restrict doses") {
  CHECK_NOTHROW(TreatmentRegime::checked(0, 0));
  CHECK_NOTHROW(TreatmentRegime::checked(10, 30));
  CHECK_THROWS_AS(TreatmentRegime::checked(2, 0), InvalidDoseError);
  CHECK_THROWS_AS(TreatmentRegime::checked(0, 15), InvalidDoseError);
  CHECK(TreatmentRegime{0, 0}.is_vehicle_control());
  CHECK(TreatmentRegime{0, 30}.is_abeta_control());
  CHECK_FALSE(TreatmentRegime{1, 30}.is_vehicle_control());
}

TEST_CASE("default layout matches the position map") {
  const PlateLayout layout = default_layout("Raubasine");

  CHECK(layout.regime_of(WellAddress{'B', 2}) == TreatmentRegime{0, 0});
  CHECK(layout.regime_of(WellAddress{'C', 6}) == TreatmentRegime{0, 0});
  CHECK(layout.regime_of(WellAddress{'D', 5}) == TreatmentRegime{0, 30});
  CHECK(layout.regime_of(WellAddress{'J', 3}) == TreatmentRegime{10, 30});
  CHECK(layout.regime_of(WellAddress{'B', 6}) == TreatmentRegime{10, 30});
  CHECK_THROWS_AS(layout.regime_of(WellAddress{'A', 1}), UnassignedWellError);

  const auto wells_1_0 = layout.wells_of(TreatmentRegime{1, 0});
  const std::vector<WellAddress> expected_1_0 = {{'D', 2}, {'D', 3}, {'D', 4},
                                                 {'E', 5}, {'E', 6}, {'E', 7}};
  CHECK(wells_1_0 == expected_1_0);

  const auto wells_3_30 = layout.wells_of(TreatmentRegime{3, 30});
  const std::vector<WellAddress> expected_3_30 = {{'G', 2}, {'G', 3}, {'G', 4},
                                                  {'H', 5}, {'H', 6}, {'H', 7}};
  CHECK(wells_3_30 == expected_3_30);
}

TEST_CASE("partition: 8 regimes x 6 wells cover 48 distinct wells") {
  const PlateLayout layout = default_layout("Amprolium");
  std::set<WellAddress> seen;
  for (const TreatmentRegime& regime : all_regimes()) {
    const auto wells = layout.wells_of(regime);
    REQUIRE(wells.size() == kWellsPerRegime);
    for (std::size_t i = 0; i < wells.size(); ++i) {
      seen.insert(wells[i]);
      CHECK(layout.regime_of(wells[i]) == regime);
    }
  }
  CHECK(seen.size() == kWellsPerPlate);
}

TEST_CASE("layouts are compound-independent") {
  const PlateLayout a = default_layout("Raubasine");
  const PlateLayout b = default_layout("Thiamphenicol");
  CHECK(a.assignment() == b.assignment());
  CHECK(a.plate_id() == b.plate_id());
  CHECK(a.compound_name() != b.compound_name());
}

TEST_CASE("parse_layout accepts the corrected document") {
  const PlateLayout layout = parse_layout(position_map_document(/*corrected=*/true));
  CHECK(layout.assignment().size() == kWellsPerPlate);
  CHECK(layout.compound_name() == "Raubasine");
  CHECK(layout.assignment() == default_layout("Raubasine").assignment());
}

TEST_CASE("parse_layout rejects the literal position map (duplicate F wells)") {
  try {
    parse_layout(position_map_document(/*corrected=*/false));
    FAIL("expected DuplicateWellError");
  } catch (const DuplicateWellError& e) {
    CHECK(std::string(e.what()).find("F2") != std::string::npos);
  }
}

TEST_CASE("parse_layout rejects an empty document") {
  CHECK_THROWS_AS(parse_layout(R"({"plate_id":"p","compound":"c","wells":[]})"),
                  RegimeCountMismatchError);
}

TEST_CASE("parse_layout surfaces bad rows, columns and doses") {
  const auto doc = [](const std::string& well_record) {
    return R"({"plate_id":"p","compound":"c","wells":[)" + well_record + "]}";
  };
  CHECK_THROWS_AS(
      parse_layout(doc(R"({"row":"I","col":2,"compound_dose_um":0,"abeta_dose_um":0})")),
      UnknownRowError);
  CHECK_THROWS_AS(
      parse_layout(doc(R"({"row":"B","col":9,"compound_dose_um":0,"abeta_dose_um":0})")),
      ColumnOutOfRangeError);
  CHECK_THROWS_AS(
      parse_layout(doc(R"({"row":"B","col":2,"compound_dose_um":5,"abeta_dose_um":0})")),
      InvalidDoseError);
  CHECK_THROWS_AS(parse_layout("not json"), ConfigError);
}

TEST_CASE("relaxed validation admits partial designs but still checks wells") {
  const std::string doc =
      R"({"plate_id":"p","compound":"c","wells":[
          {"row":"B","col":2,"compound_dose_um":0,"abeta_dose_um":0}]})";
  CHECK_THROWS_AS(parse_layout(doc), RegimeCountMismatchError);
  const PlateLayout relaxed = parse_layout(doc, LayoutValidation::kRelaxed);
  CHECK(relaxed.assignment().size() == 1);
}

TEST_CASE("serialize/parse round-trips any valid layout") {
  for (const char* compound : {"Raubasine", "Thiamphenicol", "Danazol"}) {
    const PlateLayout layout = default_layout(compound, std::string("plate_") + compound);
    const PlateLayout reparsed = parse_layout(serialize_layout(layout));
    CHECK(reparsed == layout);
  }
}

TEST_CASE("compound catalog carries exactly 36 names") {
  const CompoundCatalog& catalog = CompoundCatalog::builtin();
  CHECK(catalog.names().size() == kCatalogSize);
  CHECK(catalog.names().front() == "Amprolium");
  CHECK(catalog.names().back() == "Thiamphenicol");
  CHECK(catalog.contains("Raubasine"));
  CHECK(catalog.contains("Etidronic Acid"));
  CHECK_FALSE(catalog.contains("Aspirin"));

  const CompoundCatalog reparsed = CompoundCatalog::from_json(catalog.to_json());
  CHECK(reparsed.names() == catalog.names());

  CHECK_THROWS_AS(CompoundCatalog(std::vector<std::string>{"just", "three", "names"}),
                  CatalogSizeError);
}
