#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "neuroscreen/plate.hpp"

namespace neuroscreen {

// Model output for one field view, P(treated with 30 uM Abeta).
struct ImageScore {
  std::string plate_id;
  WellAddress well;
  int field_index = 0;
  double score = 0.0;
};

struct WellScore {
  WellAddress well;
  double mean_score = 0.0;
  int n_fields = 0;
};

// Per-regime aggregate. Both standard deviations are population (divide-by-n):
// std_wells over the six well means, std_images over every member image score.
// The source tables print a single unlabeled std that matches neither; both
// variants are reported so the convention is explicit.
struct RegimeSummary {
  TreatmentRegime regime;
  double mean_score = 0.0;
  double std_wells = 0.0;
  double std_images = 0.0;
  int n_wells = 0;
};

enum class RegimeLabel { kUntreated, kAbetaTreated };

struct ScreeningVerdict {
  std::string compound_name;
  int compound_dose_um = 0;
  double mean_score = 0.0;
  bool protective = false;
  double threshold = 0.5;
};

struct CompoundScreenResult {
  std::string compound_name;
  std::string plate_id;
  double threshold = 0.5;
  bool controls_valid = true;  // (0,0) untreated and (0,30) treated
  std::vector<ScreeningVerdict> verdicts;  // doses 1, 3, 10 in order
};

// Mean over the field views of one well. Throws EmptyWellError /
// MixedWellsError.
WellScore score_well(std::span<const ImageScore> scores);

// Aggregates exactly the six wells of one regime. image_scores must be the
// member image scores behind those wells. Throws WrongWellCountError.
RegimeSummary summarize_regime(const TreatmentRegime& regime,
                               const std::vector<WellScore>& well_scores,
                               const std::vector<ImageScore>& image_scores);

// Dichotomizes a regime mean; scores at the threshold count as treated.
RegimeLabel classify_regime(const RegimeSummary& summary, double threshold);

// Per-dose verdicts plus control sanity. Throws MissingRegimeError when any of
// the eight regimes is absent.
CompoundScreenResult screen_compound(const std::string& compound_name,
                                     const std::string& plate_id,
                                     const std::map<TreatmentRegime, RegimeSummary>& summaries,
                                     double threshold);

// Groups image scores by well via the layout and summarizes every regime.
std::map<TreatmentRegime, RegimeSummary> summarize_plate(
    const PlateLayout& layout, const std::vector<ImageScore>& scores);

// Scores CSV: plate_id,row,col,field,score.
void write_scores_csv(const std::vector<ImageScore>& scores,
                      const std::filesystem::path& path);
std::vector<ImageScore> read_scores_csv(const std::filesystem::path& path);

// Regime-summary CSV in the source tables' layout: one column per regime,
// rows well_1..well_6, mean, std_wells, std_images.
void write_summary_csv(const PlateLayout& layout,
                       const std::map<TreatmentRegime, RegimeSummary>& summaries,
                       const std::vector<ImageScore>& scores,
                       const std::filesystem::path& path);

std::string verdicts_to_json(const CompoundScreenResult& result);

}  // namespace neuroscreen
