#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "neuroscreen/image.hpp"
#include "neuroscreen/plate.hpp"
#include "neuroscreen/screening.hpp"

namespace neuroscreen {

// 20 uniform bins on [0,1]; the last bin is closed at 1.
inline constexpr int kScoreHistogramBins = 20;

struct WellHistogram {
  WellAddress well;
  TreatmentRegime regime;
  std::array<int, kScoreHistogramBins> counts{};
  int total = 0;
};

int score_bin(double score);

// One histogram per assigned well with any scores; ordered by regime
// (canonical order), then well row-major. Wells without scores are skipped.
std::vector<WellHistogram> bin_scores(const PlateLayout& layout,
                                      const std::vector<ImageScore>& scores);

// Panel grid mirroring the per-well score-distribution figures: one row per
// regime, six columns of replicate wells.
ImageRGB render_histogram_grid(const PlateLayout& layout,
                               const std::vector<WellHistogram>& histograms);

// CSV rows: compound_dose_um,abeta_dose_um,row,col,bin_00..bin_19.
void write_histogram_csv(const std::vector<WellHistogram>& histograms,
                         const std::filesystem::path& path);

}  // namespace neuroscreen
