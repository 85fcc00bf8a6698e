#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "neuroscreen/report.hpp"
#include "neuroscreen/rng.hpp"
#include "testutil.hpp"

using namespace neuroscreen;
namespace tu = neuroscreen::testutil;

TEST_CASE("score binning covers [0,1] with a closed last bin") {
  CHECK(score_bin(0.0) == 0);
  CHECK(score_bin(0.049) == 0);
  CHECK(score_bin(0.05) == 1);
  CHECK(score_bin(0.999) == 19);
  CHECK(score_bin(1.0) == 19);
}

TEST_CASE("bin_scores produces one histogram per populated well") {
  const PlateLayout layout = default_layout("X", "p");
  Rng rng(9);
  std::vector<ImageScore> scores;
  for (const WellAddress& well : layout.wells()) {
    for (int f = 0; f < 25; ++f) scores.push_back({"p", well, f, rng.uniform()});
  }
  const auto histograms = bin_scores(layout, scores);
  REQUIRE(histograms.size() == kWellsPerPlate);
  for (const WellHistogram& h : histograms) {
    const int sum = std::accumulate(h.counts.begin(), h.counts.end(), 0);
    CHECK(sum == 25);  // row sums equal per-well image counts
    CHECK(sum == h.total);
  }
}

TEST_CASE("all-zero scores collapse into the first bin") {
  const PlateLayout layout = default_layout("X", "p");
  std::vector<ImageScore> scores;
  for (const WellAddress& well : layout.wells()) {
    for (int f = 0; f < 5; ++f) scores.push_back({"p", well, f, 0.0});
  }
  for (const WellHistogram& h : bin_scores(layout, scores)) {
    CHECK(h.counts[0] == 5);
    for (int b = 1; b < kScoreHistogramBins; ++b) CHECK(h.counts[b] == 0);
  }
}

TEST_CASE("histogram grid renders an 8x6 panel sheet") {
  const PlateLayout layout = default_layout("X", "p");
  Rng rng(4);
  std::vector<ImageScore> scores;
  for (const WellAddress& well : layout.wells()) {
    for (int f = 0; f < 10; ++f) scores.push_back({"p", well, f, rng.uniform()});
  }
  const auto histograms = bin_scores(layout, scores);
  const ImageRGB grid = render_histogram_grid(layout, histograms);
  CHECK(grid.width > 6 * 100);
  CHECK(grid.height > 8 * 60);
  // white background present
  CHECK(static_cast<int>(grid.px[0]) == 255);
}

TEST_CASE("histogram CSV carries 4 key columns plus 20 bins") {
  tu::TempDir dir("hist_csv");
  const PlateLayout layout = default_layout("X", "p");
  std::vector<ImageScore> scores;
  for (const WellAddress& well : layout.wells()) {
    scores.push_back({"p", well, 0, 0.42});
  }
  const auto histograms = bin_scores(layout, scores);
  write_histogram_csv(histograms, dir.path() / "hist.csv");

  std::ifstream in(dir.path() / "hist.csv");
  std::string header;
  std::getline(in, header);
  CHECK(std::count(header.begin(), header.end(), ',') == 3 + kScoreHistogramBins);
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows++;
  }
  CHECK(rows == kWellsPerPlate);
}
