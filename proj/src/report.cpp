#include "neuroscreen/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "neuroscreen/errors.hpp"

namespace neuroscreen {
namespace {

// 3x5 bitmap glyphs, one row per entry, 3 low bits used.
struct Glyph {
  char ch;
  std::array<std::uint8_t, 5> rows;
};

constexpr std::array<Glyph, 19> kGlyphs = {{
    {'0', {0b111, 0b101, 0b101, 0b101, 0b111}},
    {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
    {'2', {0b111, 0b001, 0b111, 0b100, 0b111}},
    {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
    {'4', {0b101, 0b101, 0b111, 0b001, 0b001}},
    {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
    {'6', {0b111, 0b100, 0b111, 0b101, 0b111}},
    {'7', {0b111, 0b001, 0b001, 0b010, 0b010}},
    {'8', {0b111, 0b101, 0b111, 0b101, 0b111}},
    {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
    {'/', {0b001, 0b001, 0b010, 0b100, 0b100}},
    {'B', {0b110, 0b101, 0b110, 0b101, 0b110}},
    {'C', {0b111, 0b100, 0b100, 0b100, 0b111}},
    {'D', {0b110, 0b101, 0b101, 0b101, 0b110}},
    {'E', {0b111, 0b100, 0b110, 0b100, 0b111}},
    {'F', {0b111, 0b100, 0b110, 0b100, 0b100}},
    {'G', {0b111, 0b100, 0b101, 0b101, 0b111}},
    {'H', {0b101, 0b101, 0b111, 0b101, 0b101}},
    {'J', {0b111, 0b001, 0b001, 0b101, 0b111}},
}};

void fill_rect(ImageRGB& img, int x0, int y0, int w, int h, std::uint8_t r,
               std::uint8_t g, std::uint8_t b) {
  const int x1 = std::min(img.width, x0 + w);
  const int y1 = std::min(img.height, y0 + h);
  for (int y = std::max(0, y0); y < y1; ++y) {
    for (int x = std::max(0, x0); x < x1; ++x) {
      std::uint8_t* px = img.at(x, y);
      px[0] = r;
      px[1] = g;
      px[2] = b;
    }
  }
}

void draw_text(ImageRGB& img, int x, int y, const std::string& text, int scale,
               std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  int cx = x;
  for (char ch : text) {
    for (const Glyph& glyph : kGlyphs) {
      if (glyph.ch != ch) continue;
      for (int gy = 0; gy < 5; ++gy) {
        for (int gx = 0; gx < 3; ++gx) {
          if (glyph.rows[static_cast<std::size_t>(gy)] & (0b100 >> gx)) {
            fill_rect(img, cx + gx * scale, y + gy * scale, scale, scale, r, g, b);
          }
        }
      }
      break;
    }
    cx += 4 * scale;
  }
}

}  // namespace

int score_bin(double score) {
  score = std::clamp(score, 0.0, 1.0);
  const int bin = static_cast<int>(score * kScoreHistogramBins);
  return std::min(bin, kScoreHistogramBins - 1);
}

std::vector<WellHistogram> bin_scores(const PlateLayout& layout,
                                      const std::vector<ImageScore>& scores) {
  std::map<WellAddress, WellHistogram> by_well;
  for (const ImageScore& s : scores) {
    auto it = by_well.find(s.well);
    if (it == by_well.end()) {
      WellHistogram h;
      h.well = s.well;
      h.regime = layout.regime_of(s.well);
      it = by_well.emplace(s.well, h).first;
    }
    it->second.counts[static_cast<std::size_t>(score_bin(s.score))]++;
    it->second.total++;
  }

  std::vector<WellHistogram> out;
  for (const TreatmentRegime& regime : all_regimes()) {
    for (const WellAddress& well : layout.wells_of(regime)) {
      const auto it = by_well.find(well);
      if (it != by_well.end()) out.push_back(it->second);
    }
  }
  return out;
}

ImageRGB render_histogram_grid(const PlateLayout& layout,
                               const std::vector<WellHistogram>& histograms) {
  constexpr int kPanelW = 110, kPanelH = 70, kGap = 6;
  constexpr int kHeaderW = 52, kMargin = 10;
  const auto regimes = all_regimes();

  const int width = kHeaderW + kWellsPerRegime * (kPanelW + kGap) + kMargin;
  const int height = kMargin + kRegimeCount * (kPanelH + kGap) + kMargin;
  ImageRGB img(width, height);
  fill_rect(img, 0, 0, width, height, 255, 255, 255);

  std::map<WellAddress, const WellHistogram*> by_well;
  for (const WellHistogram& h : histograms) by_well.emplace(h.well, &h);

  for (int r = 0; r < kRegimeCount; ++r) {
    const TreatmentRegime& regime = regimes[static_cast<std::size_t>(r)];
    const int y0 = kMargin + r * (kPanelH + kGap);
    draw_text(img, kMargin, y0 + kPanelH / 2 - 5, regime.str(), 2, 30, 30, 30);

    const auto wells = layout.wells_of(regime);
    for (int c = 0; c < kWellsPerRegime && c < static_cast<int>(wells.size()); ++c) {
      const int x0 = kHeaderW + c * (kPanelW + kGap);
      fill_rect(img, x0, y0, kPanelW, kPanelH, 245, 245, 245);
      // panel border
      fill_rect(img, x0, y0, kPanelW, 1, 160, 160, 160);
      fill_rect(img, x0, y0 + kPanelH - 1, kPanelW, 1, 160, 160, 160);
      fill_rect(img, x0, y0, 1, kPanelH, 160, 160, 160);
      fill_rect(img, x0 + kPanelW - 1, y0, 1, kPanelH, 160, 160, 160);

      const auto it = by_well.find(wells[static_cast<std::size_t>(c)]);
      if (it != by_well.end()) {
        const WellHistogram& h = *it->second;
        const int max_count = *std::max_element(h.counts.begin(), h.counts.end());
        if (max_count > 0) {
          const int plot_h = kPanelH - 12;
          for (int bin = 0; bin < kScoreHistogramBins; ++bin) {
            const int bar_h = static_cast<int>(std::lround(
                static_cast<double>(h.counts[static_cast<std::size_t>(bin)]) /
                max_count * plot_h));
            if (bar_h > 0) {
              fill_rect(img, x0 + 5 + bin * 5, y0 + kPanelH - 4 - bar_h, 4, bar_h,
                        58, 95, 205);
            }
          }
        }
      }
      draw_text(img, x0 + 4, y0 + 3, wells[static_cast<std::size_t>(c)].str(), 1,
                90, 90, 90);
    }
  }
  return img;
}

void write_histogram_csv(const std::vector<WellHistogram>& histograms,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write histogram CSV: " + path.string());
  out << "compound_dose_um,abeta_dose_um,row,col";
  for (int b = 0; b < kScoreHistogramBins; ++b) {
    out << ",bin_" << (b < 10 ? "0" : "") << b;
  }
  out << '\n';
  for (const WellHistogram& h : histograms) {
    out << h.regime.compound_dose_um << ',' << h.regime.abeta_dose_um << ','
        << h.well.row << ',' << h.well.col;
    for (int count : h.counts) out << ',' << count;
    out << '\n';
  }
}

}  // namespace neuroscreen
