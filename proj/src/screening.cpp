#include "neuroscreen/screening.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuroscreen/errors.hpp"

namespace neuroscreen {

using nlohmann::json;

namespace {

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Population standard deviation (divide by n).
double population_std(const std::vector<double>& values) {
  const double m = mean_of(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace

WellScore score_well(std::span<const ImageScore> scores) {
  if (scores.empty()) throw EmptyWellError("well has no image scores");
  const ImageScore& first = scores.front();
  double sum = 0.0;
  for (const ImageScore& s : scores) {
    if (s.plate_id != first.plate_id || s.well != first.well) {
      throw MixedWellsError("scores mix wells " + first.well.str() + " and " +
                            s.well.str());
    }
    sum += s.score;
  }
  return WellScore{first.well, sum / static_cast<double>(scores.size()),
                   static_cast<int>(scores.size())};
}

RegimeSummary summarize_regime(const TreatmentRegime& regime,
                               const std::vector<WellScore>& well_scores,
                               const std::vector<ImageScore>& image_scores) {
  if (static_cast<int>(well_scores.size()) != kWellsPerRegime) {
    throw WrongWellCountError("regime " + regime.str() + " has " +
                              std::to_string(well_scores.size()) +
                              " wells, expected " + std::to_string(kWellsPerRegime));
  }
  std::vector<double> well_means;
  well_means.reserve(well_scores.size());
  for (const WellScore& w : well_scores) well_means.push_back(w.mean_score);

  std::vector<double> image_values;
  image_values.reserve(image_scores.size());
  for (const ImageScore& s : image_scores) image_values.push_back(s.score);

  RegimeSummary out;
  out.regime = regime;
  out.mean_score = mean_of(well_means);
  out.std_wells = population_std(well_means);
  out.std_images = image_values.empty() ? 0.0 : population_std(image_values);
  out.n_wells = static_cast<int>(well_scores.size());
  return out;
}

RegimeLabel classify_regime(const RegimeSummary& summary, double threshold) {
  return summary.mean_score >= threshold ? RegimeLabel::kAbetaTreated
                                         : RegimeLabel::kUntreated;
}

CompoundScreenResult screen_compound(
    const std::string& compound_name, const std::string& plate_id,
    const std::map<TreatmentRegime, RegimeSummary>& summaries, double threshold) {
  for (const TreatmentRegime& regime : all_regimes()) {
    if (!summaries.count(regime)) {
      throw MissingRegimeError("regime " + regime.str() + " missing for plate " +
                               plate_id);
    }
  }

  CompoundScreenResult result;
  result.compound_name = compound_name;
  result.plate_id = plate_id;
  result.threshold = threshold;

  const bool vehicle_ok = classify_regime(summaries.at(TreatmentRegime{0, 0}),
                                          threshold) == RegimeLabel::kUntreated;
  const bool abeta_ok = classify_regime(summaries.at(TreatmentRegime{0, 30}),
                                        threshold) == RegimeLabel::kAbetaTreated;
  result.controls_valid = vehicle_ok && abeta_ok;

  for (int dose : {1, 3, 10}) {
    const RegimeSummary& summary = summaries.at(TreatmentRegime{dose, 30});
    ScreeningVerdict verdict;
    verdict.compound_name = compound_name;
    verdict.compound_dose_um = dose;
    verdict.mean_score = summary.mean_score;
    verdict.threshold = threshold;
    verdict.protective =
        classify_regime(summary, threshold) == RegimeLabel::kUntreated;
    result.verdicts.push_back(verdict);
  }
  return result;
}

std::map<TreatmentRegime, RegimeSummary> summarize_plate(
    const PlateLayout& layout, const std::vector<ImageScore>& scores) {
  std::map<WellAddress, std::vector<ImageScore>> by_well;
  for (const ImageScore& s : scores) by_well[s.well].push_back(s);

  std::map<TreatmentRegime, RegimeSummary> out;
  for (const TreatmentRegime& regime : all_regimes()) {
    std::vector<WellScore> well_scores;
    std::vector<ImageScore> members;
    for (const WellAddress& well : layout.wells_of(regime)) {
      const auto it = by_well.find(well);
      if (it == by_well.end()) continue;
      well_scores.push_back(score_well(it->second));
      members.insert(members.end(), it->second.begin(), it->second.end());
    }
    if (well_scores.empty()) continue;
    out.emplace(regime, summarize_regime(regime, well_scores, members));
  }
  return out;
}

void write_scores_csv(const std::vector<ImageScore>& scores,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scores: " + path.string());
  out << "plate_id,row,col,field,score\n";
  out.precision(17);
  for (const ImageScore& s : scores) {
    out << s.plate_id << ',' << s.well.row << ',' << s.well.col << ','
        << s.field_index << ',' << s.score << '\n';
  }
}

std::vector<ImageScore> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores: " + path.string());
  std::vector<ImageScore> scores;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t pos = line.find(','); pos != std::string::npos;
         pos = line.find(',', start)) {
      cells.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    cells.push_back(line.substr(start));
    if (cells.size() != 5) {
      throw ConfigError("malformed scores row: " + line);
    }
    ImageScore s;
    s.plate_id = cells[0];
    s.well = WellAddress::parse(cells[1] + cells[2]);
    s.field_index = std::stoi(cells[3]);
    s.score = std::stod(cells[4]);
    scores.push_back(s);
  }
  return scores;
}

void write_summary_csv(const PlateLayout& layout,
                       const std::map<TreatmentRegime, RegimeSummary>& summaries,
                       const std::vector<ImageScore>& scores,
                       const std::filesystem::path& path) {
  std::map<WellAddress, std::vector<ImageScore>> by_well;
  for (const ImageScore& s : scores) by_well[s.well].push_back(s);

  const auto regimes = all_regimes();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write summary: " + path.string());
  out.precision(6);

  out << "compound_dose_um";
  for (const auto& r : regimes) out << ',' << r.compound_dose_um;
  out << "\nabeta_dose_um";
  for (const auto& r : regimes) out << ',' << r.abeta_dose_um;
  out << '\n';

  for (int w = 0; w < kWellsPerRegime; ++w) {
    out << "well_" << (w + 1);
    for (const auto& regime : regimes) {
      out << ',';
      const auto wells = layout.wells_of(regime);
      if (w < static_cast<int>(wells.size())) {
        const auto it = by_well.find(wells[w]);
        if (it != by_well.end()) out << score_well(it->second).mean_score;
      }
    }
    out << '\n';
  }

  const auto emit_row = [&](const char* name, auto getter) {
    out << name;
    for (const auto& regime : regimes) {
      out << ',';
      const auto it = summaries.find(regime);
      if (it != summaries.end()) out << getter(it->second);
    }
    out << '\n';
  };
  emit_row("mean", [](const RegimeSummary& s) { return s.mean_score; });
  emit_row("std_wells", [](const RegimeSummary& s) { return s.std_wells; });
  emit_row("std_images", [](const RegimeSummary& s) { return s.std_images; });
}

std::string verdicts_to_json(const CompoundScreenResult& result) {
  json verdicts = json::array();
  for (const ScreeningVerdict& v : result.verdicts) {
    verdicts.push_back({{"compound_dose_um", v.compound_dose_um},
                        {"mean_score", v.mean_score},
                        {"protective", v.protective}});
  }
  const json doc = {{"compound", result.compound_name},
                    {"plate_id", result.plate_id},
                    {"threshold", result.threshold},
                    {"invalid_controls", !result.controls_valid},
                    {"verdicts", verdicts}};
  return doc.dump(2) + "\n";
}

}  // namespace neuroscreen
