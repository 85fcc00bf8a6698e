#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "neuroscreen/image.hpp"
#include "neuroscreen/screening.hpp"

namespace neuroscreen::testutil {

// Fresh scratch directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("neuroscreen_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Pixels above threshold; proxy for total rendered neurite mass.
inline double skeleton_pixel_count(const ImageF32& img, float threshold = 0.25f) {
  double n = 0.0;
  for (float p : img.px) {
    if (p > threshold) n += 1.0;
  }
  return n;
}

// Welch's t statistic for two equal-purpose samples.
inline double welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto var = [&](const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  const double ma = mean(a), mb = mean(b);
  const double va = var(a, ma), vb = var(b, mb);
  return (ma - mb) / std::sqrt(va / static_cast<double>(a.size()) +
                               vb / static_cast<double>(b.size()));
}

// Independent single-pass recomputation of the regime aggregate; the oracle
// the spec pins summarize_regime against.
struct BruteForceSummary {
  double mean = 0.0;
  double std_wells = 0.0;
  double std_images = 0.0;
};

inline BruteForceSummary brute_force_regime(
    const std::vector<std::vector<double>>& per_well_scores) {
  BruteForceSummary out;
  std::vector<double> well_means;
  std::vector<double> all;
  for (const auto& well : per_well_scores) {
    double s = 0.0;
    for (double v : well) {
      s += v;
      all.push_back(v);
    }
    well_means.push_back(s / static_cast<double>(well.size()));
  }
  const auto pop = [](const std::vector<double>& v, double* mean_out) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    if (mean_out != nullptr) *mean_out = m;
    return std::sqrt(acc / static_cast<double>(v.size()));
  };
  out.std_wells = pop(well_means, &out.mean);
  out.std_images = pop(all, nullptr);
  return out;
}

inline std::vector<ImageScore> scores_for_well(const std::string& plate,
                                               const WellAddress& well,
                                               const std::vector<double>& values) {
  std::vector<ImageScore> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({plate, well, static_cast<int>(i), values[i]});
  }
  return out;
}

}  // namespace neuroscreen::testutil
