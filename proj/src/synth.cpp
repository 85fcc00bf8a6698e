#include "neuroscreen/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "neuroscreen/errors.hpp"
#include "neuroscreen/rng.hpp"

namespace neuroscreen {
namespace {

constexpr double kPi = 3.14159265358979323846;

void add_gaussian_blob(ImageF32& img, double cx, double cy, double sigma_x,
                       double sigma_y, double angle, double amp) {
  const double reach = 3.0 * std::max(sigma_x, sigma_y);
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + reach)));
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double u = ca * dx + sa * dy;
      const double v = -sa * dx + ca * dy;
      const double q = (u * u) / (2.0 * sigma_x * sigma_x) +
                       (v * v) / (2.0 * sigma_y * sigma_y);
      if (q < 9.0) {
        img.at(x, y) += static_cast<float>(amp * std::exp(-q));
      }
    }
  }
}

// Anti-aliased thick segment: coverage falls off linearly past width/2.
void add_segment(ImageF32& img, double x0, double y0, double x1, double y1,
                 double width, double amp) {
  const double margin = width / 2.0 + 1.0;
  const int bx0 = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - margin)));
  const int bx1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(x0, x1) + margin)));
  const int by0 = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - margin)));
  const int by1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(y0, y1) + margin)));
  const double vx = x1 - x0, vy = y1 - y0;
  const double len2 = vx * vx + vy * vy;
  for (int y = by0; y <= by1; ++y) {
    for (int x = bx0; x <= bx1; ++x) {
      double t = 0.0;
      if (len2 > 0.0) {
        t = std::clamp(((x - x0) * vx + (y - y0) * vy) / len2, 0.0, 1.0);
      }
      const double dx = x - (x0 + t * vx);
      const double dy = y - (y0 + t * vy);
      const double d = std::sqrt(dx * dx + dy * dy);
      const double cov = std::clamp(width / 2.0 + 0.5 - d, 0.0, 1.0);
      if (cov > 0.0) img.at(x, y) += static_cast<float>(amp * cov);
    }
  }
}

void add_background(ImageF32& img, Rng& rng, double base_lo, double base_hi) {
  const double b0 = rng.uniform(base_lo, base_hi);
  const double bx = rng.uniform(-0.03, 0.03);
  const double by = rng.uniform(-0.03, 0.03);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double u = static_cast<double>(x) / img.width - 0.5;
      const double v = static_cast<double>(y) / img.height - 0.5;
      img.at(x, y) += static_cast<float>(b0 + bx * u + by * v);
    }
  }
}

// Read noise plus signal-dependent shot noise, folded into one draw.
void add_sensor_noise(ImageF32& img, Rng& rng) {
  constexpr double kReadSigma = 0.012;
  constexpr double kShotGain = 0.0025;  // variance per unit signal
  for (float& p : img.px) {
    const double v = std::max(0.0, static_cast<double>(p));
    const double sigma = std::sqrt(kReadSigma * kReadSigma + kShotGain * v);
    p += static_cast<float>(rng.normal(0.0, sigma));
  }
}

void clamp_unit(ImageF32& img) {
  for (float& p : img.px) p = std::clamp(p, 0.0f, 1.0f);
}

struct Walker {
  double x, y, angle;
  int depth;
  int steps_left;
};

// Branching random-walk neurite trees around bright somas. Severity reduces
// the segment budget and branching rate and opens beading gaps.
void render_cy5(ImageF32& img, Rng& rng, double severity, double scale) {
  add_background(img, rng, 0.05, 0.08);

  const int n_somas = 6 + rng.below_int(4);
  for (int s = 0; s < n_somas; ++s) {
    const double cx = rng.uniform(0.08, 0.92) * img.width;
    const double cy = rng.uniform(0.08, 0.92) * img.height;
    const double radius = std::clamp(rng.normal(4.6, 0.7), 3.0, 7.0) * scale;
    add_gaussian_blob(img, cx, cy, radius / 1.7, radius / 1.7, 0.0,
                      rng.uniform(0.75, 0.95));

    const int n_neurites = 3 + rng.below_int(3);
    int budget = static_cast<int>(
        std::lround((140.0 + rng.below_int(50)) * (1.0 - 0.62 * severity)));
    const double branch_p = 0.040 * (1.0 - 0.75 * severity);
    const double tree_amp = std::clamp(rng.normal(0.50, 0.07), 0.30, 0.75);
    const double width = std::clamp(rng.normal(1.5, 0.15), 1.0, 2.2) * scale;

    std::vector<Walker> walkers;
    for (int n = 0; n < n_neurites; ++n) {
      const double a = rng.uniform(0.0, 2.0 * kPi);
      walkers.push_back({cx + std::cos(a) * radius * 0.8,
                         cy + std::sin(a) * radius * 0.8, a, 0,
                         40 + rng.below_int(30)});
    }

    while (!walkers.empty() && budget > 0) {
      Walker w = walkers.back();
      walkers.pop_back();
      while (w.steps_left-- > 0 && budget > 0) {
        --budget;
        const double step = std::clamp(rng.normal(3.2, 0.5), 1.8, 5.0) * scale;
        w.angle += rng.normal(0.0, 0.22);
        const double nx = w.x + std::cos(w.angle) * step;
        const double ny = w.y + std::sin(w.angle) * step;
        const bool gap = rng.bernoulli(0.45 * severity);
        if (!gap) {
          add_segment(img, w.x, w.y, nx, ny, width,
                      tree_amp * (1.0 - 0.03 * w.depth));
        } else if (rng.bernoulli(0.5)) {
          // Fragmentation bead at the break point.
          add_gaussian_blob(img, w.x, w.y, 0.9 * scale, 0.9 * scale, 0.0, 0.35);
        }
        w.x = nx;
        w.y = ny;
        if (w.x < 2.0 || w.y < 2.0 || w.x > img.width - 3.0 || w.y > img.height - 3.0) {
          break;
        }
        if (w.depth < 4 && rng.bernoulli(branch_p)) {
          Walker child = w;
          child.depth = w.depth + 1;
          child.steps_left = 25 + rng.below_int(20);
          child.angle += (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.normal(0.7, 0.15);
          walkers.push_back(child);
        }
      }
    }
  }
}

void render_dapi(ImageF32& img, Rng& rng, double scale) {
  add_background(img, rng, 0.02, 0.04);
  const int n = 20 + rng.below_int(15);
  for (int i = 0; i < n; ++i) {
    const double cx = rng.uniform(0.04, 0.96) * img.width;
    const double cy = rng.uniform(0.04, 0.96) * img.height;
    const double sa = std::clamp(rng.normal(5.5, 0.8), 3.5, 8.0) * scale;
    const double sb = sa * rng.uniform(0.7, 1.0);
    add_gaussian_blob(img, cx, cy, sa, sb, rng.uniform(0.0, kPi),
                      rng.uniform(0.35, 0.75));
  }
}

void render_puncta(ImageF32& img, Rng& rng, double scale) {
  add_background(img, rng, 0.03, 0.05);
  const int n = 180 + rng.below_int(120);
  for (int i = 0; i < n; ++i) {
    const double cx = rng.uniform(0.02, 0.98) * img.width;
    const double cy = rng.uniform(0.02, 0.98) * img.height;
    const double sigma = std::clamp(rng.normal(0.9, 0.2), 0.6, 1.6) * scale;
    add_gaussian_blob(img, cx, cy, sigma, sigma, 0.0, rng.uniform(0.2, 0.8));
  }
}

}  // namespace

std::string channel_name(Channel channel) {
  switch (channel) {
    case Channel::kCy5: return "Cy5";
    case Channel::kDapi: return "DAPI";
    case Channel::kDsRed: return "dsRed";
    case Channel::kFitc: return "FITC";
  }
  return "unknown";
}

Channel parse_channel(std::string_view name) {
  for (Channel c : kAllChannels) {
    if (channel_name(c) == name) return c;
  }
  throw ConfigError("unknown channel '" + std::string(name) +
                    "' (expected Cy5, DAPI, dsRed or FITC)");
}

void SynthConfig::validate() const {
  if (effect_size < 0.0 || effect_size > 1.0) {
    throw ConfigError("effect_size must be in [0,1]");
  }
  for (const auto& [name, p] : protective_map) {
    if (p < 0.0 || p > 1.0) {
      throw ConfigError("protective fraction for '" + name + "' must be in [0,1]");
    }
  }
  if (dose_k_um <= 0.0) throw ConfigError("dose_k_um must be positive");
  if (image_size < 64) throw ConfigError("image_size must be at least 64");
  if (fields_per_well < 1) throw ConfigError("fields_per_well must be at least 1");
  if (channels.empty()) throw ConfigError("at least one channel required");
}

double SynthConfig::protective_fraction(const std::string& compound) const {
  const auto it = protective_map.find(compound);
  return it == protective_map.end() ? 0.0 : it->second;
}

double effective_exposure(const TreatmentRegime& regime, double protective_p,
                          double dose_k_um) {
  const double d = regime.compound_dose_um;
  const double rescue = protective_p * d / (d + dose_k_um);
  return (regime.abeta_dose_um / 30.0) * (1.0 - rescue);
}

std::uint64_t field_seed(std::uint64_t base_seed, const std::string& plate_id,
                         const WellAddress& well, int field_index, Channel channel) {
  const std::string key = plate_id + "|" + well.str() + "|f" +
                          std::to_string(field_index) + "|" + channel_name(channel);
  return mix_seed(base_seed, fnv1a64(key));
}

ImageF32 render_field(double exposure, double effect_size, Channel channel,
                      int image_size, std::uint64_t seed) {
  const double severity = std::clamp(exposure * effect_size, 0.0, 1.0);
  const double scale = image_size / 256.0;
  ImageF32 img(image_size, image_size);
  Rng rng(seed);
  switch (channel) {
    case Channel::kCy5: render_cy5(img, rng, severity, scale); break;
    case Channel::kDapi: render_dapi(img, rng, scale); break;
    case Channel::kDsRed:
    case Channel::kFitc: render_puncta(img, rng, scale); break;
  }
  add_sensor_noise(img, rng);
  clamp_unit(img);
  return img;
}

std::string field_image_filename(const std::string& plate_id, const WellAddress& well,
                                 int field_index, Channel channel) {
  char field_part[8];
  std::snprintf(field_part, sizeof(field_part), "f%02d", field_index);
  return plate_id + "_" + well.str() + "_" + field_part + "_" +
         channel_name(channel) + ".png";
}

std::vector<PlateImageRecord> generate_plate(const PlateLayout& layout,
                                             const SynthConfig& config,
                                             const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string());

  const double p = config.protective_fraction(layout.compound_name());

  std::vector<PlateImageRecord> records;
  for (const WellAddress& well : layout.wells()) {
    const TreatmentRegime regime = layout.regime_of(well);
    for (int field = 0; field < config.fields_per_well; ++field) {
      for (Channel channel : config.channels) {
        records.push_back({layout.plate_id(), layout.compound_name(), well, field,
                           channel, regime.compound_dose_um, regime.abeta_dose_um,
                           field_image_filename(layout.plate_id(), well, field, channel)});
      }
    }
  }

  const int n_threads =
      config.threads > 0 ? config.threads
                         : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        const PlateImageRecord& rec = records[i];
        const TreatmentRegime regime{rec.compound_dose_um, rec.abeta_dose_um};
        const double exposure = effective_exposure(regime, p, config.dose_k_um);
        const ImageF32 img =
            render_field(exposure, config.effect_size, rec.channel, config.image_size,
                         field_seed(config.base_seed, rec.plate_id, rec.well,
                                    rec.field_index, rec.channel));
        write_png_gray16(img, out_dir / rec.filename);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(records.size());
        return;
      }
    }
  };

  if (n_threads <= 1 || records.size() < 2) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

void write_manifest_csv(const std::vector<PlateImageRecord>& records,
                        const std::filesystem::path& csv_path,
                        const std::string& path_prefix) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write manifest: " + csv_path.string());
  out << "plate_id,compound,row,col,field,channel,compound_dose_um,abeta_dose_um,path\n";
  for (const PlateImageRecord& rec : records) {
    out << rec.plate_id << ',' << rec.compound << ',' << rec.well.row << ','
        << rec.well.col << ',' << rec.field_index << ',' << channel_name(rec.channel)
        << ',' << rec.compound_dose_um << ',' << rec.abeta_dose_um << ','
        << path_prefix << rec.filename << '\n';
  }
}

}  // namespace neuroscreen
