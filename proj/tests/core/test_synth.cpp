#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "neuroscreen/errors.hpp"
#include "neuroscreen/synth.hpp"
#include "testutil.hpp"

using namespace neuroscreen;
namespace tu = neuroscreen::testutil;

namespace {

// Two-sided critical value of t at alpha = 0.01, df ~ 198.
constexpr double kTCritical001 = 2.601;

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("effective exposure follows the saturating dose response") {
  CHECK(effective_exposure(TreatmentRegime{0, 0}, 0.7, 3.0) == doctest::Approx(0.0));
  CHECK(effective_exposure(TreatmentRegime{0, 30}, 0.7, 3.0) == doctest::Approx(1.0));
  CHECK(effective_exposure(TreatmentRegime{3, 30}, 1.0, 3.0) == doctest::Approx(0.5));
  CHECK(effective_exposure(TreatmentRegime{10, 30}, 1.0, 1.0) ==
        doctest::Approx(1.0 - 10.0 / 11.0));
}

TEST_CASE("effective exposure is monotone in p, dose and Abeta") {
  const double k = 3.0;
  for (int dose : {0, 1, 3, 10}) {
    double prev = 2.0;
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double e = effective_exposure(TreatmentRegime{dose, 30}, p, k);
      CHECK(e <= prev + 1e-12);  // non-increasing in p
      prev = e;
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
    }
  }
  for (double p : {0.0, 0.5, 1.0}) {
    double prev = 2.0;
    for (int dose : {0, 1, 3, 10}) {
      const double e = effective_exposure(TreatmentRegime{dose, 30}, p, k);
      CHECK(e <= prev + 1e-12);  // non-increasing in compound dose
      prev = e;
      CHECK(e >= effective_exposure(TreatmentRegime{dose, 0}, p, k));  // Abeta up
    }
  }
}

TEST_CASE("rendering is deterministic and depends only on exposure x effect") {
  const auto a = render_field(0.0, 1.0, Channel::kCy5, 128, 42);
  const auto b = render_field(1.0, 0.0, Channel::kCy5, 128, 42);
  const auto c = render_field(0.0, 0.37, Channel::kCy5, 128, 42);
  CHECK(a.px == b.px);  // severity 0 either way
  CHECK(a.px == c.px);
  const auto d = render_field(0.5, 1.0, Channel::kCy5, 128, 42);
  const auto e = render_field(1.0, 0.5, Channel::kCy5, 128, 42);
  CHECK(d.px == e.px);  // equal products render identically
  CHECK(a.px != d.px);
}

TEST_CASE("effect_size 0 leaves the two classes indistinguishable") {
  const int n = 100;
  std::vector<double> control_mean, abeta_mean, control_skel, abeta_skel;
  for (int s = 0; s < n; ++s) {
    const auto control = render_field(0.0, 0.0, Channel::kCy5, 128, 5000 + s);
    const auto abeta = render_field(1.0, 0.0, Channel::kCy5, 128, 9000 + s);
    double mc = 0.0, ma = 0.0;
    for (float p : control.px) mc += p;
    for (float p : abeta.px) ma += p;
    control_mean.push_back(mc / control.px.size());
    abeta_mean.push_back(ma / abeta.px.size());
    control_skel.push_back(tu::skeleton_pixel_count(control));
    abeta_skel.push_back(tu::skeleton_pixel_count(abeta));
  }
  CHECK(std::fabs(tu::welch_t(control_mean, abeta_mean)) < kTCritical001);
  CHECK(std::fabs(tu::welch_t(control_skel, abeta_skel)) < kTCritical001);
}

TEST_CASE("effect_size 1 cuts the skeleton mass below 60%") {
  const int n = 100;
  double control = 0.0, abeta = 0.0;
  for (int s = 0; s < n; ++s) {
    control += tu::skeleton_pixel_count(render_field(0.0, 1.0, Channel::kCy5, 256, 100 + s));
    abeta += tu::skeleton_pixel_count(render_field(1.0, 1.0, Channel::kCy5, 256, 100 + s));
  }
  CHECK(abeta / control < 0.6);
}

TEST_CASE("ensemble skeleton mass is non-increasing in exposure") {
  const int n = 100;
  double prev = 1e18;
  for (double exposure : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    double sum = 0.0;
    for (int s = 0; s < n; ++s) {
      sum += tu::skeleton_pixel_count(render_field(exposure, 1.0, Channel::kCy5, 128, 300 + s));
    }
    CHECK(sum <= prev);
    prev = sum;
  }
}

TEST_CASE("channel names round-trip and unknown channels are rejected") {
  for (Channel c : kAllChannels) CHECK(parse_channel(channel_name(c)) == c);
  CHECK_THROWS_AS(parse_channel("GFP"), ConfigError);
}

TEST_CASE("synth config validation") {
  SynthConfig config;
  CHECK_NOTHROW(config.validate());
  config.effect_size = 1.5;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.effect_size = 1.0;
  config.image_size = 32;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.image_size = 64;
  config.fields_per_well = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.fields_per_well = 1;
  config.protective_map["X"] = -0.1;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("generate_plate emits wells x fields x channels images") {
  tu::TempDir dir("synth_counts");
  SynthConfig config;
  config.image_size = 64;
  config.fields_per_well = 1;
  config.channels = {Channel::kCy5};
  config.base_seed = 3;

  const PlateLayout layout = default_layout("Amprolium", "p01_Amprolium");
  const auto records = generate_plate(layout, config, dir.path() / "p01_Amprolium");
  CHECK(records.size() == 48);

  std::set<std::string> files;
  for (const auto& rec : records) {
    CHECK(std::filesystem::exists(dir.path() / "p01_Amprolium" / rec.filename));
    files.insert(rec.filename);
  }
  CHECK(files.size() == records.size());
  CHECK(records.front().filename == "p01_Amprolium_B2_f00_Cy5.png");

  SynthConfig config2 = config;
  config2.fields_per_well = 2;
  config2.channels = {Channel::kCy5, Channel::kDapi};
  const auto records2 = generate_plate(layout, config2, dir.path() / "two");
  CHECK(records2.size() == 48 * 2 * 2);
}

TEST_CASE("generate_plate is reproducible run to run") {
  tu::TempDir dir("synth_repro");
  SynthConfig config;
  config.image_size = 64;
  config.fields_per_well = 1;
  config.channels = {Channel::kCy5};
  config.base_seed = 11;
  const PlateLayout layout = default_layout("Danazol", "p_danazol");

  const auto first = generate_plate(layout, config, dir.path() / "a");
  const auto second = generate_plate(layout, config, dir.path() / "b");
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].filename == second[i].filename);
    CHECK(file_bytes(dir.path() / "a" / first[i].filename) ==
          file_bytes(dir.path() / "b" / second[i].filename));
  }

  write_manifest_csv(first, dir.path() / "a.csv", "a/");
  write_manifest_csv(second, dir.path() / "b.csv", "a/");
  CHECK(file_bytes(dir.path() / "a.csv") == file_bytes(dir.path() / "b.csv"));
}

TEST_CASE("pixels survive the 16-bit PNG round trip") {
  tu::TempDir dir("png_roundtrip");
  const auto img = render_field(0.3, 1.0, Channel::kCy5, 64, 99);
  write_png_gray16(img, dir.path() / "x.png");
  const auto back = read_png_gray(dir.path() / "x.png");
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  for (std::size_t i = 0; i < img.px.size(); ++i) {
    CHECK(std::fabs(back.px[i] - img.px[i]) <= 0.5f / 65535.0f + 1e-6f);
  }
}
