#include "doctest_torch.hpp"

#include <algorithm>
#include <cmath>

#include "neuroscreen/errors.hpp"
#include "neuroscreen/gradcam.hpp"
#include "neuroscreen/synth.hpp"
#include "testutil.hpp"

using namespace neuroscreen;

namespace {

// Probe with hand-picked weights: the "conv stage" is the input itself
// ([1,2,2,2]) and the head is linear-plus-quadratic so finite differences
// are a meaningful, independent gradient oracle:
//   logit_c = sum(W_c * A) + 0.25 * (sum(V_c * A))^2 + b_c
class ProbeModel final : public FeatureScoringModel {
 public:
  ProbeModel(torch::Tensor w, torch::Tensor v, torch::Tensor bias)
      : w_(std::move(w)), v_(std::move(v)), bias_(std::move(bias)) {}

  std::pair<torch::Tensor, torch::Tensor> forward_with_features(
      torch::Tensor input) override {
    auto activations = input * 1.0;  // keep a grad edge between input and features
    torch::Tensor logits = torch::zeros({1, 2}, torch::kFloat32);
    std::vector<torch::Tensor> rows;
    for (int c = 0; c < 2; ++c) {
      const auto linear = (w_[c] * activations.squeeze(0)).sum();
      const auto quad = (v_[c] * activations.squeeze(0)).sum();
      rows.push_back(linear + 0.25 * quad * quad + bias_[c]);
    }
    return {activations, torch::stack(rows).unsqueeze(0)};
  }

  // d(logit_c)/dA evaluated analytically at A.
  torch::Tensor analytic_grad(const torch::Tensor& activations, int c) const {
    const auto a = activations.squeeze(0);
    const double quad = (v_[c] * a).sum().item<double>();
    return w_[c] + 0.5 * quad * v_[c];
  }

  torch::Tensor w_, v_, bias_;
};

ProbeModel make_probe() {
  const auto w = torch::tensor({{{{0.5f, -0.2f}, {0.1f, 0.4f}},
                                 {{-0.3f, 0.8f}, {0.2f, -0.1f}}},
                                {{{-0.5f, 0.2f}, {-0.1f, -0.4f}},
                                 {{0.3f, -0.8f}, {-0.2f, 0.1f}}}},
                               torch::kFloat32);
  const auto v = torch::tensor({{{{0.2f, 0.1f}, {-0.1f, 0.3f}},
                                 {{0.0f, -0.2f}, {0.4f, 0.1f}}},
                                {{{-0.2f, 0.3f}, {0.1f, 0.0f}},
                                 {{0.2f, 0.2f}, {-0.3f, -0.1f}}}},
                               torch::kFloat32);
  return ProbeModel(w, v, torch::tensor({0.3f, -0.3f}, torch::kFloat32));
}

torch::Tensor probe_activations() {
  return torch::tensor({{{{0.9f, 0.2f}, {0.4f, 0.7f}},
                        {{0.1f, 0.8f}, {0.6f, 0.3f}}}},
                       torch::kFloat32);
}

// Hand-computed Grad-CAM from explicit gradients.
torch::Tensor reference_cam(const torch::Tensor& activations,
                            const torch::Tensor& grads) {
  const auto a = activations.squeeze(0);
  torch::Tensor cam = torch::zeros({2, 2}, torch::kFloat32);
  for (int k = 0; k < 2; ++k) {
    const double alpha = grads[k].mean().item<double>();
    cam = cam + static_cast<float>(alpha) * a[k];
  }
  return torch::relu(cam);
}

}  // namespace

TEST_CASE("probe heatmap equals the hand-computed weighted activation sum") {
  ProbeModel probe = make_probe();
  const auto input = probe_activations();

  for (int target = 0; target < 2; ++target) {
    const Heatmap heatmap = grad_cam(probe, input, target, 2);

    const auto analytic =
        probe.analytic_grad(input, target);
    auto expected = reference_cam(input, analytic);
    const double peak = expected.max().item<double>();
    if (peak > 0) expected = expected / peak;

    REQUIRE(heatmap.values.width == 2);
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 2; ++x) {
        CHECK(std::fabs(heatmap.values.at(x, y) -
                        expected[y][x].item<float>()) < 1e-5);
      }
    }
  }
}

TEST_CASE("autograd matches finite differences through the probe") {
  ProbeModel probe = make_probe();
  const auto input = probe_activations();
  const int target = 0;

  auto x = input.clone().set_requires_grad(true);
  auto [acts, logits] = probe.forward_with_features(x);
  const auto grads = torch::autograd::grad({logits[0][target]}, {acts})[0].squeeze(0);

  const double h = 1e-3;
  const auto logit_at = [&](const torch::Tensor& a) {
    auto [acts2, logits2] = probe.forward_with_features(a);
    return logits2[0][target].item<double>();
  };
  for (int k = 0; k < 2; ++k) {
    for (int y = 0; y < 2; ++y) {
      for (int x2 = 0; x2 < 2; ++x2) {
        auto plus = input.clone();
        auto minus = input.clone();
        plus[0][k][y][x2] += h;
        minus[0][k][y][x2] -= h;
        const double fd = (logit_at(plus) - logit_at(minus)) / (2 * h);
        const double analytic = grads[k][y][x2].item<double>();
        CHECK(std::fabs(fd - analytic) /
                  std::max(1e-6, std::fabs(analytic)) < 1e-3);
      }
    }
  }
}

TEST_CASE("zero-gradient probes yield the zero heatmap") {
  ProbeModel probe(torch::zeros({2, 2, 2, 2}), torch::zeros({2, 2, 2, 2}),
                   torch::tensor({1.0f, -1.0f}));
  const Heatmap heatmap = grad_cam(probe, probe_activations(), 0, 8);
  for (float v : heatmap.values.px) CHECK(v == 0.0f);
}

TEST_CASE("shifting both logits by a constant leaves the heatmap unchanged") {
  ProbeModel base = make_probe();
  ProbeModel shifted(base.w_.clone(), base.v_.clone(),
                     base.bias_ + 123.456f);
  const auto input = probe_activations();
  const Heatmap a = grad_cam(base, input, 1, 4);
  const Heatmap b = grad_cam(shifted, input, 1, 4);
  CHECK(a.values.px == b.values.px);
}

TEST_CASE("models without a conv stage raise NoConvStage") {
  class HeadOnly final : public FeatureScoringModel {
   public:
    std::pair<torch::Tensor, torch::Tensor> forward_with_features(
        torch::Tensor input) override {
      return {torch::Tensor{}, torch::zeros({1, 2})};
    }
  };
  HeadOnly model;
  CHECK_THROWS_AS(grad_cam(model, probe_activations(), 0, 2), NoConvStageError);
}

TEST_CASE("grad_cam rejects out-of-range target classes") {
  ProbeModel probe = make_probe();
  CHECK_THROWS_AS(grad_cam(probe, probe_activations(), 2, 2), ShapeMismatchError);
  CHECK_THROWS_AS(grad_cam(probe, probe_activations(), -1, 2), ShapeMismatchError);
}

TEST_CASE("classifier heatmaps are normalized, input-sized and deterministic") {
  torch::manual_seed(21);
  ModelConfig config;
  config.input_size = 64;
  Classifier model = build_model(config);
  const ImageF32 img = render_field(0.0, 1.0, Channel::kCy5, 64, 4242);

  const Heatmap a = grad_cam(model, img, 1);
  const Heatmap b = grad_cam(model, img, 1);
  CHECK(a.values.px == b.values.px);
  CHECK(a.values.width == 64);
  CHECK(a.values.height == 64);

  float peak = 0.0f;
  for (float v : a.values.px) {
    CHECK(v >= 0.0f);
    peak = std::max(peak, v);
  }
  CHECK((peak == doctest::Approx(1.0f) || peak == 0.0f));
}

TEST_CASE("overlay blends the colormap per the alpha contract") {
  const int n = 16;
  ImageF32 gray(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) gray.at(x, y) = static_cast<float>(x) / (n - 1);
  }
  Heatmap heat;
  heat.values = ImageF32(n, n, 0.0f);

  const ImageRGB identity = overlay(gray, heat, 0.0);
  CHECK(identity.width == n);
  CHECK(identity.height == n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const auto expected = static_cast<std::uint8_t>(
          std::lround(std::clamp(gray.at(x, y), 0.0f, 1.0f) * 255.0f));
      const std::uint8_t* px = identity.at(x, y);
      CHECK(px[0] == expected);
      CHECK(px[1] == expected);
      CHECK(px[2] == expected);
    }
  }

  const ImageRGB floor = overlay(gray, heat, 1.0);
  const std::uint8_t* first = floor.at(0, 0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const std::uint8_t* px = floor.at(x, y);
      CHECK(px[0] == first[0]);
      CHECK(px[1] == first[1]);
      CHECK(px[2] == first[2]);
    }
  }
  // jet floor is dark blue, not black
  CHECK(static_cast<int>(first[2]) > 0);

  ImageF32 wrong(n + 1, n, 0.0f);
  CHECK_THROWS_AS(overlay(wrong, heat, 0.5), ShapeMismatchError);
}
