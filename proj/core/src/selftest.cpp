// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "deepgi/common/random.hpp"
#include "deepgi/nn/discriminator.hpp"
#include "deepgi/nn/generator.hpp"
#include "deepgi/render/renderer.hpp"
#include "deepgi/tensor/gradcheck.hpp"
#include "deepgi/tensor/ops.hpp"

namespace deepgi::selftest {
namespace {

constexpr double kGradTolerance = 1e-3;

Tensor normal(Shape shape, std::uint64_t seed, float stddev = 1.0f, bool grad = true) {
  SplitMix64 rng(seed);
  std::vector<float> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = stddev * rng.normal();
  return Tensor::from_data(std::move(shape), std::move(data), grad);
}

Tensor uniform(Shape shape, std::uint64_t seed, float lo, float hi, bool grad = true) {
  SplitMix64 rng(seed);
  std::vector<float> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = lo + (hi - lo) * rng.uniform();
  return Tensor::from_data(std::move(shape), std::move(data), grad);
}

// Normal values pushed at least `gap` away from zero, for ops with a kink
// there; the finite-difference step then never straddles it.
Tensor away_from_zero(Shape shape, std::uint64_t seed, float gap) {
  auto t = normal(std::move(shape), seed);
  for (auto& v : t.mutable_data()) v += v >= 0.0f ? gap : -gap;
  return t;
}

// sum(t * w) with a fixed random w, so every output element counts.
Tensor weighted_sum(const Tensor& t, std::uint64_t seed) { return sum(mul(t, normal(t.shape(), seed, 1.0f, false))); }

struct OpCase {
  const char* name;
  // Builds instance `seed` and returns its loss function and leaves.
  std::function<std::pair<std::function<Tensor()>, std::vector<Tensor>>(std::uint64_t)> make;
};

std::vector<OpCase> op_cases() {
  using Made = std::pair<std::function<Tensor()>, std::vector<Tensor>>;
  std::vector<OpCase> cases;
  cases.push_back({"conv2d stride 2", [](std::uint64_t s) -> Made {
                     auto x = normal({2, 3, 6, 6}, s), w = normal({4, 3, 4, 4}, s + 1, 0.3f), b = normal({4}, s + 2, 0.3f);
                     return {[=] { return weighted_sum(conv2d(x, w, b, 2, 1), s + 3); }, {x, w, b}};
                   }});
  cases.push_back({"conv2d stride 1", [](std::uint64_t s) -> Made {
                     auto x = normal({1, 2, 5, 5}, s), w = normal({3, 2, 4, 4}, s + 1, 0.3f), b = normal({3}, s + 2, 0.3f);
                     return {[=] { return weighted_sum(conv2d(x, w, b, 1, 1), s + 3); }, {x, w, b}};
                   }});
  cases.push_back({"conv_transpose2d", [](std::uint64_t s) -> Made {
                     auto x = normal({2, 3, 3, 3}, s), w = normal({3, 2, 4, 4}, s + 1, 0.3f), b = normal({2}, s + 2, 0.3f);
                     return {[=] { return weighted_sum(conv_transpose2d(x, w, b, 2, 1), s + 3); }, {x, w, b}};
                   }});
  cases.push_back({"batch_norm2d train", [](std::uint64_t s) -> Made {
                     auto x = normal({2, 3, 3, 3}, s), g = uniform({3}, s + 1, 0.5f, 1.5f), b = normal({3}, s + 2, 0.5f);
                     return {[=] {
                               BatchNormStats stats(3);
                               return weighted_sum(batch_norm2d(x, g, b, stats, Mode::train), s + 3);
                             },
                             {x, g, b}};
                   }});
  cases.push_back({"batch_norm2d eval", [](std::uint64_t s) -> Made {
                     auto x = normal({2, 3, 3, 3}, s), g = uniform({3}, s + 1, 0.5f, 1.5f), b = normal({3}, s + 2, 0.5f);
                     BatchNormStats stats(3);
                     stats.running_mean = {0.1f, -0.2f, 0.3f};
                     stats.running_var = {0.5f, 2.0f, 1.0f};
                     return {[=] { return weighted_sum(batch_norm2d(x, g, b, stats), s + 3); }, {x, g, b}};
                   }});
  for (auto [name, kind] : {std::pair{"leaky_relu", Activation::leaky_relu}, std::pair{"relu", Activation::relu},
                            std::pair{"tanh", Activation::tanh}, std::pair{"sigmoid", Activation::sigmoid}}) {
    cases.push_back({name, [kind](std::uint64_t s) -> Made {
                       auto x = away_from_zero({2, 3, 4, 4}, s, 0.05f);
                       return {[=] { return weighted_sum(activation(x, kind), s + 1); }, {x}};
                     }});
  }
  cases.push_back({"dropout", [](std::uint64_t s) -> Made {
                     auto x = normal({2, 3, 4, 4}, s);
                     return {[=] { return weighted_sum(dropout(x, 0.5f, Mode::train, s + 7), s + 1); }, {x}};
                   }});
  cases.push_back({"concat_channels", [](std::uint64_t s) -> Made {
                     auto a = normal({2, 2, 3, 3}, s), b = normal({2, 3, 3, 3}, s + 1);
                     return {[=] { return weighted_sum(concat_channels(a, b), s + 2); }, {a, b}};
                   }});
  cases.push_back({"add", [](std::uint64_t s) -> Made {
                     auto a = normal({3, 4}, s), b = normal({3, 4}, s + 1);
                     return {[=] { return weighted_sum(add(a, b), s + 2); }, {a, b}};
                   }});
  cases.push_back({"mul", [](std::uint64_t s) -> Made {
                     auto a = normal({3, 4}, s), b = normal({3, 4}, s + 1);
                     return {[=] { return weighted_sum(mul(a, b), s + 2); }, {a, b}};
                   }});
  cases.push_back({"scale", [](std::uint64_t s) -> Made {
                     auto a = normal({3, 4}, s);
                     return {[=] { return weighted_sum(scale(a, -1.7f), s + 2); }, {a}};
                   }});
  cases.push_back({"sum", [](std::uint64_t s) -> Made {
                     auto a = normal({3, 4}, s);
                     return {[=] { return sum(mul(a, a)); }, {a}};
                   }});
  cases.push_back({"mean", [](std::uint64_t s) -> Made {
                     auto a = normal({3, 4}, s);
                     return {[=] { return mean(mul(a, a)); }, {a}};
                   }});
  cases.push_back({"l1_loss", [](std::uint64_t s) -> Made {
                     // Residuals at least 0.1 from zero.
                     auto t = normal({2, 3, 4}, s, 1.0f, false);
                     auto d = away_from_zero({2, 3, 4}, s + 1, 0.1f);
                     std::vector<float> pv(t.data().size());
                     for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = t.data()[i] + d.data()[i];
                     auto p = Tensor::from_data(t.shape(), std::move(pv), true);
                     return {[=] { return l1_loss(p, t); }, {p}};
                   }});
  cases.push_back({"bce_loss", [](std::uint64_t s) -> Made {
                     auto p = uniform({2, 1, 3, 3}, s, 0.1f, 0.9f), t = uniform({2, 1, 3, 3}, s + 1, 0.0f, 1.0f, false);
                     return {[=] { return bce_loss(p, t); }, {p}};
                   }});
  return cases;
}

Check gradient_check_case(const std::string& name, const std::function<Tensor()>& loss, std::vector<Tensor> wrt,
                          Check worst, const GradCheckOptions& options = {}) {
  const auto r = gradient_check(loss, std::move(wrt), options);
  if (worst.name.empty() || r.relative_error > worst.value || !std::isfinite(r.relative_error)) {
    worst.name = name;
    worst.value = r.relative_error;
    worst.detail = r.worst_element;
    worst.note = r.elements_skipped == 0 ? ""
                                         : std::to_string(r.elements_checked) + " elements checked, " +
                                               std::to_string(r.elements_skipped) + " skipped at kinks";
  }
  return worst;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string Report::format() const {
  std::string out;
  for (const auto& c : checks) {
    out += (c.passed ? "PASS " : "FAIL ") + c.name + "  " + fmt(c.value) + " < " + fmt(c.limit);
    if (!c.note.empty()) out += "  [" + c.note + "]";
    if (!c.passed && !c.detail.empty()) out += "  (" + c.detail + ")";
    out += "\n";
  }
  return out;
}

Report gradient_suite(int instances) {
  Report report;
  for (const auto& op : op_cases()) {
    Check worst;
    for (int i = 0; i < instances; ++i) {
      auto [loss, wrt] = op.make(hash_keys(0x9c, static_cast<std::uint64_t>(i)) % 100000);
      worst = gradient_check_case(std::string("grad ") + op.name, loss, std::move(wrt), worst);
    }
    worst.limit = kGradTolerance;
    worst.passed = std::isfinite(worst.value) && worst.value < worst.limit;
    report.checks.push_back(worst);
  }

  // Composed loss: BCE(D(x, G(x)), 1) + 100 * L1(G(x), y) through a train-mode
  // generator (fixed dropout seed) and a four-layer discriminator, the
  // largest ladder a 16 x 16 input admits. Gradients are taken with respect
  // to the input and every generator parameter.
  Check composed;
  for (int i = 0; i < instances; ++i) {
    const auto seed = static_cast<std::uint64_t>(100 + i);
    nn::GeneratorConfig gc;
    gc.base_layer_K = 4;
    gc.depth = 4;
    auto gen = std::make_shared<nn::Generator>(gc, seed);
    // Checked at a generic point: batch-norm offsets start at 0, and at
    // batch 1 the innermost encoder outputs exactly its offset, which would
    // put every innermost LeakyReLU (and the first decoder's ReLU) on its kink.
    SplitMix64 offset_rng(seed + 5);
    for (auto& np : gen->named_parameters()) {
      if (np.name.ends_with(".bn.beta")) {
        for (auto& v : np.tensor.mutable_data()) v = 0.2f * offset_rng.normal();
      }
    }
    nn::DiscriminatorConfig dc;
    dc.base_layer_k = 4;
    dc.num_encoders = 4;
    auto disc = std::make_shared<nn::Discriminator>(dc, seed + 1);
    for (auto& p : disc->parameters()) p.set_requires_grad(false);
    auto x = uniform({1, 12, 16, 16}, seed + 2, -1.0f, 1.0f);
    // Target 0.01 from the initial output. The L1 gradient does not depend
    // on the residual size, but the loss value does, and a small loss keeps
    // float rounding of f(x +- h) well below the differences being measured.
    nn::GeneratorForwardOptions fwd;
    fwd.mode = Mode::train;
    fwd.seed = seed + 3;
    Tensor y;
    {
      NoGradGuard guard;
      y = gen->forward(x, fwd).detach();
    }
    const auto offsets = normal(y.shape(), seed + 4, 1.0f, false);
    for (std::size_t j = 0; j < y.data().size(); ++j) y.mutable_data()[j] += offsets.data()[j] >= 0.0f ? 0.01f : -0.01f;
    auto loss = [=]() mutable {
      const Tensor fake = gen->forward(x, fwd);
      const Tensor d = disc->forward(x, fake, Mode::train);
      return add(bce_loss(d, Tensor::full(d.shape(), 1.0f)), scale(l1_loss(fake, y), 100.0f));
    };
    std::vector<Tensor> wrt{x};
    for (auto& p : gen->parameters()) wrt.push_back(p);
    // Through dozens of batch-normalized ReLUs a 1e-3 step routinely flips
    // some unit's sign; those elements have no derivative to compare.
    GradCheckOptions opt;
    opt.skip_kinks = true;
    composed = gradient_check_case("grad generator loss 1x12x16x16 depth 4", loss, std::move(wrt), composed, opt);
  }
  composed.limit = kGradTolerance;
  composed.passed = std::isfinite(composed.value) && composed.value < composed.limit;
  report.checks.push_back(composed);
  return report;
}

Report renderer_suite(const RendererSuiteOptions& options) {
  using namespace render;
  Report report;
  auto camera = [](Vec3 pos, Vec3 look, int res, Vec3 up) {
    Camera c;
    c.position = pos;
    c.look_at = look;
    c.up = up;
    c.resolution = res;
    return c;
  };

  {
    Scene s;
    s.quads.push_back({{0, 0, -1}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1}, false});
    s.light = DirectionalLight{{0, 0, 1}, {1, 1, 1}};
    const auto img = render_direct(s, camera({0, 0, 3.2}, {0, 0, 0}, 16, {0, 1, 0}));
    double err = 0.0;
    for (int c = 0; c < 3; ++c) err = std::max(err, std::abs(img.at(8, 8, c) - 1.0 / kPi));
    report.checks.push_back({"lambert head-on |L - 1/pi|", err, 1e-3, err < 1e-3, "", ""});
  }
  {
    // Sphere above a floor lit from straight up: the floor point below the
    // centre is in shadow.
    Scene s;
    s.quads.push_back({{0, -1, 0}, {0, 0, 1}, {1, 0, 0}, {0.75, 0.75, 0.75}, true});
    SceneObject o;
    o.size = 0.5;
    o.position = {0, -0.3, 0};
    s.objects.push_back(o);
    s.light = DirectionalLight{{0, 1, 0}, {5, 5, 5}};
    const auto cam = camera({0, 0, 3.2}, {0, -1, 0}, 65, {0, 1, 0});
    const auto img = render_direct(s, cam);
    Hit h;
    const bool on_floor = intersect(s, cam.primary_ray(32, 32), 1e-9, 1e30, h) && std::abs(h.point.y + 1.0) < 1e-9 &&
                          std::hypot(h.point.x, h.point.z) < 0.3;
    double v = 0.0;
    for (int c = 0; c < 3; ++c) v = std::max(v, static_cast<double>(std::abs(img.at(32, 32, c))));
    // Exact zero required; the limit only makes "value < limit" print.
    const bool ok = on_floor && v == 0.0;
    report.checks.push_back({"shadowed pixel == 0", v, 1e-300, ok, on_floor ? "" : "probe ray missed the shadow", ""});
  }
  {
    Scene s;
    s.quads.push_back({{0, -1, 0}, {0, 0, 1}, {1, 0, 0}, {0.5, 0.5, 0.5}, true});
    s.environment = {1, 1, 1};
    PathTraceOptions opt;
    opt.spp = options.sky_spp;
    opt.seed = 5;
    const auto img = path_trace(s, camera({0, 1, 0}, {0, -1, 0}, 8, {0, 0, -1}), opt);
    double worst = 0.0;
    for (float v : img.data) worst = std::max(worst, std::abs(v - 0.5) / 0.5);
    report.checks.push_back({"plane under sky relative error", worst, 0.02, worst < 0.02, "", ""});
  }
  {
    SceneObject o;
    o.kind = ObjectKind::sphere;
    o.position = cornell::kObjectPosition;
    const auto scene = cornell::make_scene(70.0, o);
    const auto cam = cornell::make_camera(32);
    PathTraceOptions opt;
    opt.spp = 8;
    opt.max_bounces = 1;
    const auto pt = path_trace(scene, cam, opt);
    const auto direct = render_direct(scene, cam);
    double diff = 0.0;
    for (std::size_t i = 0; i < pt.data.size(); ++i) diff = std::max(diff, static_cast<double>(std::abs(pt.data[i] - direct.data[i])));
    report.checks.push_back({"max_bounces=1 vs direct max |diff|", diff, 1e-6, diff < 1e-6, "", ""});
  }
  return report;
}

}  // namespace deepgi::selftest
