// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "deepgi/common/random.hpp"
#include "deepgi/nn/discriminator.hpp"
#include "deepgi/nn/generator.hpp"
#include "deepgi/render/dataset.hpp"
#include "deepgi/render/renderer.hpp"
#include "deepgi/tensor/ops.hpp"

namespace {

using namespace deepgi;

Tensor noise(Shape shape, std::uint64_t seed, bool grad = false) {
  SplitMix64 rng(seed);
  std::vector<float> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = rng.uniform() * 2.0f - 1.0f;
  return Tensor::from_data(std::move(shape), std::move(v), grad);
}

// First generator encoder at 64x64: 12 -> 64 channels, stride 2.
void BM_Conv2dForward(benchmark::State& state) {
  const auto x = noise({1, 12, 64, 64}, 1);
  const auto w = noise({64, 12, 4, 4}, 2);
  const auto b = noise({64}, 3);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, 2, 1));
}
BENCHMARK(BM_Conv2dForward)->Unit(benchmark::kMicrosecond);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto x = noise({4, 12, 64, 64}, 1, true);
  const auto w = noise({64, 12, 4, 4}, 2, true);
  const auto b = noise({64}, 3, true);
  for (auto _ : state) {
    sum(conv2d(x, w, b, 2, 1)).backward();
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Unit(benchmark::kMillisecond);

// Per-frame inference at 64x64 (depth 6) for each base layer K.
void BM_GeneratorPredict(benchmark::State& state) {
  nn::GeneratorConfig c;
  c.base_layer_K = static_cast<int>(state.range(0));
  c.depth = 6;
  const nn::Generator g(c, 1);
  const auto x = noise({1, 12, 64, 64}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(g.predict(x));
  state.counters["params"] = static_cast<double>(const_cast<nn::Generator&>(g).parameter_count());
}
BENCHMARK(BM_GeneratorPredict)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_DiscriminatorPredict(benchmark::State& state) {
  const nn::Discriminator d(nn::DiscriminatorConfig{}, 1);
  const auto cond = noise({1, 12, 64, 64}, 5);
  const auto img = noise({1, 3, 64, 64}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(d.predict(cond, img));
}
BENCHMARK(BM_DiscriminatorPredict)->Unit(benchmark::kMillisecond);

const render::Scene& sphere_scene() {
  static const auto scene = render::sweep_scene(render::ObjectKind::sphere, 90.0, {});
  return scene;
}

void BM_RaycastGBuffers(benchmark::State& state) {
  const auto cam = render::cornell::make_camera(64);
  for (auto _ : state) benchmark::DoNotOptimize(render::raycast_gbuffers(sphere_scene(), cam));
}
BENCHMARK(BM_RaycastGBuffers)->Unit(benchmark::kMillisecond);

void BM_RenderDirect(benchmark::State& state) {
  const auto cam = render::cornell::make_camera(64);
  for (auto _ : state) benchmark::DoNotOptimize(render::render_direct(sphere_scene(), cam));
}
BENCHMARK(BM_RenderDirect)->Unit(benchmark::kMillisecond);

// The teacher: one 64x64 frame at the given spp.
void BM_PathTrace(benchmark::State& state) {
  const auto cam = render::cornell::make_camera(64);
  render::PathTraceOptions opt;
  opt.spp = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render::path_trace(sphere_scene(), cam, opt));
}
BENCHMARK(BM_PathTrace)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
