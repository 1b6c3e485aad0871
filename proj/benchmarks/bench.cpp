// Copyright 2026 The evidseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>

#include "evidseg/edl.hpp"
#include "evidseg/evaluation.hpp"
#include "evidseg/imageops.hpp"
#include "evidseg/metrics.hpp"
#include "evidseg/network.hpp"
#include "evidseg/supervision.hpp"
#include "evidseg/synthdata.hpp"

using namespace evidseg;

namespace {

Sample scene(int side) {
  synthdata::SceneSpec spec;
  spec.height = spec.width = side;
  return synthdata::generate_scene(spec, 11).sample;
}

EvidenceMap random_evidence(Shape shape, int K, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> ex(0.2);
  std::vector<double> e(shape.pixels() * K);
  for (double& v : e) v = ex(rng);
  return EvidenceMap(shape, K, std::move(e));
}

void BM_UNetForward(benchmark::State& state) {
  const Sample s = scene(static_cast<int>(state.range(0)));
  const nn::UNet net(3, 16, 1);
  for (auto _ : state) benchmark::DoNotOptimize(net.infer(s.image));
}
BENCHMARK(BM_UNetForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_UNetForwardBackward(benchmark::State& state) {
  const Sample s = scene(static_cast<int>(state.range(0)));
  const nn::UNet net(3, 16, 1);
  std::vector<float> grads(net.parameters().size());
  for (auto _ : state) {
    nn::UNet::Trace trace;
    const EvidenceMap e = net.forward(s.image, trace);
    const std::vector<double> w(e.evidence().size(), 1e-3);
    net.backward(trace, w, grads);
    benchmark::DoNotOptimize(grads.data());
  }
}
BENCHMARK(BM_UNetForwardBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BoundaryGeometry(benchmark::State& state) {
  const Sample s = scene(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(imageops::make_geometry(s.image, s.label, 1.0, 1.0));
}
BENCHMARK(BM_BoundaryGeometry)->Arg(64)->Arg(128);

void BM_SegLoss(benchmark::State& state) {
  const Sample s = scene(64);
  const EvidenceMap e = random_evidence(s.label.shape(), 3, 2);
  const edl::SegWeights w{1.0, 0.5, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(edl::loss_seg(e, s.label, w));
}
BENCHMARK(BM_SegLoss);

void BM_GradientSupervision(benchmark::State& state) {
  const Sample s = scene(64);
  const auto geom = imageops::make_geometry(s.image, s.label, 1.0, 1.0);
  const ScalarMap u = edl::uncertainty(random_evidence(s.label.shape(), 3, 3));
  const auto cap = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(supervision::gradient_supervision_loss(u, geom, cap, 5));
  state.counters["boundary"] = static_cast<double>(geom.boundary.size());
}
BENCHMARK(BM_GradientSupervision)->Arg(200000)->Arg(20000);

void BM_EvaluateImage(benchmark::State& state) {
  const Sample s = scene(64);
  const nn::UNet net(3, 16, 1);
  const evaluation::EvalOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(evaluation::evaluate_image(net, s, 0, opt));
}
BENCHMARK(BM_EvaluateImage)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
