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

#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "evidseg/datamodel.hpp"

// Uncertainty supervision.
//
// Gradient supervision (boundary pixels B, smoothed gradient g):
//
//   L_gu = 1/|B| * sum_{i != j in B} max(0, (u_i - u_j) (g_i - g_j))
//
// penalises boundary pairs where the sharper edge is the more uncertain one.
//
// Noise supervision over a sampled pixel set S, with u^0 from the clean image
// and u^1, u^2 from images carrying noise of mean mu1 < mu2:
//
//   L_nu = 1/|S| * sum_{i in S} [d_i <= d0] max(0, -(mu2 - mu1)(u2_i - u1_i))
//                             + [d_i >  d0] (u0_i + u1_i + u2_i)
//
// Near the boundary stronger noise must not lower uncertainty; far from it
// uncertainty should vanish whatever the noise.

namespace evidseg::supervision {

struct UncertaintyGrad {
  double value = 0.0;
  std::vector<double> grad;  // d/du, one entry per pixel
  bool sampled = false;      // pair sampling was used
  bool empty_boundary = false;
};

// Ordered pair (i, j), i != j, as positions into B.
using Pair = std::pair<std::uint32_t, std::uint32_t>;

// Uniform random subset (without replacement) of `count` ordered pairs out of
// n*(n-1), sorted. Requires count <= n*(n-1).
std::vector<Pair> sample_ordered_pairs(std::size_t n, std::size_t count, std::uint64_t seed);

// Exhaustive when |B|(|B|-1) <= max_pairs, otherwise a sampled subset of
// max_pairs pairs rescaled by |B|(|B|-1)/max_pairs.
UncertaintyGrad gradient_supervision_loss(const ScalarMap& u, const BoundaryGeometry& geom,
                                          std::size_t max_pairs, std::uint64_t seed = 0);

struct HardSampleSet {
  std::vector<std::size_t> indices;         // S^hard, ascending
  std::vector<std::size_t> per_class_counts;
  std::vector<std::size_t> sampled;         // class-balanced S, ascending
};

// Up to n_s pixels per class drawn without replacement from candidates.
std::vector<std::size_t> class_balanced_sample(const std::vector<std::size_t>& candidates,
                                               const LabelMap& label, int n_s,
                                               std::uint64_t seed);

// S^hard = {i : u1_i <= u0_i}, then class_balanced_sample over it.
HardSampleSet detect_hard_samples(const ScalarMap& u0, const ScalarMap& u1,
                                  const LabelMap& label, int n_s, std::uint64_t seed);

struct NoisePassBundle {
  ScalarMap u0, u1, u2;
  double mu1 = 0.0;
  double mu2 = 0.0;

  void validate() const;
};

struct NoiseLoss {
  double value = 0.0;
  double near = 0.0;  // near-boundary part, already divided by |S|
  double far = 0.0;
  std::array<std::vector<double>, 3> grad;  // d/du0, d/du1, d/du2
};

NoiseLoss noise_supervision_loss(const NoisePassBundle& bundle, const BoundaryGeometry& geom,
                                 const std::vector<std::size_t>& sampled, double d0);

// Anything that turns a slice into evidence; forward must be deterministic.
class EvidenceModel {
 public:
  virtual ~EvidenceModel() = default;
  virtual EvidenceMap infer(const ImageSlice& img) const = 0;
  virtual int classes() const = 0;
};

struct NoisedImages {
  ImageSlice noised1;
  ImageSlice noised2;
};

// The two global-noise versions of img used by the noise loss; the mu2 draw
// uses seed + 1 so the two passes see independent noise.
NoisedImages make_noised_pair(const ImageSlice& img, const SupervisionConfig& cfg,
                              std::uint64_t seed);

// Clean, mu1 and mu2 forward passes converted to uncertainty.
NoisePassBundle build_noise_passes(const ImageSlice& img, const EvidenceModel& model,
                                   const SupervisionConfig& cfg, std::uint64_t seed);

}  // namespace evidseg::supervision
