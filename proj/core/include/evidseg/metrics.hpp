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

#include <cstdint>
#include <span>
#include <vector>

#include "evidseg/datamodel.hpp"

namespace evidseg::metrics {

inline constexpr std::size_t kDefaultPairCap = 200000;

// Fractional ranks, 1-based; ties receive the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> x);

// Pearson correlation of fractional ranks. Throws ErrorKind::kUndefined when
// either vector has zero rank variance or fewer than two entries.
double spearman(std::span<const double> x, std::span<const double> y);

// Spearman(g, u) on the boundary set.
double ucc_gradient(const ScalarMap& u, const BoundaryGeometry& geom);

// One evaluated noise level: the mean mu and the resulting uncertainty.
struct NoiseLevel {
  double mu = 0.0;
  ScalarMap u;
};

// Spearman over (mu, u_i^mu) pooled across pixels with d_i <= d0 and levels.
double ucc_noise(std::span<const NoiseLevel> sweep, const BoundaryGeometry& geom, double d0);

struct PairRatio {
  double ratio = 0.0;  // satisfying pairs / all pairs (ties satisfy)
  double ties = 0.0;   // tied pairs / all pairs
  bool sampled = false;
};

// Ordered pairs i != j in B with (g_i - g_j)(u_i - u_j) <= 0. Exhaustive up to
// `cap` pairs, a seeded uniform pair sample above it.
PairRatio ur_gradient(const ScalarMap& u, const BoundaryGeometry& geom,
                      std::size_t cap = kDefaultPairCap, std::uint64_t seed = 0);

// Near pixels (d <= d0) x ordered level pairs a != b with
// (mu_a - mu_b)(u_a - u_b) >= 0.
double ur_noise(std::span<const NoiseLevel> sweep, const BoundaryGeometry& geom, double d0);

struct DiceScore {
  std::vector<double> per_class;  // foreground classes 1..K-1
  double mean = 0.0;
};

// 2|A n B| / (|A| + |B|) per foreground class; an empty-empty class scores 1.
DiceScore dsc(const LabelMap& pred, const LabelMap& truth);

// Mask pixels with a 4-neighbour outside the mask (or outside the image).
std::vector<bool> surface(const Shape& shape, const std::vector<bool>& mask);

// q-quantile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

struct Hd95Result {
  double value = 0.0;             // mean over evaluated classes
  std::vector<double> per_class;  // NaN for skipped classes
  std::vector<int> skipped;       // classes with an empty mask
  bool defined() const { return per_class.size() > skipped.size(); }
};

Hd95Result hd95(const LabelMap& pred, const LabelMap& truth);

// probs is V x K pixel-major. Equal-width confidence bins over [0, 1].
double ece(std::span<const double> probs, int classes, const LabelMap& truth, int bins = 10);

struct UeoResult {
  double value = 0.0;
  double best_threshold = 0.0;
  bool degenerate = false;  // no errors and nothing above any threshold
};

// max over tau in {step, 2 step, ..} below 1 of Dice(u >= tau, pred != truth).
UeoResult ueo(const ScalarMap& u, const LabelMap& pred, const LabelMap& truth,
              double step = 0.05);

struct Delta {
  double mu_hi = 0.0;
  double mu_lo = 0.0;
  double value = 0.0;  // score(mu_hi) - score(mu_lo)
};

// All pairs of distinct levels, ordered so that mu_hi > mu_lo.
std::vector<Delta> robustness_deltas(std::span<const double> mus,
                                     std::span<const double> scores);

double mean_abs_delta(std::span<const Delta> deltas);

// The evaluation noise sweep.
inline const std::vector<double> kDefaultSweep{0.0, 0.1, 0.3, 0.5, 0.7, 0.9};

}  // namespace evidseg::metrics
