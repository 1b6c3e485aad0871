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

#include "evidseg/supervision.hpp"

#include <algorithm>
#include <random>

#include "evidseg/edl.hpp"
#include "evidseg/imageops.hpp"

namespace evidseg::supervision {

std::vector<Pair> sample_ordered_pairs(std::size_t n, std::size_t count, std::uint64_t seed) {
  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n > 0 ? n - 1 : 0);
  if (count > total)
    throw Error(ErrorKind::kInvalidArgument, "more pairs requested than exist");
  // Floyd's sampling over pair codes, with a bitmap for membership.
  std::vector<std::uint64_t> bits((total + 63) / 64, 0);
  auto test = [&](std::uint64_t c) { return (bits[c >> 6] >> (c & 63)) & 1u; };
  auto set = [&](std::uint64_t c) { bits[c >> 6] |= std::uint64_t{1} << (c & 63); };
  std::mt19937_64 rng(seed);
  for (std::uint64_t j = total - count; j < total; ++j) {
    const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    set(test(t) ? j : t);
  }
  std::vector<Pair> pairs;
  pairs.reserve(count);
  for (std::size_t w = 0; w < bits.size(); ++w) {
    std::uint64_t word = bits[w];
    while (word) {
      const int b = __builtin_ctzll(word);
      word &= word - 1;
      const std::uint64_t code = (static_cast<std::uint64_t>(w) << 6) + b;
      const auto i = static_cast<std::uint32_t>(code / (n - 1));
      auto j = static_cast<std::uint32_t>(code % (n - 1));
      if (j >= i) ++j;
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

UncertaintyGrad gradient_supervision_loss(const ScalarMap& u, const BoundaryGeometry& geom,
                                          std::size_t max_pairs, std::uint64_t seed) {
  if (u.shape != geom.shape) throw Error(ErrorKind::kDimensionMismatch, "u and geometry differ");
  if (!geom.has_gradient())
    throw Error(ErrorKind::kInvalidArgument, "geometry carries no gradient map");
  if (max_pairs < 1) throw Error(ErrorKind::kInvalidArgument, "max_pairs must be >= 1");
  UncertaintyGrad out;
  out.grad.assign(u.size(), 0.0);
  const auto& B = geom.boundary;
  const std::size_t n = B.size();
  if (n == 0) {
    out.empty_boundary = true;
    return out;
  }
  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1);
  const auto& g = geom.gradient;

  auto visit = [&](std::size_t a, std::size_t b, double weight) {
    const std::size_t i = B[a], j = B[b];
    const double du = u[i] - u[j], dg = g[i] - g[j];
    const double m = du * dg;
    if (m > 0.0) {
      out.value += weight * m;
      out.grad[i] += weight * dg;
      out.grad[j] -= weight * dg;
    }
  };

  if (total <= max_pairs) {
    const double w = 1.0 / n;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) visit(a, b, w);
  } else {
    out.sampled = true;
    const double w = static_cast<double>(total) / max_pairs / n;
    for (const auto& [a, b] : sample_ordered_pairs(n, max_pairs, seed)) visit(a, b, w);
  }
  return out;
}

std::vector<std::size_t> class_balanced_sample(const std::vector<std::size_t>& candidates,
                                               const LabelMap& label, int n_s,
                                               std::uint64_t seed) {
  if (n_s < 1) throw Error(ErrorKind::kInvalidArgument, "n_s must be >= 1");
  std::vector<std::vector<std::size_t>> by_class(label.classes());
  for (std::size_t i : candidates) by_class[label[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  for (auto& pool : by_class) {
    const std::size_t take = std::min<std::size_t>(pool.size(), n_s);
    // Partial Fisher-Yates.
    for (std::size_t t = 0; t < take; ++t) {
      const std::size_t r = std::uniform_int_distribution<std::size_t>(t, pool.size() - 1)(rng);
      std::swap(pool[t], pool[r]);
      out.push_back(pool[t]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

HardSampleSet detect_hard_samples(const ScalarMap& u0, const ScalarMap& u1,
                                  const LabelMap& label, int n_s, std::uint64_t seed) {
  if (u0.shape != u1.shape || u0.shape != label.shape())
    throw Error(ErrorKind::kDimensionMismatch, "uncertainty maps and label are not aligned");
  HardSampleSet out;
  out.per_class_counts.assign(label.classes(), 0);
  for (std::size_t i = 0; i < u0.size(); ++i)
    if (u1[i] <= u0[i]) {
      out.indices.push_back(i);
      ++out.per_class_counts[label[i]];
    }
  out.sampled = class_balanced_sample(out.indices, label, n_s, seed);
  return out;
}

void NoisePassBundle::validate() const {
  if (u0.shape != u1.shape || u0.shape != u2.shape)
    throw Error(ErrorKind::kDimensionMismatch, "noise pass maps differ in shape");
  if (!(mu1 < mu2)) throw Error(ErrorKind::kInvalidArgument, "noise bundle needs mu1 < mu2");
}

NoiseLoss noise_supervision_loss(const NoisePassBundle& bundle, const BoundaryGeometry& geom,
                                 const std::vector<std::size_t>& sampled, double d0) {
  bundle.validate();
  if (bundle.u0.shape != geom.shape)
    throw Error(ErrorKind::kDimensionMismatch, "bundle and geometry differ");
  NoiseLoss out;
  for (auto& g : out.grad) g.assign(bundle.u0.size(), 0.0);
  if (sampled.empty()) return out;
  const double scale = 1.0 / sampled.size();
  const double dmu = bundle.mu2 - bundle.mu1;
  for (std::size_t i : sampled) {
    if (geom.distance[i] <= d0) {
      const double m = -dmu * (bundle.u2[i] - bundle.u1[i]);
      if (m > 0.0) {
        out.near += scale * m;
        out.grad[2][i] -= scale * dmu;
        out.grad[1][i] += scale * dmu;
      }
    } else {
      out.far += scale * (bundle.u0[i] + bundle.u1[i] + bundle.u2[i]);
      out.grad[0][i] += scale;
      out.grad[1][i] += scale;
      out.grad[2][i] += scale;
    }
  }
  out.value = out.near + out.far;
  return out;
}

NoisedImages make_noised_pair(const ImageSlice& img, const SupervisionConfig& cfg,
                              std::uint64_t seed) {
  NoiseSpec n1{cfg.mu1, cfg.noise_stddev, NoiseMode::kGlobal, std::nullopt, seed};
  NoiseSpec n2{cfg.mu2, cfg.noise_stddev, NoiseMode::kGlobal, std::nullopt, seed + 1};
  return {imageops::apply_noise(img, n1), imageops::apply_noise(img, n2)};
}

NoisePassBundle build_noise_passes(const ImageSlice& img, const EvidenceModel& model,
                                   const SupervisionConfig& cfg, std::uint64_t seed) {
  auto checked = [&](const ImageSlice& x) {
    EvidenceMap e = model.infer(x);
    if (e.shape() != img.shape() || e.classes() != model.classes())
      throw Error(ErrorKind::kDimensionMismatch, "model output does not match the image");
    return edl::uncertainty(e);
  };
  const NoisedImages noised = make_noised_pair(img, cfg, seed);
  NoisePassBundle b;
  b.u0 = checked(img);
  b.u1 = checked(noised.noised1);
  b.u2 = checked(noised.noised2);
  b.mu1 = cfg.mu1;
  b.mu2 = cfg.mu2;
  return b;
}

}  // namespace evidseg::supervision
