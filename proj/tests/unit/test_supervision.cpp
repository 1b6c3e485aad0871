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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "evidseg/imageops.hpp"
#include "evidseg/network.hpp"
#include "evidseg/supervision.hpp"
#include "oracles.hpp"

using namespace evidseg;
namespace sv = evidseg::supervision;

namespace {

const Shape k8{8, 8};

// Geometry with the given boundary pixels and gradient values; distances
// default to 0 on B and 10 elsewhere.
BoundaryGeometry geometry(const std::vector<std::size_t>& B, const std::vector<double>& g,
                          Shape s = k8) {
  BoundaryGeometry geo;
  geo.shape = s;
  geo.boundary = B;
  geo.distance.assign(s.pixels(), 10.0);
  geo.gradient.assign(s.pixels(), 0.0);
  for (std::size_t n = 0; n < B.size(); ++n) {
    geo.distance[B[n]] = 0.0;
    geo.gradient[B[n]] = g[n];
  }
  return geo;
}

ScalarMap field(const std::vector<std::size_t>& idx, const std::vector<double>& v,
                double fill = 0.5, Shape s = k8) {
  ScalarMap m(s, fill);
  for (std::size_t n = 0; n < idx.size(); ++n) m.values[idx[n]] = v[n];
  return m;
}

// A model whose evidence depends only on the pixel intensity.
class IntensityModel : public sv::EvidenceModel {
 public:
  EvidenceMap infer(const ImageSlice& img) const override {
    std::vector<double> e;
    for (double v : img.values()) {
      e.push_back(4.0 * v);
      e.push_back(4.0 * (1.0 - v));
    }
    return EvidenceMap(img.shape(), 2, e);
  }
  int classes() const override { return 2; }
};

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = U(rng);
  return v;
}

}  // namespace

TEST_CASE("L_gu worked example: two boundary pixels") {
  const auto geo = geometry({3, 17}, {0.9, 0.1});
  const auto l = sv::gradient_supervision_loss(field({3, 17}, {0.8, 0.2}), geo, 1000);
  CHECK(l.value == doctest::Approx(0.48).epsilon(1e-14));
  const auto z = sv::gradient_supervision_loss(field({3, 17}, {0.2, 0.8}), geo, 1000);
  CHECK(z.value == 0.0);
}

TEST_CASE("L_gu empty boundary contributes nothing and is flagged") {
  const auto l = sv::gradient_supervision_loss(ScalarMap(k8, 0.3), geometry({}, {}), 100);
  CHECK(l.value == 0.0);
  CHECK(l.empty_boundary);
}

TEST_CASE("L_gu matches the double-loop oracle on 20 boundary pixels") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::size_t> B(20);
    for (std::size_t n = 0; n < 20; ++n) B[n] = 3 * n;
    const auto g = random_vec(rng, 20), u = random_vec(rng, 20);
    const auto l = sv::gradient_supervision_loss(field(B, u), geometry(B, g), 1000);
    CHECK_FALSE(l.sampled);
    CHECK(std::abs(l.value - oracle::pair_loss(u, g)) <= 1e-12);
  }
}

TEST_CASE("L_gu is zero iff no pair violates, and order independent") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + t % 29;
    std::vector<std::size_t> B(n);
    for (std::size_t k = 0; k < n; ++k) B[k] = 2 * k;
    auto g = random_vec(rng, n);
    auto u = random_vec(rng, n);
    if (t % 2 == 0)
      for (std::size_t k = 0; k < n; ++k) u[k] = 1.0 - g[k];  // anti-monotone
    bool violating = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        violating |= (u[i] - u[j]) * (g[i] - g[j]) > 0.0;
    const double v = sv::gradient_supervision_loss(field(B, u), geometry(B, g), 100000).value;
    CHECK((v == 0.0) == !violating);

    // Reassigning the (u, g) pairs to other boundary pixels leaves L_gu unchanged.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> u2(n), g2(n);
    for (std::size_t k = 0; k < n; ++k) {
      u2[k] = u[perm[k]];
      g2[k] = g[perm[k]];
    }
    const double w = sv::gradient_supervision_loss(field(B, u2), geometry(B, g2), 100000).value;
    CHECK(w == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("pair sampling: distinct ordered pairs, seeded") {
  const auto a = sv::sample_ordered_pairs(50, 500, 9);
  const auto b = sv::sample_ordered_pairs(50, 500, 9);
  CHECK(a == b);
  CHECK(a.size() == 500);
  std::set<sv::Pair> s(a.begin(), a.end());
  CHECK(s.size() == 500);
  for (const auto& [i, j] : a) {
    CHECK(i != j);
    CHECK(i < 50);
    CHECK(j < 50);
  }
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(sv::sample_ordered_pairs(4, 12, 1).size() == 12);
}

TEST_CASE("sampled L_gu is a rescaled estimate of the exhaustive sum") {
  std::mt19937_64 rng(3);
  const Shape s{16, 16};
  std::vector<std::size_t> B(120);
  for (std::size_t k = 0; k < B.size(); ++k) B[k] = 2 * k;
  const auto g = random_vec(rng, B.size()), u = random_vec(rng, B.size());
  const auto geo = geometry(B, g, s);
  const auto full = sv::gradient_supervision_loss(field(B, u, 0.5, s), geo, 1 << 20);
  const auto part = sv::gradient_supervision_loss(field(B, u, 0.5, s), geo, 6000, 4);
  CHECK(part.sampled);
  CHECK(part.value == doctest::Approx(full.value).epsilon(0.05));
}

TEST_CASE("hard samples: pointwise definition") {
  const LabelMap lab(k8, 2, std::vector<std::uint8_t>(64, 0));
  ScalarMap u0(k8, 0.5), u1(k8, 0.6);  // other pixels: strictly increasing
  u0.values[0] = 0.2;
  u1.values[0] = 0.1;
  u0.values[1] = 0.5;
  u1.values[1] = 0.7;
  const auto h = sv::detect_hard_samples(u0, u1, lab, 16, 1);
  CHECK(h.indices == std::vector<std::size_t>{0});

  ScalarMap up = u0;
  for (double& v : up.values) v += 0.1;
  CHECK(sv::detect_hard_samples(u0, up, lab, 16, 1).indices.empty());
  CHECK(sv::detect_hard_samples(u0, up, lab, 16, 1).sampled.empty());
}

TEST_CASE("hard samples: availability caps the per-class draw") {
  std::vector<std::uint8_t> v(64, 0);
  for (int i = 0; i < 20; ++i) v[i] = 1;
  for (int i = 20; i < 30; ++i) v[i] = 2;
  const LabelMap lab(k8, 3, v);
  ScalarMap u0(k8, 0.5), u1(k8, 0.9);
  // hard: 10 of class 0 (pixels 30..39), 10 of class 1, 2 of class 2
  for (int i : {30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 20, 21})
    u1.values[i] = 0.4;
  const auto h = sv::detect_hard_samples(u0, u1, lab, 5, 7);
  CHECK(h.indices.size() == 22);
  CHECK(h.per_class_counts == std::vector<std::size_t>{10, 10, 2});
  std::vector<std::size_t> drawn(3, 0);
  for (std::size_t i : h.sampled) ++drawn[lab[i]];
  CHECK(drawn == std::vector<std::size_t>{5, 5, 2});
  for (std::size_t i : h.sampled) CHECK(std::binary_search(h.indices.begin(), h.indices.end(), i));
}

TEST_CASE("hard samples equal the recomputed set comprehension") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const LabelMap lab = oracle::random_label(rng, 8, 8, 3, false);
    const ScalarMap u0(k8, random_vec(rng, 64)), u1(k8, random_vec(rng, 64));
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < 64; ++i)
      if (u1[i] <= u0[i]) expect.push_back(i);
    const auto h = sv::detect_hard_samples(u0, u1, lab, 4, t);
    CHECK(h.indices == expect);
    std::vector<std::size_t> per(3, 0);
    for (std::size_t i : h.sampled) ++per[lab[i]];
    for (int k = 0; k < 3; ++k) {
      std::size_t avail = 0;
      for (std::size_t i : expect) avail += lab[i] == k;
      CHECK(per[k] == std::min<std::size_t>(4, avail));
    }
    CHECK(sv::detect_hard_samples(u0, u1, lab, 4, t).sampled == h.sampled);
  }
}

TEST_CASE("L_nu worked examples") {
  BoundaryGeometry geo = geometry({}, {});
  geo.distance[5] = 2.0;
  geo.distance[6] = 10.0;
  sv::NoisePassBundle b{ScalarMap(k8, 0.0), ScalarMap(k8, 0.0), ScalarMap(k8, 0.0), 0.1, 0.3};
  b.u1.values[5] = 0.5;
  b.u2.values[5] = 0.4;
  CHECK(sv::noise_supervision_loss(b, geo, {5}, 4.0).value == doctest::Approx(0.02).epsilon(1e-14));
  b.u2.values[5] = 0.6;
  CHECK(sv::noise_supervision_loss(b, geo, {5}, 4.0).value == 0.0);
  b.u0.values[6] = 0.1;
  b.u1.values[6] = 0.2;
  b.u2.values[6] = 0.3;
  const auto far = sv::noise_supervision_loss(b, geo, {6}, 4.0);
  CHECK(far.value == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(far.far == far.value);
  CHECK(sv::noise_supervision_loss(b, geo, {}, 4.0).value == 0.0);
  sv::NoisePassBundle bad = b;
  bad.mu2 = bad.mu1;
  CHECK_THROWS_AS(sv::noise_supervision_loss(bad, geo, {5}, 4.0), Error);
}

TEST_CASE("L_nu near term vanishes when u2 >= u1; far term only for zero uncertainty") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    BoundaryGeometry geo = geometry({}, {});
    auto d = random_vec(rng, 64);
    for (std::size_t i = 0; i < 64; ++i) geo.distance[i] = 8.0 * d[i];
    const auto u1 = random_vec(rng, 64);
    auto u2 = u1;
    for (double& x : u2) x += 0.1 * std::uniform_real_distribution<double>(0, 1)(rng);
    sv::NoisePassBundle b{ScalarMap(k8, random_vec(rng, 64)), ScalarMap(k8, u1), ScalarMap(k8, u2),
                          0.1, 0.3};
    std::vector<std::size_t> S(64);
    std::iota(S.begin(), S.end(), 0);
    const auto l = sv::noise_supervision_loss(b, geo, S, 4.0);
    CHECK(l.near == 0.0);
    CHECK(l.far > 0.0);
    std::vector<std::size_t> near;
    for (std::size_t i = 0; i < 64; ++i)
      if (geo.distance[i] <= 4.0) near.push_back(i);
    sv::NoisePassBundle zero = b;
    for (std::size_t i = 0; i < 64; ++i)
      if (geo.distance[i] > 4.0) zero.u0.values[i] = zero.u1.values[i] = zero.u2.values[i] = 0.0;
    CHECK(sv::noise_supervision_loss(zero, geo, S, 4.0).far == 0.0);
  }
}

TEST_CASE("L_gu and L_nu gradients match finite differences away from kinks") {
  std::mt19937_64 rng(7);
  int checked = 0;
  while (checked < 10) {
    std::vector<std::size_t> B(10);
    for (std::size_t k = 0; k < 10; ++k) B[k] = 5 * k + 1;
    const auto g = random_vec(rng, 10), u = random_vec(rng, 10);
    double margin = 1.0;
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < i; ++j) margin = std::min(margin, std::abs((u[i] - u[j]) * (g[i] - g[j])));
    if (margin < 1e-3) continue;
    ++checked;
    const auto geo = geometry(B, g);
    const ScalarMap um = field(B, u);
    const auto l = sv::gradient_supervision_loss(um, geo, 1000);
    auto f = [&](const std::vector<double>& x) {
      return sv::gradient_supervision_loss(ScalarMap(k8, x), geo, 1000).value;
    };
    std::vector<double> num(64);
    for (std::size_t k = 0; k < 64; ++k) num[k] = oracle::central_diff(f, um.values, k, 1e-6);
    CHECK(oracle::relative_error(l.grad, num) < 1e-4);
  }

  for (int t = 0; t < 10; ++t) {
    BoundaryGeometry geo = geometry({}, {});
    for (std::size_t i = 0; i < 64; ++i) geo.distance[i] = i % 3 == 0 ? 8.0 : 1.0;
    auto u1 = random_vec(rng, 64), u2 = random_vec(rng, 64);
    for (std::size_t i = 0; i < 64; ++i)
      if (std::abs(u2[i] - u1[i]) < 1e-2) u2[i] = u1[i] + 0.05;
    sv::NoisePassBundle b{ScalarMap(k8, random_vec(rng, 64)), ScalarMap(k8, u1), ScalarMap(k8, u2),
                          0.1, 0.3};
    std::vector<std::size_t> S;
    for (std::size_t i = 0; i < 64; i += 2) S.push_back(i);
    const auto l = sv::noise_supervision_loss(b, geo, S, 4.0);
    for (int pass = 0; pass < 3; ++pass) {
      auto f = [&](const std::vector<double>& x) {
        sv::NoisePassBundle c = b;
        (pass == 0 ? c.u0 : pass == 1 ? c.u1 : c.u2).values = x;
        return sv::noise_supervision_loss(c, geo, S, 4.0).value;
      };
      const auto& base = (pass == 0 ? b.u0 : pass == 1 ? b.u1 : b.u2).values;
      std::vector<double> num(64);
      for (std::size_t k = 0; k < 64; ++k) num[k] = oracle::central_diff(f, base, k, 1e-6);
      CHECK(oracle::relative_error(l.grad[pass], num) < 1e-4);
    }
  }
}

TEST_CASE("noise passes with zero noise are bit-identical") {
  std::mt19937_64 rng(8);
  const ImageSlice img = oracle::random_image(rng, 12, 12);
  SupervisionConfig cfg;
  cfg.mu1 = cfg.mu2 = 0.0;
  cfg.noise_stddev = 0.0;
  const auto b = sv::build_noise_passes(img, IntensityModel{}, cfg, 3);
  CHECK(b.u0 == b.u1);
  CHECK(b.u1 == b.u2);
}

TEST_CASE("noise passes are reproducible and feed a finite, non-negative L_nu") {
  std::mt19937_64 rng(9);
  const ImageSlice img = oracle::random_image(rng, 16, 16);
  const LabelMap lab = oracle::random_label(rng, 16, 16, 3);
  const nn::UNet net(3, 4, 11);
  SupervisionConfig cfg;
  const auto a = sv::build_noise_passes(img, net, cfg, 5);
  const auto b = sv::build_noise_passes(img, net, cfg, 5);
  CHECK(a.u0 == b.u0);
  CHECK(a.u1 == b.u1);
  CHECK(a.u2 == b.u2);
  const auto geo = imageops::extract_boundary_geometry(lab, 1.0);
  const auto hard = sv::detect_hard_samples(a.u0, a.u1, lab, 16, 2);
  const auto l = sv::noise_supervision_loss(a, geo, hard.sampled, 4.0);
  CHECK(std::isfinite(l.value));
  CHECK(l.value >= 0.0);
}
