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

#include <cmath>
#include <numeric>
#include <random>

#include "evidseg/imageops.hpp"
#include "evidseg/metrics.hpp"
#include "oracles.hpp"

using namespace evidseg;
namespace mx = evidseg::metrics;

namespace {

const Shape k8{8, 8};

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

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, int levels = 0) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = levels ? std::floor(U(rng) * levels) : U(rng);
  return v;
}

LabelMap mask(Shape s, int r0, int c0, int side, int K = 2) {
  std::vector<std::uint8_t> v(s.pixels(), 0);
  for (int y = r0; y < r0 + side; ++y)
    for (int x = c0; x < c0 + side; ++x) v[s.index(y, x)] = 1;
  return LabelMap(s, K, v);
}

}  // namespace

TEST_CASE("spearman closed forms and errors") {
  CHECK(mx::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(mx::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(mx::spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
  CHECK(mx::fractional_ranks(std::vector<double>{5, 1, 5, 3}) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("spearman matches rank-then-Pearson with ties, is symmetric and monotone invariant") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 3 + t;
    const auto x = random_vec(rng, n, t % 2 ? 5 : 0), y = random_vec(rng, n, 4);
    double r;
    try {
      r = mx::spearman(x, y);
    } catch (const Error&) {
      continue;
    }
    CHECK(std::abs(r - oracle::spearman(x, y)) <= 1e-12);
    CHECK(mx::spearman(y, x) == doctest::Approx(r).epsilon(1e-14));
    std::vector<double> fx(x.size()), gx(x.size());
    for (std::size_t i = 0; i < n; ++i) {
      fx[i] = std::exp(3 * x[i]);
      gx[i] = x[i] * x[i] * x[i] - 7;
    }
    if (t % 2 == 0) {
      CHECK(mx::spearman(x, fx) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(mx::spearman(x, gx) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("UCC_g: anti-monotone is -1, independent is near 0") {
  std::vector<std::size_t> B(40);
  for (std::size_t k = 0; k < 40; ++k) B[k] = k;
  std::mt19937_64 rng(2);
  const auto g = random_vec(rng, 40);
  ScalarMap u(k8, 0.0);
  for (std::size_t k = 0; k < 40; ++k) u.values[k] = 2.0 - g[k];
  CHECK(mx::ucc_gradient(u, geometry(B, g)) == doctest::Approx(-1.0));

  const Shape big{100, 100};
  std::vector<std::size_t> all(big.pixels());
  std::iota(all.begin(), all.end(), 0);
  const auto g2 = random_vec(rng, all.size());
  const ScalarMap u2(big, random_vec(rng, all.size()));
  CHECK(std::abs(mx::ucc_gradient(u2, geometry(all, g2, big))) < 0.05);
}

TEST_CASE("UCC_mu and UR_mu on constructed sweeps") {
  BoundaryGeometry geo = geometry({}, {});
  for (std::size_t i = 0; i < 64; ++i) geo.distance[i] = i < 40 ? 2.0 : 9.0;
  std::vector<mx::NoiseLevel> up, down, flat;
  for (double mu : mx::kDefaultSweep) {
    ScalarMap a(k8, mu), b(k8, 1.0 - mu);
    up.push_back({mu, a});
    down.push_back({mu, b});
    flat.push_back({mu, ScalarMap(k8, 0.4)});
  }
  CHECK(mx::ucc_noise(up, geo, 4.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(mx::ucc_noise(flat, geo, 4.0), Error);
  CHECK(mx::ur_noise(up, geo, 4.0) == 1.0);
  CHECK(mx::ur_noise(down, geo, 4.0) == 0.0);
  CHECK(mx::ur_noise(flat, geo, 4.0) == 1.0);
  BoundaryGeometry far = geo;
  for (double& d : far.distance) d = 50.0;
  CHECK_THROWS_AS(mx::ucc_noise(up, far, 4.0), Error);
}

TEST_CASE("UR_g closed forms, oracle and complement") {
  const auto geo = geometry({0, 1}, {1, 2});
  ScalarMap u(k8, 0.0);
  u.values = std::vector<double>(64, 0.0);
  u.values[0] = 2;
  u.values[1] = 1;
  CHECK(mx::ur_gradient(u, geo).ratio == 1.0);
  u.values[0] = 1;
  u.values[1] = 2;
  CHECK(mx::ur_gradient(u, geo).ratio == 0.0);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::size_t> B(30);
    for (std::size_t k = 0; k < 30; ++k) B[k] = 2 * k;
    const auto g = random_vec(rng, 30), uu = random_vec(rng, 30);
    ScalarMap um(k8, 0.0);
    for (std::size_t k = 0; k < 30; ++k) um.values[B[k]] = uu[k];
    const auto r = mx::ur_gradient(um, geometry(B, g));
    CHECK(std::abs(r.ratio - oracle::pair_ratio(uu, g)) <= 1e-12);
    double violating = 0, all = 0;
    for (std::size_t i = 0; i < 30; ++i)
      for (std::size_t j = 0; j < 30; ++j)
        if (i != j) {
          ++all;
          violating += (uu[i] - uu[j]) * (g[i] - g[j]) > 0;
        }
    CHECK(r.ties == 0.0);
    CHECK(r.ratio + violating / all == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("UR_g of independent maps is 0.5 under pair sampling") {
  const Shape s{64, 64};
  std::vector<std::size_t> B(s.pixels());
  std::iota(B.begin(), B.end(), 0);
  std::mt19937_64 rng(4);
  const auto g = random_vec(rng, B.size());
  const ScalarMap u(s, random_vec(rng, B.size()));
  const auto r = mx::ur_gradient(u, geometry(B, g, s), 100000, 7);
  CHECK(r.sampled);
  CHECK(std::abs(r.ratio - 0.5) <= 0.01);
  CHECK(mx::ur_gradient(u, geometry(B, g, s), 100000, 7).ratio == r.ratio);
}

TEST_CASE("DSC closed forms and symmetry") {
  const Shape s{10, 10};
  const LabelMap a = mask(s, 0, 0, 3);
  CHECK(mx::dsc(a, a).mean == 1.0);
  CHECK(mx::dsc(a, mask(s, 5, 5, 3)).mean == 0.0);
  // 10-pixel masks sharing 6 pixels.
  std::vector<std::uint8_t> p(100, 0), q(100, 0);
  for (int i = 0; i < 10; ++i) p[i] = 1;
  for (int i = 4; i < 14; ++i) q[i] = 1;
  CHECK(mx::dsc(LabelMap(s, 2, p), LabelMap(s, 2, q)).mean == doctest::Approx(0.6));
  const LabelMap empty(s, 3, std::vector<std::uint8_t>(100, 0));
  CHECK(mx::dsc(empty, empty).mean == 1.0);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const LabelMap x = oracle::random_label(rng, 10, 10, 3), y = oracle::random_label(rng, 10, 10, 3);
    CHECK(mx::dsc(x, y).mean == mx::dsc(y, x).mean);
  }
}

TEST_CASE("HD95: identity, shifted square, brute-force oracle") {
  const Shape s{24, 24};
  const LabelMap a = mask(s, 5, 5, 8);
  CHECK(mx::hd95(a, a).value == 0.0);
  CHECK(mx::hd95(a, mask(s, 5, 8, 8)).value == doctest::Approx(3.0));
  CHECK(mx::hd95(a, mask(s, 5, 8, 8)).value == oracle::hd95(a, mask(s, 5, 8, 8)));

  std::mt19937_64 rng(6);
  for (int t = 0; t < 30; ++t) {
    const LabelMap p = oracle::random_label(rng, 12, 14, 3, t % 3 != 0);
    const LabelMap q = oracle::random_label(rng, 12, 14, 3, t % 3 != 1);
    const auto h = mx::hd95(p, q);
    const double ref = oracle::hd95(p, q);
    if (std::isnan(ref)) {
      CHECK_FALSE(h.defined());
    } else {
      CHECK(std::abs(h.value - ref) <= 1e-12);
    }
  }
}

TEST_CASE("HD95 skips and flags classes with an empty mask") {
  const Shape s{12, 12};
  const LabelMap truth = mask(s, 2, 2, 4, 3);
  std::vector<std::uint8_t> v(truth.labels());
  v[0] = 2;
  const LabelMap pred(s, 3, v);
  const auto h = mx::hd95(truth, pred);
  CHECK(h.skipped == std::vector<int>{2});
  CHECK(h.defined());
  CHECK(std::isnan(h.per_class[1]));
}

TEST_CASE("ECE closed forms and oracle") {
  const Shape s{8, 8};
  std::vector<std::uint8_t> lab(64);
  for (int i = 0; i < 64; ++i) lab[i] = i % 2;
  const LabelMap truth(s, 2, lab);
  std::vector<double> right(128), half(128);
  for (int i = 0; i < 64; ++i) {
    right[2 * i + lab[i]] = 1.0;
    half[2 * i + 1] = 1.0;  // always predicts class 1
  }
  CHECK(mx::ece(right, 2, truth, 10) == 0.0);
  CHECK(mx::ece(half, 2, truth, 10) == doctest::Approx(0.5));

  std::mt19937_64 rng(7);
  for (int t = 0; t < 30; ++t) {
    const int K = 2 + t % 3;
    const LabelMap y = oracle::random_label(rng, 8, 8, K, false);
    std::vector<double> p(64 * K);
    for (int i = 0; i < 64; ++i) {
      double sum = 0;
      for (int k = 0; k < K; ++k) sum += p[i * K + k] = std::exp(4 * std::uniform_real_distribution<double>()(rng));
      for (int k = 0; k < K; ++k) p[i * K + k] /= sum;
    }
    const double e = mx::ece(p, K, y, 10);
    CHECK(std::abs(e - oracle::ece(p, K, y, 10)) <= 1e-12);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}

TEST_CASE("UEO closed forms and threshold sweep oracle") {
  const Shape s{8, 8};
  const LabelMap truth = mask(s, 0, 0, 4);
  const LabelMap pred = mask(s, 1, 1, 4);
  ScalarMap u(s, 0.0);
  for (std::size_t i = 0; i < 64; ++i) u.values[i] = pred[i] != truth[i] ? 1.0 : 0.0;
  CHECK(mx::ueo(u, pred, truth).value == 1.0);
  CHECK(mx::ueo(ScalarMap(s, 0.0), pred, truth).value == 0.0);
  const auto degenerate = mx::ueo(ScalarMap(s, 0.0), truth, truth);
  CHECK(degenerate.value == 1.0);
  CHECK(degenerate.degenerate);

  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const LabelMap a = oracle::random_label(rng, 8, 8, 3), b = oracle::random_label(rng, 8, 8, 3);
    const ScalarMap uu(s, random_vec(rng, 64));
    CHECK(std::abs(mx::ueo(uu, a, b).value - oracle::ueo(uu.values, a, b)) <= 1e-12);
  }
}

TEST_CASE("robustness deltas") {
  const std::vector<double> mus{0.0, 0.1, 0.3};
  const auto flat = mx::robustness_deltas(mus, std::vector<double>{0.8, 0.8, 0.8});
  CHECK(flat.size() == 3);
  for (const auto& d : flat) CHECK(d.value == 0.0);
  const auto d = mx::robustness_deltas(mus, std::vector<double>{0.95, 0.90, 0.85});
  bool found = false;
  for (const auto& x : d)
    if (x.mu_hi == 0.3 && x.mu_lo == 0.1) {
      CHECK(x.value == doctest::Approx(-0.05));
      found = true;
    }
  CHECK(found);
  for (const auto& x : d) CHECK(x.mu_hi > x.mu_lo);
  CHECK(mx::mean_abs_delta(d) == doctest::Approx((0.05 + 0.10 + 0.05) / 3));
  CHECK(mx::robustness_deltas(std::vector<double>{0.5}, std::vector<double>{0.7}).empty());
}

TEST_CASE("boundary geometry UCC on a real label") {
  std::mt19937_64 rng(9);
  const LabelMap lab = oracle::random_label(rng, 16, 16, 3);
  const ImageSlice img = oracle::random_image(rng, 16, 16);
  const auto geo = imageops::make_geometry(img, lab, 1.0, 1.0);
  if (geo.boundary.size() < 2) return;
  ScalarMap u(lab.shape(), 0.0);
  for (std::size_t i : geo.boundary) u.values[i] = 1.0 - geo.gradient[i];
  CHECK(mx::ucc_gradient(u, geo) == doctest::Approx(-1.0));
  CHECK(mx::ur_gradient(u, geo).ratio == 1.0);
}
