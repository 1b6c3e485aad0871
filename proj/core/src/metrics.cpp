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

#include "evidseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "evidseg/imageops.hpp"
#include "evidseg/supervision.hpp"

namespace evidseg::metrics {

std::vector<double> fractional_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorKind::kDimensionMismatch, "spearman inputs differ in length");
  if (x.size() < 2) throw Error(ErrorKind::kUndefined, "spearman needs at least two points");
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mx, b = ry[i] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw Error(ErrorKind::kUndefined, "spearman undefined: zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double ucc_gradient(const ScalarMap& u, const BoundaryGeometry& geom) {
  if (!geom.has_gradient())
    throw Error(ErrorKind::kInvalidArgument, "geometry carries no gradient map");
  std::vector<double> g, uu;
  for (std::size_t i : geom.boundary) {
    g.push_back(geom.gradient[i]);
    uu.push_back(u[i]);
  }
  return spearman(g, uu);
}

namespace {

std::vector<std::size_t> near_pixels(const BoundaryGeometry& geom, double d0) {
  std::vector<std::size_t> near;
  for (std::size_t i = 0; i < geom.distance.size(); ++i)
    if (geom.distance[i] <= d0) near.push_back(i);
  return near;
}

}  // namespace

double ucc_noise(std::span<const NoiseLevel> sweep, const BoundaryGeometry& geom, double d0) {
  if (sweep.size() < 2) throw Error(ErrorKind::kUndefined, "UCC_mu needs >= 2 noise levels");
  const auto near = near_pixels(geom, d0);
  if (near.empty()) throw Error(ErrorKind::kUndefined, "no pixels within d0 of a boundary");
  std::vector<double> mus, us;
  for (const auto& level : sweep)
    for (std::size_t i : near) {
      mus.push_back(level.mu);
      us.push_back(level.u[i]);
    }
  return spearman(mus, us);
}

PairRatio ur_gradient(const ScalarMap& u, const BoundaryGeometry& geom, std::size_t cap,
                      std::uint64_t seed) {
  if (!geom.has_gradient())
    throw Error(ErrorKind::kInvalidArgument, "geometry carries no gradient map");
  const auto& B = geom.boundary;
  const std::size_t n = B.size();
  if (n < 2) throw Error(ErrorKind::kUndefined, "UR_g needs at least two boundary pixels");
  const auto& g = geom.gradient;
  std::uint64_t good = 0, tied = 0, seen = 0;
  auto visit = [&](std::size_t a, std::size_t b) {
    const double p = (g[B[a]] - g[B[b]]) * (u[B[a]] - u[B[b]]);
    ++seen;
    if (p <= 0.0) ++good;
    if (p == 0.0) ++tied;
  };
  PairRatio out;
  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1);
  if (total <= cap) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) visit(a, b);
  } else {
    out.sampled = true;
    for (const auto& [a, b] : supervision::sample_ordered_pairs(n, cap, seed)) visit(a, b);
  }
  out.ratio = static_cast<double>(good) / seen;
  out.ties = static_cast<double>(tied) / seen;
  return out;
}

double ur_noise(std::span<const NoiseLevel> sweep, const BoundaryGeometry& geom, double d0) {
  if (sweep.size() < 2) throw Error(ErrorKind::kUndefined, "UR_mu needs >= 2 noise levels");
  const auto near = near_pixels(geom, d0);
  if (near.empty()) throw Error(ErrorKind::kUndefined, "no pixels within d0 of a boundary");
  std::uint64_t good = 0, seen = 0;
  for (std::size_t a = 0; a < sweep.size(); ++a)
    for (std::size_t b = 0; b < sweep.size(); ++b) {
      if (a == b) continue;
      const double dmu = sweep[a].mu - sweep[b].mu;
      for (std::size_t i : near) {
        ++seen;
        if (dmu * (sweep[a].u[i] - sweep[b].u[i]) >= 0.0) ++good;
      }
    }
  return static_cast<double>(good) / seen;
}

DiceScore dsc(const LabelMap& pred, const LabelMap& truth) {
  if (pred.shape() != truth.shape() || pred.classes() != truth.classes())
    throw Error(ErrorKind::kDimensionMismatch, "prediction and truth disagree");
  const int K = truth.classes();
  std::vector<std::size_t> a(K, 0), b(K, 0), both(K, 0);
  for (std::size_t i = 0; i < pred.pixels(); ++i) {
    ++a[pred[i]];
    ++b[truth[i]];
    if (pred[i] == truth[i]) ++both[pred[i]];
  }
  DiceScore out;
  for (int k = 1; k < K; ++k) {
    const std::size_t denom = a[k] + b[k];
    out.per_class.push_back(denom == 0 ? 1.0 : 2.0 * both[k] / denom);
  }
  out.mean = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) /
             out.per_class.size();
  return out;
}

std::vector<bool> surface(const Shape& shape, const std::vector<bool>& mask) {
  std::vector<bool> out(mask.size(), false);
  auto in = [&](int r, int c) {
    return r >= 0 && c >= 0 && r < shape.height && c < shape.width && mask[shape.index(r, c)];
  };
  for (int r = 0; r < shape.height; ++r)
    for (int c = 0; c < shape.width; ++c)
      if (in(r, c))
        out[shape.index(r, c)] = !in(r - 1, c) || !in(r + 1, c) || !in(r, c - 1) || !in(r, c + 1);
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::kUndefined, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Hd95Result hd95(const LabelMap& pred, const LabelMap& truth) {
  if (pred.shape() != truth.shape() || pred.classes() != truth.classes())
    throw Error(ErrorKind::kDimensionMismatch, "prediction and truth disagree");
  const Shape& shape = truth.shape();
  Hd95Result out;
  double sum = 0.0;
  int evaluated = 0;
  for (int k = 1; k < truth.classes(); ++k) {
    std::vector<bool> a(shape.pixels()), b(shape.pixels());
    bool any_a = false, any_b = false;
    for (std::size_t i = 0; i < shape.pixels(); ++i) {
      a[i] = pred[i] == k;
      b[i] = truth[i] == k;
      any_a = any_a || a[i];
      any_b = any_b || b[i];
    }
    if (!any_a || !any_b) {
      out.skipped.push_back(k);
      out.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const auto sa = surface(shape, a), sb = surface(shape, b);
    const auto da = imageops::distance_transform(shape, sa);
    const auto db = imageops::distance_transform(shape, sb);
    std::vector<double> pooled;
    for (std::size_t i = 0; i < shape.pixels(); ++i) {
      if (sa[i]) pooled.push_back(db[i]);
      if (sb[i]) pooled.push_back(da[i]);
    }
    const double v = percentile(std::move(pooled), 0.95);
    out.per_class.push_back(v);
    sum += v;
    ++evaluated;
  }
  out.value = evaluated > 0 ? sum / evaluated : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double ece(std::span<const double> probs, int classes, const LabelMap& truth, int bins) {
  if (bins < 1) throw Error(ErrorKind::kInvalidArgument, "ECE needs at least one bin");
  const std::size_t V = truth.pixels();
  if (probs.size() != V * classes)
    throw Error(ErrorKind::kDimensionMismatch, "probabilities are not V x K");
  std::vector<double> conf(bins, 0.0), hits(bins, 0.0), count(bins, 0.0);
  for (std::size_t i = 0; i < V; ++i) {
    int best = 0;
    for (int k = 1; k < classes; ++k)
      if (probs[i * classes + k] > probs[i * classes + best]) best = k;
    const double c = probs[i * classes + best];
    const int b = std::min(static_cast<int>(c * bins), bins - 1);
    conf[b] += c;
    hits[b] += best == truth[i] ? 1.0 : 0.0;
    count[b] += 1.0;
  }
  double out = 0.0;
  for (int b = 0; b < bins; ++b)
    if (count[b] > 0.0) out += std::abs(hits[b] - conf[b]) / static_cast<double>(V);
  return std::clamp(out, 0.0, 1.0);
}

UeoResult ueo(const ScalarMap& u, const LabelMap& pred, const LabelMap& truth, double step) {
  if (u.shape != truth.shape() || pred.shape() != truth.shape())
    throw Error(ErrorKind::kDimensionMismatch, "UEO inputs are not aligned");
  if (!(step > 0.0 && step < 1.0)) throw Error(ErrorKind::kInvalidArgument, "bad UEO step");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < truth.pixels(); ++i) errors += pred[i] != truth[i];
  UeoResult out;
  const int n = static_cast<int>(std::floor((1.0 - 1e-12) / step));
  bool all_empty = true;
  for (int t = 1; t <= n; ++t) {
    const double tau = t * step;
    std::size_t above = 0, overlap = 0;
    for (std::size_t i = 0; i < truth.pixels(); ++i)
      if (u[i] >= tau) {
        ++above;
        overlap += pred[i] != truth[i];
      }
    double d;
    if (above + errors == 0) {
      d = 1.0;
    } else {
      all_empty = false;
      d = 2.0 * overlap / static_cast<double>(above + errors);
    }
    if (d > out.value || t == 1) {
      out.value = d;
      out.best_threshold = tau;
    }
  }
  out.degenerate = all_empty;
  return out;
}

std::vector<Delta> robustness_deltas(std::span<const double> mus, std::span<const double> scores) {
  if (mus.size() != scores.size())
    throw Error(ErrorKind::kDimensionMismatch, "one score per noise level expected");
  std::vector<Delta> out;
  for (std::size_t a = 0; a < mus.size(); ++a)
    for (std::size_t b = 0; b < mus.size(); ++b)
      if (mus[a] > mus[b]) out.push_back({mus[a], mus[b], scores[a] - scores[b]});
  std::sort(out.begin(), out.end(), [](const Delta& x, const Delta& y) {
    return x.mu_lo != y.mu_lo ? x.mu_lo < y.mu_lo : x.mu_hi < y.mu_hi;
  });
  return out;
}

double mean_abs_delta(std::span<const Delta> deltas) {
  if (deltas.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : deltas) s += std::abs(d.value);
  return s / deltas.size();
}

}  // namespace evidseg::metrics
