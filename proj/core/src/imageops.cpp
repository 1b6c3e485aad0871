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

#include "evidseg/imageops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace evidseg::imageops {

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 0.0) throw Error(ErrorKind::kInvalidArgument, "sigma must be >= 0");
  if (sigma == 0.0) return {};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    taps[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += taps[t + radius];
  }
  for (double& w : taps) w /= sum;
  return taps;
}

int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

ImageSlice gaussian_smooth(const ImageSlice& img, double sigma) {
  const auto taps = gaussian_kernel(sigma);
  if (taps.empty()) return img;
  const int radius = static_cast<int>(taps.size() / 2);
  const int h = img.height(), w = img.width();
  std::vector<double> tmp(img.pixels()), out(img.pixels());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t)
        acc += taps[t + radius] * img.at(r, reflect_index(c + t, w));
      tmp[static_cast<std::size_t>(r) * w + c] = acc;
    }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t)
        acc += taps[t + radius] * tmp[static_cast<std::size_t>(reflect_index(r + t, h)) * w + c];
      // Rounding can push a convex combination of [0,1] values a hair outside.
      out[static_cast<std::size_t>(r) * w + c] = std::clamp(acc, 0.0, 1.0);
    }
  return ImageSlice(img.shape(), std::move(out));
}

ScalarMap gradient_magnitude(const ImageSlice& img) {
  const int h = img.height(), w = img.width();
  ScalarMap g(img.shape(), 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double gx, gy;
      if (c == 0) gx = img.at(r, 1) - img.at(r, 0);
      else if (c == w - 1) gx = img.at(r, w - 1) - img.at(r, w - 2);
      else gx = 0.5 * (img.at(r, c + 1) - img.at(r, c - 1));
      if (r == 0) gy = img.at(1, c) - img.at(0, c);
      else if (r == h - 1) gy = img.at(h - 1, c) - img.at(h - 2, c);
      else gy = 0.5 * (img.at(r + 1, c) - img.at(r - 1, c));
      g.values[img.shape().index(r, c)] = std::sqrt(gx * gx + gy * gy);
    }
  return g;
}

ScalarMap smoothed_gradient(const ImageSlice& img, double sigma) {
  return gradient_magnitude(gaussian_smooth(img, sigma));
}

std::vector<bool> raw_boundary(const LabelMap& label) {
  const Shape& s = label.shape();
  std::vector<bool> marked(s.pixels(), false);
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c) {
      const int l = label.at(r, c);
      const bool edge = (r > 0 && label.at(r - 1, c) != l) ||
                        (r + 1 < s.height && label.at(r + 1, c) != l) ||
                        (c > 0 && label.at(r, c - 1) != l) ||
                        (c + 1 < s.width && label.at(r, c + 1) != l);
      marked[s.index(r, c)] = edge;
    }
  return marked;
}

namespace {

// Squared distance lower envelope along one line (Felzenszwalb-Huttenlocher).
// Infinite samples take no part in the envelope.
void envelope_1d(const std::vector<double>& f, std::vector<double>& d,
                 std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  auto meet = [&](int q, int p) {
    return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
  };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = meet(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = meet(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::vector<double> distance_transform(const Shape& shape, const std::vector<bool>& marked) {
  const double inf = std::numeric_limits<double>::infinity();
  const int h = shape.height, w = shape.width;
  std::vector<double> sq(shape.pixels());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = marked[i] ? 0.0 : inf;

  const int n = std::max(h, w);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  std::vector<double> f, d;

  f.resize(h);
  d.resize(h);
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) f[r] = sq[shape.index(r, c)];
    envelope_1d(f, d, v, z);
    for (int r = 0; r < h; ++r) sq[shape.index(r, c)] = d[r];
  }
  f.resize(w);
  d.resize(w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) f[c] = sq[shape.index(r, c)];
    envelope_1d(f, d, v, z);
    for (int c = 0; c < w; ++c) sq[shape.index(r, c)] = d[c];
  }
  for (double& x : sq) x = x == inf ? inf : std::sqrt(x);
  return sq;
}

BoundaryGeometry extract_boundary_geometry(const LabelMap& label, double boundary_radius) {
  if (!(boundary_radius >= 0.0))
    throw Error(ErrorKind::kInvalidArgument, "boundary radius must be >= 0");
  BoundaryGeometry geom;
  geom.shape = label.shape();
  geom.radius = boundary_radius;
  geom.distance = distance_transform(label.shape(), raw_boundary(label));
  for (std::size_t i = 0; i < geom.distance.size(); ++i)
    if (geom.distance[i] <= boundary_radius) geom.boundary.push_back(i);
  return geom;
}

BoundaryGeometry make_geometry(const ImageSlice& img, const LabelMap& label,
                               double boundary_radius, double gradient_sigma) {
  if (img.shape() != label.shape())
    throw Error(ErrorKind::kDimensionMismatch, "image and label shapes differ");
  BoundaryGeometry geom = extract_boundary_geometry(label, boundary_radius);
  geom.gradient = smoothed_gradient(img, gradient_sigma).values;
  return geom;
}

std::vector<double> noise_field(const Shape& shape, const NoiseSpec& spec) {
  spec.validate(shape);
  std::vector<double> field(shape.pixels(), 0.0);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(spec.mean, spec.stddev);
  auto draw = [&] { return spec.stddev == 0.0 ? spec.mean : normal(rng); };
  if (spec.mode == NoiseMode::kGlobal) {
    for (double& x : field) x = draw();
  } else {
    const PatchBox& b = *spec.patch;
    for (int r = b.row; r < b.row + b.height; ++r)
      for (int c = b.col; c < b.col + b.width; ++c) field[shape.index(r, c)] = draw();
  }
  return field;
}

ImageSlice apply_noise(const ImageSlice& img, const NoiseSpec& spec) {
  const auto field = noise_field(img.shape(), spec);
  std::vector<double> out(img.pixels());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(img[i] + field[i], 0.0, 1.0);
  return ImageSlice(img.shape(), std::move(out));
}

}  // namespace evidseg::imageops
