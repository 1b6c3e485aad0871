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

#include "evidseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "evidseg/imageops.hpp"
#include "evidseg/io.hpp"

namespace evidseg::synthdata {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Approximate signed distance to the ellipse outline, negative inside.
double signed_distance(const EllipseParams& e, double y, double x) {
  const double dy = y - e.cy, dx = x - e.cx;
  const double ct = std::cos(e.theta), st = std::sin(e.theta);
  const double u = ct * dx + st * dy;
  const double v = -st * dx + ct * dy;
  const double rho = std::hypot(u / e.a, v / e.b);
  if (rho < 1e-9) return -std::min(e.a, e.b);
  const double grad = std::hypot(u / (e.a * e.a), v / (e.b * e.b)) / rho;
  return (rho - 1.0) / grad;
}

// Soft inside-indicator of an edge blurred with a Gaussian of the given sigma.
double soft_inside(double sd, double sigma) {
  if (sigma <= 0.0) return sd < 0.0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(sd / (sigma * std::numbers::sqrt2));
}

bool separated(const std::vector<double>& means, double gap) {
  for (std::size_t i = 0; i < means.size(); ++i)
    for (std::size_t j = i + 1; j < means.size(); ++j)
      if (std::abs(means[i] - means[j]) < gap) return false;
  return true;
}

struct Layout {
  std::vector<EllipseParams> ellipses;  // outer, inner, [blob]
  std::vector<int> classes_inside;      // class painted inside each ellipse
};

}  // namespace

void SceneSpec::validate() const {
  if (height < 16 || width < 16)
    throw Error(ErrorKind::kInvalidArgument, "scenes need at least 16x16 pixels");
  if (classes < 2 || classes > 4)
    throw Error(ErrorKind::kInvalidArgument, "scenes support K in [2, 4]");
  if (!(blur_min >= 0.0 && blur_min <= blur_max && blur_max <= 3.0))
    throw Error(ErrorKind::kInvalidArgument, "boundary blur must lie in [0, 3]");
  for (double b : fixed_blur)
    if (!(b >= 0.0 && b <= 3.0))
      throw Error(ErrorKind::kInvalidArgument, "boundary blur must lie in [0, 3]");
  if (!(texture_noise >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "texture_noise < 0");
  if (!(min_separation >= 0.15))
    throw Error(ErrorKind::kInvalidArgument, "region means need a separation >= 0.15");
  if (max_attempts < 1) throw Error(ErrorKind::kInvalidArgument, "max_attempts must be >= 1");
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int K = spec.classes;
  const Shape shape{spec.height, spec.width};
  const double side = std::min(spec.height, spec.width);
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  for (int attempt = 1; attempt <= spec.max_attempts; ++attempt) {
    Layout layout;
    EllipseParams outer;
    outer.cy = 0.5 * (spec.height - 1) + uni(-0.1, 0.1) * side;
    outer.cx = 0.5 * (spec.width - 1) + uni(-0.1, 0.1) * side;
    outer.a = uni(0.22, 0.32) * side;
    outer.b = uni(0.22, 0.32) * side;
    outer.theta = uni(0.0, std::numbers::pi);
    if (K == 2) {
      layout.ellipses = {outer};
      layout.classes_inside = {1};
    } else {
      EllipseParams inner = outer;
      const double f = uni(0.45, 0.65);
      inner.a *= f;
      inner.b *= f;
      inner.cy += uni(-0.03, 0.03) * side;
      inner.cx += uni(-0.03, 0.03) * side;
      layout.ellipses = {outer, inner};
      layout.classes_inside = {1, 2};
      if (K == 4) {
        EllipseParams blob;
        blob.a = uni(0.07, 0.12) * side;
        blob.b = uni(0.07, 0.12) * side;
        blob.theta = uni(0.0, std::numbers::pi);
        const double ang = uni(0.0, 2.0 * std::numbers::pi);
        const double reach = std::max(outer.a, outer.b) + std::max(blob.a, blob.b) + 3.0;
        blob.cy = outer.cy + reach * std::sin(ang);
        blob.cx = outer.cx + reach * std::cos(ang);
        layout.ellipses.push_back(blob);
        layout.classes_inside.push_back(3);
      }
    }

    // Labels from the exact shapes; later ellipses overwrite earlier ones.
    std::vector<std::uint8_t> labels(shape.pixels(), 0);
    bool clipped = false;
    for (int r = 0; r < shape.height; ++r)
      for (int c = 0; c < shape.width; ++c)
        for (std::size_t s = 0; s < layout.ellipses.size(); ++s)
          if (signed_distance(layout.ellipses[s], r, c) < 0.0) {
            labels[shape.index(r, c)] = static_cast<std::uint8_t>(layout.classes_inside[s]);
            if (r < 2 || c < 2 || r >= shape.height - 2 || c >= shape.width - 2) clipped = true;
          }
    if (clipped) continue;
    // The nested inner shape must sit strictly inside the ring, and the blob
    // must stay clear of it.
    bool overlap = false;
    if (K >= 3)
      for (int r = 0; r < shape.height && !overlap; ++r)
        for (int c = 0; c < shape.width && !overlap; ++c) {
          const double so = signed_distance(layout.ellipses[0], r, c);
          const double si = signed_distance(layout.ellipses[1], r, c);
          if (si < 2.0 && so > -2.0) overlap = true;
          if (K == 4 && signed_distance(layout.ellipses[2], r, c) < 3.0 && so < 0.0)
            overlap = true;
        }
    if (overlap) continue;
    LabelMap label(shape, K, labels);
    const auto counts = label.class_counts();
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    if (*lo == 0 || static_cast<double>(*hi) > 20.0 * static_cast<double>(*lo)) continue;

    std::vector<double> means;
    do {
      means.clear();
      for (int k = 0; k < K; ++k) means.push_back(uni(0.1, 0.9));
    } while (!separated(means, spec.min_separation));

    Provenance prov;
    prov.seed = seed;
    prov.attempts = attempt;
    prov.region_means = means;
    prov.ellipses = layout.ellipses;
    const char* names[] = {"ring_outer", "ring_inner", "blob"};
    for (std::size_t s = 0; s < layout.ellipses.size(); ++s) {
      BoundaryRecord rec;
      rec.name = K == 2 ? "blob" : names[s];
      rec.inside_class = layout.classes_inside[s];
      rec.outside_class = (K >= 3 && s == 1) ? 1 : 0;
      rec.blur_sigma = s < spec.fixed_blur.size() ? spec.fixed_blur[s]
                                                  : uni(spec.blur_min, spec.blur_max);
      prov.boundaries.push_back(rec);
    }

    std::normal_distribution<double> texture(0.0, spec.texture_noise);
    std::vector<double> raw(shape.pixels());
    for (int r = 0; r < shape.height; ++r)
      for (int c = 0; c < shape.width; ++c) {
        double v = means[0];
        for (std::size_t s = 0; s < layout.ellipses.size(); ++s) {
          const auto& rec = prov.boundaries[s];
          const double w = soft_inside(signed_distance(layout.ellipses[s], r, c), rec.blur_sigma);
          v += (means[rec.inside_class] - means[rec.outside_class]) * w;
        }
        raw[shape.index(r, c)] = v + (spec.texture_noise > 0.0 ? texture(rng) : 0.0);
      }
    ImageSlice normalized = ImageSlice::FromRaw(shape, raw);
    // Round to float so the on-disk float32 copy is exact.
    std::vector<double> stored(normalized.values().begin(), normalized.values().end());
    for (double& v : stored) v = static_cast<double>(static_cast<float>(v));
    return Scene{validate(ImageSlice(shape, std::move(stored)), std::move(label)), prov};
  }
  throw Error(ErrorKind::kInvalidArgument,
              "could not place non-overlapping shapes after " + std::to_string(spec.max_attempts) +
                  " attempts");
}

nlohmann::json to_json(const Provenance& p) {
  nlohmann::json ell = nlohmann::json::array();
  for (const auto& e : p.ellipses)
    ell.push_back({{"cy", e.cy}, {"cx", e.cx}, {"a", e.a}, {"b", e.b}, {"theta", e.theta}});
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : p.boundaries)
    bounds.push_back({{"name", b.name},
                      {"inside_class", b.inside_class},
                      {"outside_class", b.outside_class},
                      {"blur_sigma", b.blur_sigma}});
  return {{"seed", p.seed},
          {"attempts", p.attempts},
          {"region_means", p.region_means},
          {"ellipses", ell},
          {"boundaries", bounds}};
}

nlohmann::json to_json(const SceneSpec& s) {
  return {{"height", s.height},         {"width", s.width},
          {"K", s.classes},             {"blur_min", s.blur_min},
          {"blur_max", s.blur_max},     {"texture_noise", s.texture_noise},
          {"min_separation", s.min_separation}};
}

std::vector<std::size_t> boundary_pixels_between(const LabelMap& label, int a, int b) {
  const Shape& s = label.shape();
  std::vector<std::size_t> out;
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c) {
      const int l = label.at(r, c);
      if (l != a && l != b) continue;
      const int other = l == a ? b : a;
      if ((r > 0 && label.at(r - 1, c) == other) ||
          (r + 1 < s.height && label.at(r + 1, c) == other) ||
          (c > 0 && label.at(r, c - 1) == other) ||
          (c + 1 < s.width && label.at(r, c + 1) == other))
        out.push_back(s.index(r, c));
    }
  return out;
}

std::uint64_t sample_seed(std::uint64_t seed, const std::string& split, int index) {
  std::uint64_t tag = 0;
  for (unsigned char ch : split) tag = tag * 131 + ch;
  return splitmix64(splitmix64(seed ^ splitmix64(tag)) + static_cast<std::uint64_t>(index));
}

void build_dataset(const std::filesystem::path& root, const DatasetCounts& counts,
                   const SceneSpec& spec, std::uint64_t seed) {
  if (counts.train < 1 || counts.val < 1 || counts.test < 1)
    throw Error(ErrorKind::kInvalidArgument, "every split needs at least one sample");
  spec.validate();
  if (io::nonempty_dir(root))
    throw Error(ErrorKind::kIo, "refusing to write into nonempty directory " + root.string());
  std::filesystem::create_directories(root);
  const std::pair<const char*, int> splits[] = {
      {"train", counts.train}, {"val", counts.val}, {"test", counts.test}};
  for (const auto& [split, n] : splits) {
    const auto dir = root / split;
    std::filesystem::create_directories(dir);
    for (int i = 0; i < n; ++i) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "sample_%05d", i);
      const Scene scene = generate_scene(spec, sample_seed(seed, split, i));
      io::write_sample(dir, stem, scene.sample);
      io::write_json(dir / (std::string(stem) + ".provenance.json"), to_json(scene.provenance));
    }
  }
  io::write_json(root / "dataset.json",
                 {{"format", "evidseg-dataset-v1"},
                  {"seed", seed},
                  {"splits", {{"train", counts.train}, {"val", counts.val}, {"test", counts.test}}},
                  {"generator", to_json(spec)}});
}

}  // namespace evidseg::synthdata
