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
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evidseg/datamodel.hpp"

// Synthetic cardiac-like scenes: a ring (class 1) around a cavity (class 2) on
// background (class 0), plus a separate blob (class 3) when K = 4. K = 2 keeps
// a single blob. Each boundary gets its own blur sigma, which sets how sharp
// (high gradient) or ambiguous (low gradient) that edge is.

namespace evidseg::synthdata {

struct SceneSpec {
  int height = 64;
  int width = 64;
  int classes = 3;
  double blur_min = 0.0;
  double blur_max = 3.0;
  // When non-empty, boundary b uses fixed_blur[b] instead of a random draw.
  std::vector<double> fixed_blur;
  double texture_noise = 0.03;
  double min_separation = 0.15;
  int max_attempts = 200;

  void validate() const;
};

struct EllipseParams {
  double cy = 0, cx = 0, a = 0, b = 0, theta = 0;
};

struct BoundaryRecord {
  std::string name;
  int inside_class = 0;
  int outside_class = 0;
  double blur_sigma = 0.0;
};

struct Provenance {
  std::uint64_t seed = 0;
  int attempts = 0;
  std::vector<double> region_means;  // indexed by class, before normalization
  std::vector<EllipseParams> ellipses;
  std::vector<BoundaryRecord> boundaries;
};

struct Scene {
  Sample sample;
  Provenance provenance;
};

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

nlohmann::json to_json(const Provenance& p);
nlohmann::json to_json(const SceneSpec& s);

// Pixels on the raw boundary between two classes (either side).
std::vector<std::size_t> boundary_pixels_between(const LabelMap& label, int a, int b);

struct DatasetCounts {
  int train = 200;
  int val = 20;
  int test = 50;
};

// Seed of sample `index` of a split; the three splits use disjoint streams.
std::uint64_t sample_seed(std::uint64_t seed, const std::string& split, int index);

// Writes the dataset layout (see io.hpp) under root. Refuses a nonempty root.
void build_dataset(const std::filesystem::path& root, const DatasetCounts& counts,
                   const SceneSpec& spec, std::uint64_t seed);

}  // namespace evidseg::synthdata
