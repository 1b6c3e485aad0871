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
#include <vector>

#include "evidseg/datamodel.hpp"
#include "evidseg/metrics.hpp"
#include "evidseg/supervision.hpp"

namespace evidseg::evaluation {

struct EvalOptions {
  std::vector<double> sweep = metrics::kDefaultSweep;
  double d0 = 4.0;
  double noise_stddev = 0.05;
  double boundary_radius = 1.0;
  double gradient_sigma = 1.0;
  std::size_t pair_cap = metrics::kDefaultPairCap;
  int ece_bins = 10;
  double ueo_step = 0.05;
  std::uint64_t seed = 0;
  bool keep_maps = false;
};

struct ImageEval {
  MetricsReport report;
  std::vector<double> level_dsc;  // one per sweep level
  std::vector<double> level_ece;
  // Filled when keep_maps is set.
  EvidenceMap evidence;
  std::vector<EvidenceMap> level_evidence;
  BoundaryGeometry geometry;
};

struct Evaluation {
  std::vector<double> sweep;
  std::vector<ImageEval> images;
  MetricsReport aggregate;  // per-image values averaged over defined images
  std::vector<double> level_dsc;
  std::vector<double> level_ece;
  std::vector<metrics::Delta> dsc_deltas;
  std::vector<metrics::Delta> ece_deltas;
  double mean_abs_dsc_delta = 0.0;
  double mean_abs_ece_delta = 0.0;
};

// Seed of the noise drawn for image i at sweep level l.
std::uint64_t sweep_seed(std::uint64_t seed, std::size_t image, std::size_t level);

// Metrics of one image: the clean pass gives DSC, HD95, ECE, UEO, UCC_g and
// UR_g; the sweep gives UCC_mu, UR_mu and per-level DSC/ECE. Undefined
// metrics are reported as 0 and named in report.flags.
ImageEval evaluate_image(const supervision::EvidenceModel& model, const Sample& sample,
                         std::size_t index, const EvalOptions& opt);

// Same metrics computed from already available evidence maps (clean pass and
// one per sweep level).
ImageEval score_maps(const Sample& sample, const EvidenceMap& clean,
                     const std::vector<EvidenceMap>& levels, const EvalOptions& opt,
                     std::size_t index = 0);

Evaluation evaluate(const supervision::EvidenceModel& model, const std::vector<Sample>& samples,
                    const EvalOptions& opt);

}  // namespace evidseg::evaluation
