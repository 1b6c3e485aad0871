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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evidseg/datamodel.hpp"

// On-disk formats.
//
// Dataset root:
//   dataset.json                       {"splits": {...}, "seed": ..., ...}
//   <split>/<stem>.image.f32           float32 little-endian, H*W, row-major
//   <split>/<stem>.label.u8            uint8, H*W, row-major
//   <split>/<stem>.meta.json           {"height", "width", "K", "normalization"}
//   <split>/<stem>.provenance.json     generator record (optional)
// where <split> is one of train, val, test.

namespace evidseg::io {

namespace fs = std::filesystem;
using nlohmann::json;

void write_f32(const fs::path& path, std::span<const float> values);
std::vector<float> read_f32(const fs::path& path);
void write_f64(const fs::path& path, std::span<const double> values);
std::vector<double> read_f64(const fs::path& path);
void write_u8(const fs::path& path, std::span<const std::uint8_t> values);
std::vector<std::uint8_t> read_u8(const fs::path& path);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

// Sample files under dir/stem.*; the image is stored as float32, so values
// must be float-representable for an exact round trip.
void write_sample(const fs::path& dir, const std::string& stem, const Sample& s);
Sample read_sample(const fs::path& dir, const std::string& stem);

// Sorted sample stems of one split directory.
std::vector<std::string> list_samples(const fs::path& split_dir);
std::vector<Sample> read_split(const fs::path& root, const std::string& split);

// Evidence dumps are float64 blobs plus a small header.
void write_evidence(const fs::path& path, const EvidenceMap& e);
EvidenceMap read_evidence(const fs::path& path);

// 8-bit binary PGM; values are scaled from [lo, hi] and clamped.
void write_pgm(const fs::path& path, const ScalarMap& map, double lo, double hi);

json to_json(const SupervisionConfig& c);
json to_json(const TrainConfig& c);
json to_json(const MetricsReport& r);
json to_json(const NoiseSpec& n);
SupervisionConfig supervision_from_json(const json& j);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const json& j);
MetricsReport metrics_from_json(const json& j);
NoiseSpec noise_from_json(const json& j);

// Whether a directory exists and has at least one entry.
bool nonempty_dir(const fs::path& p);

}  // namespace evidseg::io
