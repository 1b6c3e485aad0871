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

#include "evidseg/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace evidseg::io {
namespace {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b)
    out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<U>(p[b]) << (8 * b);
  return v;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw Error(ErrorKind::kInvalidArgument,
                  std::string("unknown ") + what + " key '" + it.key() + "'");
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void write_f32(const fs::path& path, std::span<const float> values) {
  std::string bytes;
  bytes.reserve(values.size() * 4);
  for (float v : values) put_le(bytes, std::bit_cast<std::uint32_t>(v));
  write_bytes(path, bytes);
}

std::vector<float> read_f32(const fs::path& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() % 4 != 0)
    throw Error(ErrorKind::kIo, path.string() + " is not a float32 array");
  std::vector<float> out(bytes.size() / 4);
  auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
  return out;
}

void write_f64(const fs::path& path, std::span<const double> values) {
  std::string bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) put_le(bytes, std::bit_cast<std::uint64_t>(v));
  write_bytes(path, bytes);
}

std::vector<double> read_f64(const fs::path& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() % 8 != 0)
    throw Error(ErrorKind::kIo, path.string() + " is not a float64 array");
  std::vector<double> out(bytes.size() / 8);
  auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + 8 * i));
  return out;
}

void write_u8(const fs::path& path, std::span<const std::uint8_t> values) {
  write_bytes(path, std::string(values.begin(), values.end()));
}

std::vector<std::uint8_t> read_u8(const fs::path& path) {
  const std::string bytes = read_bytes(path);
  return std::vector<std::uint8_t>(bytes.begin(), bytes.end());
}

void write_text(const fs::path& path, const std::string& text) { write_bytes(path, text); }

std::string read_text(const fs::path& path) { return read_bytes(path); }

void write_json(const fs::path& path, const json& j) { write_bytes(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_bytes(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kIo, path.string() + ": " + e.what());
  }
}

void write_sample(const fs::path& dir, const std::string& stem, const Sample& s) {
  const Shape& shape = s.image.shape();
  std::vector<float> f(s.image.values().begin(), s.image.values().end());
  write_f32(dir / (stem + ".image.f32"), f);
  write_u8(dir / (stem + ".label.u8"), s.label.labels());
  write_json(dir / (stem + ".meta.json"), json{{"height", shape.height},
                                               {"width", shape.width},
                                               {"K", s.label.classes()},
                                               {"normalization", "minmax"}});
}

Sample read_sample(const fs::path& dir, const std::string& stem) {
  const json meta = read_json(dir / (stem + ".meta.json"));
  const Shape shape{meta.at("height").get<int>(), meta.at("width").get<int>()};
  const int classes = meta.at("K").get<int>();
  const auto f = read_f32(dir / (stem + ".image.f32"));
  auto labels = read_u8(dir / (stem + ".label.u8"));
  if (f.size() != shape.pixels())
    throw Error(ErrorKind::kDimensionMismatch, stem + ": image size does not match metadata");
  ImageSlice image(shape, std::vector<double>(f.begin(), f.end()));
  LabelMap label(Shape{shape.height, shape.width}, classes, std::move(labels));
  return validate(std::move(image), std::move(label));
}

std::vector<std::string> list_samples(const fs::path& split_dir) {
  if (!fs::is_directory(split_dir))
    throw Error(ErrorKind::kIo, "missing split directory " + split_dir.string());
  std::vector<std::string> stems;
  const std::string suffix = ".meta.json";
  for (const auto& entry : fs::directory_iterator(split_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      stems.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

std::vector<Sample> read_split(const fs::path& root, const std::string& split) {
  std::vector<Sample> out;
  for (const auto& stem : list_samples(root / split))
    out.push_back(read_sample(root / split, stem));
  return out;
}

void write_evidence(const fs::path& path, const EvidenceMap& e) {
  std::vector<double> blob;
  blob.reserve(3 + e.evidence().size());
  blob.push_back(e.shape().height);
  blob.push_back(e.shape().width);
  blob.push_back(e.classes());
  blob.insert(blob.end(), e.evidence().begin(), e.evidence().end());
  write_f64(path, blob);
}

EvidenceMap read_evidence(const fs::path& path) {
  auto blob = read_f64(path);
  if (blob.size() < 3) throw Error(ErrorKind::kIo, path.string() + " is truncated");
  Shape shape{static_cast<int>(blob[0]), static_cast<int>(blob[1])};
  const int classes = static_cast<int>(blob[2]);
  return EvidenceMap(shape, classes, std::vector<double>(blob.begin() + 3, blob.end()));
}

void write_pgm(const fs::path& path, const ScalarMap& map, double lo, double hi) {
  std::ostringstream os;
  os << "P5\n" << map.shape.width << " " << map.shape.height << "\n255\n";
  std::string bytes = os.str();
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : map.values) {
    double t = std::isfinite(v) ? (v - lo) / span : 1.0;
    t = std::clamp(t, 0.0, 1.0);
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
  }
  write_bytes(path, bytes);
}

json to_json(const SupervisionConfig& c) {
  return json{{"d0", c.d0},
              {"mu1", c.mu1},
              {"mu2", c.mu2},
              {"noise_stddev", c.noise_stddev},
              {"beta0", c.beta},
              {"gamma0", c.gamma},
              {"samples_per_class", c.samples_per_class},
              {"max_pairs", c.max_pairs},
              {"boundary_radius", c.boundary_radius},
              {"gradient_sigma", c.gradient_sigma}};
}

SupervisionConfig supervision_from_json(const json& j) {
  SupervisionConfig c;
  take(j, "d0", c.d0);
  take(j, "mu1", c.mu1);
  take(j, "mu2", c.mu2);
  take(j, "noise_stddev", c.noise_stddev);
  take(j, "beta0", c.beta);
  take(j, "gamma0", c.gamma);
  take(j, "samples_per_class", c.samples_per_class);
  take(j, "max_pairs", c.max_pairs);
  take(j, "boundary_radius", c.boundary_radius);
  take(j, "gradient_sigma", c.gradient_sigma);
  return c;
}

json to_json(const TrainConfig& c) {
  json j = to_json(c.supervision);
  j["K"] = c.classes;
  j["T"] = c.epochs;
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["alpha0"] = c.alpha0;
  j["lambda_ce"] = c.lambda_ce;
  j["kl_warmup_epochs"] = c.kl_warmup_epochs;
  j["seed"] = c.seed;
  j["profile"] = to_string(c.profile);
  j["data_dir"] = c.data_dir;
  j["base_channels"] = c.base_channels;
  j["use_gu"] = c.use_gu;
  j["use_nu"] = c.use_nu;
  j["use_hsd"] = c.use_hsd;
  j["dice_include_background"] = c.dice_include_background;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kInvalidArgument, "config must be an object");
  reject_unknown(j,
                 {"K", "T", "lr", "batch_size", "alpha0", "lambda_ce", "kl_warmup_epochs",
                  "seed", "profile", "data_dir", "base_channels", "use_gu", "use_nu",
                  "use_hsd", "dice_include_background", "d0", "mu1", "mu2",
                  "noise_stddev", "beta0", "gamma0", "samples_per_class", "max_pairs",
                  "boundary_radius", "gradient_sigma"},
                 "config");
  TrainConfig c;
  take(j, "K", c.classes);
  take(j, "T", c.epochs);
  take(j, "lr", c.lr);
  take(j, "batch_size", c.batch_size);
  take(j, "alpha0", c.alpha0);
  take(j, "lambda_ce", c.lambda_ce);
  take(j, "kl_warmup_epochs", c.kl_warmup_epochs);
  take(j, "seed", c.seed);
  if (j.contains("profile")) c.profile = profile_from_string(j.at("profile").get<std::string>());
  take(j, "data_dir", c.data_dir);
  take(j, "base_channels", c.base_channels);
  take(j, "use_gu", c.use_gu);
  take(j, "use_nu", c.use_nu);
  take(j, "use_hsd", c.use_hsd);
  take(j, "dice_include_background", c.dice_include_background);
  c.supervision = supervision_from_json(j);
  // Multipliers not given explicitly follow the profile.
  const auto [beta0, gamma0] = profile_multipliers(c.profile);
  if (!j.contains("beta0")) c.supervision.beta = beta0;
  if (!j.contains("gamma0")) c.supervision.gamma = gamma0;
  return c;
}

json to_json(const MetricsReport& r) {
  return json{{"dsc", r.dsc},     {"hd95", r.hd95},       {"ece", r.ece},
              {"ueo", r.ueo},     {"ucc_g", r.ucc_g},     {"ucc_mu", r.ucc_mu},
              {"ur_g", r.ur_g},   {"ur_mu", r.ur_mu},     {"class_dsc", r.class_dsc},
              {"ur_g_ties", r.ur_g_ties}, {"flags", r.flags}};
}

MetricsReport metrics_from_json(const json& j) {
  MetricsReport r;
  take(j, "dsc", r.dsc);
  take(j, "hd95", r.hd95);
  take(j, "ece", r.ece);
  take(j, "ueo", r.ueo);
  take(j, "ucc_g", r.ucc_g);
  take(j, "ucc_mu", r.ucc_mu);
  take(j, "ur_g", r.ur_g);
  take(j, "ur_mu", r.ur_mu);
  take(j, "class_dsc", r.class_dsc);
  take(j, "ur_g_ties", r.ur_g_ties);
  take(j, "flags", r.flags);
  return r;
}

json to_json(const NoiseSpec& n) {
  json j{{"mean", n.mean},
         {"stddev", n.stddev},
         {"mode", n.mode == NoiseMode::kGlobal ? "global" : "patch"},
         {"seed", n.seed}};
  if (n.patch)
    j["patch_box"] = {n.patch->row, n.patch->col, n.patch->height, n.patch->width};
  return j;
}

NoiseSpec noise_from_json(const json& j) {
  NoiseSpec n;
  take(j, "mean", n.mean);
  take(j, "stddev", n.stddev);
  take(j, "seed", n.seed);
  if (j.contains("mode")) {
    const auto m = j.at("mode").get<std::string>();
    if (m == "global") n.mode = NoiseMode::kGlobal;
    else if (m == "patch") n.mode = NoiseMode::kPatch;
    else throw Error(ErrorKind::kInvalidArgument, "unknown noise mode '" + m + "'");
  }
  if (j.contains("patch_box")) {
    const auto b = j.at("patch_box").get<std::vector<int>>();
    if (b.size() != 4) throw Error(ErrorKind::kInvalidArgument, "patch_box needs 4 ints");
    n.patch = PatchBox{b[0], b[1], b[2], b[3]};
  }
  return n;
}

bool nonempty_dir(const fs::path& p) {
  return fs::is_directory(p) && fs::directory_iterator(p) != fs::directory_iterator();
}

}  // namespace evidseg::io
