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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Core value types shared by every module. Pixels are always flattened in
// row-major order: index = row * width + col.

namespace evidseg {

enum class ErrorKind {
  kDimensionMismatch,
  kLabelOutOfRange,
  kNonFinite,
  kIntensityRange,
  kInvalidArgument,
  kUndefined,
  kIo,
  kNumerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline constexpr double kIntensityEpsilon = 1e-6;
inline constexpr int kMinSide = 8;

struct Shape {
  int height = 0;
  int width = 0;

  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * width + col;
  }
  bool operator==(const Shape&) const = default;
};

// A real-valued per-pixel field (gradient magnitude, distance, uncertainty).
struct ScalarMap {
  Shape shape;
  std::vector<double> values;

  ScalarMap() = default;
  ScalarMap(Shape s, std::vector<double> v);
  ScalarMap(Shape s, double fill);

  double operator[](std::size_t i) const { return values[i]; }
  double at(int row, int col) const { return values[shape.index(row, col)]; }
  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const ScalarMap&) const = default;
};

// 2D intensity slice normalized to [0, 1].
class ImageSlice {
 public:
  ImageSlice() = default;
  // Validates shape, finiteness and range.
  ImageSlice(Shape shape, std::vector<double> intensities);

  // Min-max normalizes raw intensities into [0, 1]. A constant input maps to 0.
  static ImageSlice FromRaw(Shape shape, std::span<const double> raw);

  const Shape& shape() const noexcept { return shape_; }
  int height() const noexcept { return shape_.height; }
  int width() const noexcept { return shape_.width; }
  std::size_t pixels() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(int row, int col) const { return values_[shape_.index(row, col)]; }

  bool operator==(const ImageSlice&) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(Shape shape, int classes, std::vector<std::uint8_t> labels);

  const Shape& shape() const noexcept { return shape_; }
  int classes() const noexcept { return classes_; }
  std::size_t pixels() const noexcept { return labels_.size(); }
  const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }
  int operator[](std::size_t i) const { return labels_[i]; }
  int at(int row, int col) const { return labels_[shape_.index(row, col)]; }
  // Entry of the V x K one-hot matrix.
  double one_hot(std::size_t pixel, int k) const {
    return labels_[pixel] == k ? 1.0 : 0.0;
  }
  std::vector<std::size_t> class_counts() const;

  bool operator==(const LabelMap&) const = default;

 private:
  Shape shape_;
  int classes_ = 0;
  std::vector<std::uint8_t> labels_;
};

// Per-pixel, per-class non-negative evidence; pixel-major (i * K + k).
// Dirichlet alpha = e + 1, strength S = sum alpha, p = alpha / S, u = K / S.
class EvidenceMap {
 public:
  EvidenceMap() = default;
  EvidenceMap(Shape shape, int classes, std::vector<double> evidence);

  const Shape& shape() const noexcept { return shape_; }
  int classes() const noexcept { return classes_; }
  std::size_t pixels() const noexcept { return shape_.pixels(); }
  const std::vector<double>& evidence() const noexcept { return evidence_; }
  double e(std::size_t i, int k) const { return evidence_[i * classes_ + k]; }
  double alpha(std::size_t i, int k) const { return e(i, k) + 1.0; }
  double strength(std::size_t i) const;
  double prob(std::size_t i, int k) const { return alpha(i, k) / strength(i); }
  double uncertainty(std::size_t i) const { return classes_ / strength(i); }
  int argmax(std::size_t i) const;

  bool operator==(const EvidenceMap&) const = default;

 private:
  Shape shape_;
  int classes_ = 0;
  std::vector<double> evidence_;
};

// Boundary pixel set B, distance-to-boundary d and smoothed gradient g.
struct BoundaryGeometry {
  Shape shape;
  double radius = 1.0;
  std::vector<std::size_t> boundary;  // sorted, B = {i : d_i <= radius}
  std::vector<double> distance;       // +inf when the label has one class
  std::vector<double> gradient;       // empty until attached

  bool empty() const noexcept { return boundary.empty(); }
  bool has_gradient() const noexcept { return !gradient.empty(); }
};

struct PatchBox {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
  bool operator==(const PatchBox&) const = default;
};

enum class NoiseMode { kGlobal, kPatch };

struct NoiseSpec {
  double mean = 0.0;
  double stddev = 0.05;
  NoiseMode mode = NoiseMode::kGlobal;
  std::optional<PatchBox> patch;
  std::uint64_t seed = 0;

  void validate(const Shape& shape) const;
  bool operator==(const NoiseSpec&) const = default;
};

struct SupervisionConfig {
  double d0 = 4.0;
  double mu1 = 0.1;
  double mu2 = 0.3;
  double noise_stddev = 0.05;
  double beta = 0.1;   // weight multiplier at alpha = 1
  double gamma = 10.0;
  int samples_per_class = 16;
  std::size_t max_pairs = 200000;
  double boundary_radius = 1.0;
  double gradient_sigma = 1.0;

  void validate() const;
  bool operator==(const SupervisionConfig&) const = default;
};

enum class Profile { kAcdc, kRefuge };

struct TrainConfig {
  int classes = 3;
  int epochs = 50;
  double lr = 1e-3;
  int batch_size = 8;
  double alpha0 = 0.01;
  double lambda_ce = 1.0;
  int kl_warmup_epochs = 20;
  std::uint64_t seed = 7;
  Profile profile = Profile::kAcdc;
  std::string data_dir;
  int base_channels = 16;
  // Ablation switches.
  bool use_gu = true;
  bool use_nu = true;
  bool use_hsd = true;
  bool dice_include_background = false;
  SupervisionConfig supervision;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct MetricsReport {
  double dsc = 0.0;
  double hd95 = 0.0;
  double ece = 0.0;
  double ueo = 0.0;
  double ucc_g = 0.0;
  double ucc_mu = 0.0;
  double ur_g = 0.0;
  double ur_mu = 0.0;
  std::vector<double> class_dsc;  // foreground classes 1..K-1
  // Fraction of tied pairs inside UR_[g]; ties count as satisfying.
  double ur_g_ties = 0.0;
  std::vector<std::string> flags;

  void validate() const;
  bool operator==(const MetricsReport&) const = default;
};

struct Sample {
  ImageSlice image;
  LabelMap label;
};

// Checks image/label agreement; returns the pair unchanged when it holds.
Sample validate(ImageSlice image, LabelMap label);

std::string to_string(Profile p);
Profile profile_from_string(const std::string& s);
// (beta0, gamma0): weights of L_gu and L_nu at alpha = 1 for a profile.
std::pair<double, double> profile_multipliers(Profile p);

}  // namespace evidseg
