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

#include "evidseg/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evidseg {
namespace {

void check_shape(const Shape& shape) {
  if (shape.height < kMinSide || shape.width < kMinSide) {
    std::ostringstream os;
    os << "slice " << shape.height << "x" << shape.width << " is smaller than "
       << kMinSide << "x" << kMinSide;
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
}

void check_size(const Shape& shape, std::size_t n, const char* what) {
  if (n != shape.pixels()) {
    std::ostringstream os;
    os << what << " has " << n << " values, expected " << shape.pixels();
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
}

}  // namespace

ScalarMap::ScalarMap(Shape s, std::vector<double> v)
    : shape(s), values(std::move(v)) {
  check_size(shape, values.size(), "scalar map");
}

ScalarMap::ScalarMap(Shape s, double fill) : shape(s), values(s.pixels(), fill) {}

ImageSlice::ImageSlice(Shape shape, std::vector<double> intensities)
    : shape_(shape), values_(std::move(intensities)) {
  check_shape(shape_);
  check_size(shape_, values_.size(), "image");
  for (double v : values_) {
    if (!std::isfinite(v))
      throw Error(ErrorKind::kNonFinite, "image contains a non-finite intensity");
    if (v < -kIntensityEpsilon || v > 1.0 + kIntensityEpsilon)
      throw Error(ErrorKind::kIntensityRange,
                  "image intensity " + std::to_string(v) + " outside [0, 1]");
  }
}

ImageSlice ImageSlice::FromRaw(Shape shape, std::span<const double> raw) {
  check_shape(shape);
  check_size(shape, raw.size(), "image");
  for (double v : raw)
    if (!std::isfinite(v))
      throw Error(ErrorKind::kNonFinite, "image contains a non-finite intensity");
  auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  std::vector<double> out(raw.size(), 0.0);
  if (range > 0.0)
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / range;
  return ImageSlice(shape, std::move(out));
}

LabelMap::LabelMap(Shape shape, int classes, std::vector<std::uint8_t> labels)
    : shape_(shape), classes_(classes), labels_(std::move(labels)) {
  check_shape(shape_);
  check_size(shape_, labels_.size(), "label map");
  if (classes_ < 2 || classes_ > 255)
    throw Error(ErrorKind::kInvalidArgument,
                "class count must lie in [2, 255], got " + std::to_string(classes_));
  for (std::uint8_t l : labels_)
    if (l >= classes_)
      throw Error(ErrorKind::kLabelOutOfRange,
                  "label " + std::to_string(l) + " >= K=" + std::to_string(classes_));
}

std::vector<std::size_t> LabelMap::class_counts() const {
  std::vector<std::size_t> counts(classes_, 0);
  for (std::uint8_t l : labels_) ++counts[l];
  return counts;
}

EvidenceMap::EvidenceMap(Shape shape, int classes, std::vector<double> evidence)
    : shape_(shape), classes_(classes), evidence_(std::move(evidence)) {
  if (classes_ < 2)
    throw Error(ErrorKind::kInvalidArgument, "evidence needs K >= 2");
  if (evidence_.size() != shape_.pixels() * classes_)
    throw Error(ErrorKind::kDimensionMismatch, "evidence size is not V*K");
  for (double v : evidence_)
    if (!std::isfinite(v) || v < 0.0)
      throw Error(ErrorKind::kNonFinite, "evidence must be finite and non-negative");
}

double EvidenceMap::strength(std::size_t i) const {
  double s = 0.0;
  for (int k = 0; k < classes_; ++k) s += alpha(i, k);
  return s;
}

int EvidenceMap::argmax(std::size_t i) const {
  int best = 0;
  for (int k = 1; k < classes_; ++k)
    if (e(i, k) > e(i, best)) best = k;
  return best;
}

void NoiseSpec::validate(const Shape& shape) const {
  if (!(stddev >= 0.0) || !std::isfinite(mean))
    throw Error(ErrorKind::kInvalidArgument, "noise stddev must be >= 0");
  if (mode == NoiseMode::kPatch) {
    if (!patch)
      throw Error(ErrorKind::kInvalidArgument, "patch noise requires a patch box");
    const PatchBox& b = *patch;
    if (b.row < 0 || b.col < 0 || b.height <= 0 || b.width <= 0 ||
        b.row + b.height > shape.height || b.col + b.width > shape.width)
      throw Error(ErrorKind::kInvalidArgument, "patch box outside image bounds");
  }
}

void SupervisionConfig::validate() const {
  if (!(d0 > 0.0)) throw Error(ErrorKind::kInvalidArgument, "d0 must be > 0");
  if (!(mu1 >= 0.0 && mu1 < mu2))
    throw Error(ErrorKind::kInvalidArgument, "noise means need 0 <= mu1 < mu2");
  if (!(noise_stddev >= 0.0))
    throw Error(ErrorKind::kInvalidArgument, "noise_stddev must be >= 0");
  if (samples_per_class < 1)
    throw Error(ErrorKind::kInvalidArgument, "samples_per_class must be >= 1");
  if (max_pairs < 1) throw Error(ErrorKind::kInvalidArgument, "max_pairs must be >= 1");
  if (!(beta >= 0.0 && gamma >= 0.0))
    throw Error(ErrorKind::kInvalidArgument, "beta and gamma must be >= 0");
  if (!(boundary_radius >= 0.0 && gradient_sigma >= 0.0))
    throw Error(ErrorKind::kInvalidArgument, "radius and sigma must be >= 0");
}

void TrainConfig::validate() const {
  if (classes < 2) throw Error(ErrorKind::kInvalidArgument, "K must be >= 2");
  if (epochs < 1) throw Error(ErrorKind::kInvalidArgument, "T must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "lr must be > 0");
  if (batch_size < 1) throw Error(ErrorKind::kInvalidArgument, "batch_size must be >= 1");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0))
    throw Error(ErrorKind::kInvalidArgument, "alpha0 must lie in (0, 1]");
  if (!(lambda_ce >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "lambda_ce must be >= 0");
  if (kl_warmup_epochs < 1)
    throw Error(ErrorKind::kInvalidArgument, "kl_warmup_epochs must be >= 1");
  if (base_channels < 1)
    throw Error(ErrorKind::kInvalidArgument, "base_channels must be >= 1");
  supervision.validate();
}

void MetricsReport::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  auto corr = [](double v) { return v >= -1.0 && v <= 1.0; };
  if (!unit(dsc) || !unit(ueo) || !unit(ur_g) || !unit(ur_mu) || !unit(ece) ||
      !corr(ucc_g) || !corr(ucc_mu) || !(hd95 >= 0.0))
    throw Error(ErrorKind::kInvalidArgument, "metrics report value out of range");
}

Sample validate(ImageSlice image, LabelMap label) {
  if (image.shape() != label.shape()) {
    std::ostringstream os;
    os << "image is " << image.height() << "x" << image.width() << " but label is "
       << label.shape().height << "x" << label.shape().width;
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
  return Sample{std::move(image), std::move(label)};
}

std::string to_string(Profile p) { return p == Profile::kAcdc ? "acdc" : "refuge"; }

Profile profile_from_string(const std::string& s) {
  if (s == "acdc") return Profile::kAcdc;
  if (s == "refuge") return Profile::kRefuge;
  throw Error(ErrorKind::kInvalidArgument, "unknown profile '" + s + "'");
}

std::pair<double, double> profile_multipliers(Profile p) {
  switch (p) {
    case Profile::kAcdc: return {0.1, 10.0};
    case Profile::kRefuge: return {1.0, 1.0};
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown profile");
}

}  // namespace evidseg
