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

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "evidseg/datamodel.hpp"
#include "evidseg/supervision.hpp"

namespace evidseg::nn {

// Activations are (pixels x channels), column-major: one contiguous plane per
// channel.
using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;

struct ParamSlot {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// 3x3 convolution, stride 1, zero padding 1.
class Conv3x3 {
 public:
  Conv3x3() = default;
  Conv3x3(int in, int out) : in_(in), out_(out) {}
  int in() const { return in_; }
  int out() const { return out_; }
  std::size_t weight_count() const { return static_cast<std::size_t>(in_) * 9 * out_; }

  void forward(const float* params, const Mat& x, int h, int w, Mat& y) const;
  // dx may be null for the first layer.
  void backward(const float* params, const Mat& x, const Mat& dy, int h, int w,
                float* grads, Mat* dx) const;

  std::size_t offset = 0;  // weights (9*in x out), then bias (out)

 private:
  int in_ = 0;
  int out_ = 0;
};

// 2x2 transposed convolution with stride 2 (exact 2x upsampling).
class UpConv2x2 {
 public:
  UpConv2x2() = default;
  UpConv2x2(int in, int out) : in_(in), out_(out) {}
  int in() const { return in_; }
  int out() const { return out_; }
  std::size_t weight_count() const { return static_cast<std::size_t>(in_) * 4 * out_; }

  void forward(const float* params, const Mat& x, int h, int w, Mat& y) const;
  void backward(const float* params, const Mat& x, const Mat& dy, int h, int w,
                float* grads, Mat& dx) const;

  std::size_t offset = 0;

 private:
  int in_ = 0;
  int out_ = 0;
};

// Three-level encoder/decoder with skip connections and a softplus evidence
// head. Height and width must be multiples of 4.
class UNet final : public supervision::EvidenceModel {
 public:
  struct Trace;  // cached activations of one forward pass

  UNet(int classes, int base_channels, std::uint64_t seed);

  EvidenceMap infer(const ImageSlice& img) const override;
  int classes() const override { return classes_; }
  int base_channels() const { return base_; }

  // Forward pass keeping what backward needs.
  EvidenceMap forward(const ImageSlice& img, Trace& trace) const;
  // Accumulates d(loss)/d(params) into grads given d(loss)/d(evidence)
  // (pixel-major like EvidenceMap::evidence()).
  void backward(const Trace& trace, std::span<const double> grad_evidence,
                std::span<float> grads) const;

  std::span<float> parameters() { return params_; }
  std::span<const float> parameters() const { return params_; }
  const std::vector<ParamSlot>& slots() const { return slots_; }

  std::string architecture() const;
  std::string architecture_hash() const;

 private:
  void check_input(const ImageSlice& img) const;

  int classes_;
  int base_;
  std::vector<float> params_;
  std::vector<ParamSlot> slots_;
  Conv3x3 e1a_, e1b_, e2a_, e2b_, b_a_, b_b_, d2a_, d2b_, d1a_, d1b_;
  UpConv2x2 up2_, up1_;
  std::size_t head_offset_ = 0;  // weights (C x K), bias (K)
};

struct UNet::Trace {
  int h = 0, w = 0;
  Mat x, e1a, e1b, p1, e2a, e2b, p2, ba, bb, u2, c2, d2a, d2b, u1, c1, d1a, d1b, logits;
  std::vector<int> arg1, arg2;  // max-pool winners
};

class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<float> params, std::span<const float> grads);
  std::int64_t steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  std::int64_t t_ = 0;
  std::vector<float> m_, v_;
};

// Checkpoint directory: manifest.json plus one float32 blob per tensor.
void save_checkpoint(const std::filesystem::path& dir, const UNet& net, int epoch,
                     std::uint64_t seed, const nlohmann::json& config);

struct LoadedCheckpoint {
  UNet net;
  int epoch = 0;
  std::uint64_t seed = 0;
  nlohmann::json config;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace evidseg::nn
