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

#include "evidseg/network.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "evidseg/io.hpp"

namespace evidseg::nn {
namespace {

using MapMat = Eigen::Map<Mat>;
using ConstMapMat = Eigen::Map<const Mat>;
using Vec = Eigen::VectorXf;

void im2col(const Mat& x, int h, int w, Mat& col) {
  const int in = static_cast<int>(x.cols());
  col.resize(static_cast<Eigen::Index>(h) * w, 9 * in);
  for (int ci = 0; ci < in; ++ci) {
    const float* src = x.col(ci).data();
    for (int t = 0; t < 9; ++t) {
      const int dy = t / 3 - 1, dx = t % 3 - 1;
      float* dst = col.col(ci * 9 + t).data();
      const int c0 = std::max(0, -dx), c1 = std::min(w, w - dx);
      for (int r = 0; r < h; ++r) {
        float* row = dst + static_cast<std::size_t>(r) * w;
        const int sr = r + dy;
        if (sr < 0 || sr >= h) {
          std::fill(row, row + w, 0.0f);
          continue;
        }
        const float* srow = src + static_cast<std::size_t>(sr) * w;
        for (int c = 0; c < c0; ++c) row[c] = 0.0f;
        for (int c = c0; c < c1; ++c) row[c] = srow[c + dx];
        for (int c = c1; c < w; ++c) row[c] = 0.0f;
      }
    }
  }
}

void col2im(const Mat& col, int h, int w, Mat& dx) {
  const int in = static_cast<int>(col.cols() / 9);
  dx.setZero(static_cast<Eigen::Index>(h) * w, in);
  for (int ci = 0; ci < in; ++ci) {
    float* dst = dx.col(ci).data();
    for (int t = 0; t < 9; ++t) {
      const int dy = t / 3 - 1, ddx = t % 3 - 1;
      const float* src = col.col(ci * 9 + t).data();
      const int c0 = std::max(0, -ddx), c1 = std::min(w, w - ddx);
      for (int r = 0; r < h; ++r) {
        const int sr = r + dy;
        if (sr < 0 || sr >= h) continue;
        const float* row = src + static_cast<std::size_t>(r) * w;
        float* drow = dst + static_cast<std::size_t>(sr) * w;
        for (int c = c0; c < c1; ++c) drow[c + ddx] += row[c];
      }
    }
  }
}

void relu(Mat& y) { y = y.cwiseMax(0.0f); }

// Gradient through a ReLU whose output is y.
void relu_back(const Mat& y, Mat& dy) { dy = (y.array() > 0.0f).select(dy, 0.0f); }

void maxpool(const Mat& x, int h, int w, Mat& y, std::vector<int>& arg) {
  const int oh = h / 2, ow = w / 2, ch = static_cast<int>(x.cols());
  y.resize(static_cast<Eigen::Index>(oh) * ow, ch);
  arg.resize(static_cast<std::size_t>(oh) * ow * ch);
  for (int k = 0; k < ch; ++k) {
    const float* src = x.col(k).data();
    float* dst = y.col(k).data();
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) {
        int best = (2 * r) * w + 2 * c;
        for (int q = 1; q < 4; ++q) {
          const int idx = (2 * r + q / 2) * w + 2 * c + q % 2;
          if (src[idx] > src[best]) best = idx;
        }
        const std::size_t o = static_cast<std::size_t>(r) * ow + c;
        dst[o] = src[best];
        arg[static_cast<std::size_t>(k) * oh * ow + o] = best;
      }
  }
}

void maxpool_back(const Mat& dy, const std::vector<int>& arg, int h, int w, Mat& dx) {
  const auto out_pixels = dy.rows();
  dx.setZero(static_cast<Eigen::Index>(h) * w, dy.cols());
  for (Eigen::Index k = 0; k < dy.cols(); ++k)
    for (Eigen::Index o = 0; o < out_pixels; ++o)
      dx(arg[static_cast<std::size_t>(k * out_pixels + o)], k) += dy(o, k);
}

float softplus(float x) { return x > 20.0f ? x : std::log1p(std::exp(x)); }
float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

thread_local Mat g_col;
thread_local Mat g_dcol;

}  // namespace

void Conv3x3::forward(const float* params, const Mat& x, int h, int w, Mat& y) const {
  im2col(x, h, w, g_col);
  ConstMapMat weight(params + offset, 9 * in_, out_);
  Eigen::Map<const Vec> bias(params + offset + weight_count(), out_);
  y.noalias() = g_col * weight;
  y.rowwise() += bias.transpose();
}

void Conv3x3::backward(const float* params, const Mat& x, const Mat& dy, int h, int w,
                       float* grads, Mat* dx) const {
  im2col(x, h, w, g_col);
  MapMat gw(grads + offset, 9 * in_, out_);
  Eigen::Map<Vec> gb(grads + offset + weight_count(), out_);
  gw.noalias() += g_col.transpose() * dy;
  gb += dy.colwise().sum().transpose();
  if (dx) {
    ConstMapMat weight(params + offset, 9 * in_, out_);
    g_dcol.noalias() = dy * weight.transpose();
    col2im(g_dcol, h, w, *dx);
  }
}

void UpConv2x2::forward(const float* params, const Mat& x, int h, int w, Mat& y) const {
  ConstMapMat weight(params + offset, in_, 4 * out_);
  const float* bias = params + offset + weight_count();
  const Mat z = x * weight;
  const int ow = 2 * w;
  y.resize(static_cast<Eigen::Index>(4) * h * w, out_);
  for (int co = 0; co < out_; ++co)
    for (int q = 0; q < 4; ++q) {
      const float* src = z.col(q * out_ + co).data();
      float* dst = y.col(co).data();
      const int dr = q / 2, dc = q % 2;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          dst[(2 * r + dr) * ow + 2 * c + dc] = src[r * w + c] + bias[co];
    }
}

void UpConv2x2::backward(const float* params, const Mat& x, const Mat& dy, int h, int w,
                         float* grads, Mat& dx) const {
  const int ow = 2 * w;
  Mat dz(static_cast<Eigen::Index>(h) * w, 4 * out_);
  for (int co = 0; co < out_; ++co)
    for (int q = 0; q < 4; ++q) {
      const float* src = dy.col(co).data();
      float* dst = dz.col(q * out_ + co).data();
      const int dr = q / 2, dc = q % 2;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) dst[r * w + c] = src[(2 * r + dr) * ow + 2 * c + dc];
    }
  MapMat gw(grads + offset, in_, 4 * out_);
  Eigen::Map<Vec> gb(grads + offset + weight_count(), out_);
  gw.noalias() += x.transpose() * dz;
  gb += dy.colwise().sum().transpose();
  ConstMapMat weight(params + offset, in_, 4 * out_);
  dx.noalias() = dz * weight.transpose();
}

UNet::UNet(int classes, int base_channels, std::uint64_t seed)
    : classes_(classes), base_(base_channels) {
  if (classes < 2) throw Error(ErrorKind::kInvalidArgument, "network needs K >= 2");
  if (base_channels < 1) throw Error(ErrorKind::kInvalidArgument, "base_channels must be >= 1");
  const int c = base_channels;
  e1a_ = Conv3x3(1, c);
  e1b_ = Conv3x3(c, c);
  e2a_ = Conv3x3(c, 2 * c);
  e2b_ = Conv3x3(2 * c, 2 * c);
  b_a_ = Conv3x3(2 * c, 4 * c);
  b_b_ = Conv3x3(4 * c, 4 * c);
  up2_ = UpConv2x2(4 * c, 2 * c);
  d2a_ = Conv3x3(4 * c, 2 * c);
  d2b_ = Conv3x3(2 * c, 2 * c);
  up1_ = UpConv2x2(2 * c, c);
  d1a_ = Conv3x3(2 * c, c);
  d1b_ = Conv3x3(c, c);

  std::mt19937_64 rng(seed);
  std::size_t cursor = 0;
  struct Pending {
    std::size_t offset, count;
    float stddev;
  };
  std::vector<Pending> init;
  auto add = [&](const std::string& name, std::vector<int> shape, float stddev) {
    std::size_t n = 1;
    for (int d : shape) n *= d;
    slots_.push_back({name, std::move(shape), cursor, n});
    init.push_back({cursor, n, stddev});
    cursor += n;
  };
  auto conv = [&](Conv3x3& layer, const std::string& name) {
    layer.offset = cursor;
    add(name + ".weight", {layer.out(), layer.in(), 3, 3},
        std::sqrt(2.0f / (9.0f * layer.in())));
    add(name + ".bias", {layer.out()}, 0.0f);
  };
  auto up = [&](UpConv2x2& layer, const std::string& name) {
    layer.offset = cursor;
    add(name + ".weight", {2, 2, layer.out(), layer.in()}, std::sqrt(1.0f / layer.in()));
    add(name + ".bias", {layer.out()}, 0.0f);
  };
  conv(e1a_, "enc1.conv1");
  conv(e1b_, "enc1.conv2");
  conv(e2a_, "enc2.conv1");
  conv(e2b_, "enc2.conv2");
  conv(b_a_, "bottleneck.conv1");
  conv(b_b_, "bottleneck.conv2");
  up(up2_, "dec2.up");
  conv(d2a_, "dec2.conv1");
  conv(d2b_, "dec2.conv2");
  up(up1_, "dec1.up");
  conv(d1a_, "dec1.conv1");
  conv(d1b_, "dec1.conv2");
  head_offset_ = cursor;
  add("head.weight", {classes, c}, 0.1f * std::sqrt(1.0f / c));
  add("head.bias", {classes}, 0.0f);

  params_.assign(cursor, 0.0f);
  for (const auto& p : init) {
    if (p.stddev == 0.0f) continue;
    std::normal_distribution<float> normal(0.0f, p.stddev);
    for (std::size_t i = 0; i < p.count; ++i) params_[p.offset + i] = normal(rng);
  }
}

void UNet::check_input(const ImageSlice& img) const {
  if (img.height() % 4 != 0 || img.width() % 4 != 0)
    throw Error(ErrorKind::kDimensionMismatch, "network input sides must be multiples of 4");
}

std::string UNet::architecture() const {
  return "unet3-softplus:in=1:K=" + std::to_string(classes_) + ":base=" + std::to_string(base_);
}

std::string UNet::architecture_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(architecture())));
  return buf;
}

EvidenceMap UNet::infer(const ImageSlice& img) const {
  Trace trace;
  return forward(img, trace);
}

EvidenceMap UNet::forward(const ImageSlice& img, Trace& t) const {
  check_input(img);
  const float* p = params_.data();
  const int h = img.height(), w = img.width();
  const int h2 = h / 2, w2 = w / 2, h4 = h / 4, w4 = w / 4;
  t.h = h;
  t.w = w;
  t.x.resize(static_cast<Eigen::Index>(h) * w, 1);
  for (std::size_t i = 0; i < img.pixels(); ++i)
    t.x(static_cast<Eigen::Index>(i), 0) = static_cast<float>(img[i]);

  e1a_.forward(p, t.x, h, w, t.e1a);
  relu(t.e1a);
  e1b_.forward(p, t.e1a, h, w, t.e1b);
  relu(t.e1b);
  maxpool(t.e1b, h, w, t.p1, t.arg1);
  e2a_.forward(p, t.p1, h2, w2, t.e2a);
  relu(t.e2a);
  e2b_.forward(p, t.e2a, h2, w2, t.e2b);
  relu(t.e2b);
  maxpool(t.e2b, h2, w2, t.p2, t.arg2);
  b_a_.forward(p, t.p2, h4, w4, t.ba);
  relu(t.ba);
  b_b_.forward(p, t.ba, h4, w4, t.bb);
  relu(t.bb);
  up2_.forward(p, t.bb, h4, w4, t.u2);
  t.c2.resize(t.e2b.rows(), t.e2b.cols() + t.u2.cols());
  t.c2 << t.e2b, t.u2;
  d2a_.forward(p, t.c2, h2, w2, t.d2a);
  relu(t.d2a);
  d2b_.forward(p, t.d2a, h2, w2, t.d2b);
  relu(t.d2b);
  up1_.forward(p, t.d2b, h2, w2, t.u1);
  t.c1.resize(t.e1b.rows(), t.e1b.cols() + t.u1.cols());
  t.c1 << t.e1b, t.u1;
  d1a_.forward(p, t.c1, h, w, t.d1a);
  relu(t.d1a);
  d1b_.forward(p, t.d1a, h, w, t.d1b);
  relu(t.d1b);

  ConstMapMat hw(p + head_offset_, base_, classes_);
  Eigen::Map<const Vec> hb(p + head_offset_ + static_cast<std::size_t>(base_) * classes_, classes_);
  t.logits.noalias() = t.d1b * hw;
  t.logits.rowwise() += hb.transpose();

  std::vector<double> evidence(img.pixels() * classes_);
  for (std::size_t i = 0; i < img.pixels(); ++i)
    for (int k = 0; k < classes_; ++k)
      evidence[i * classes_ + k] = softplus(t.logits(static_cast<Eigen::Index>(i), k));
  return EvidenceMap(img.shape(), classes_, std::move(evidence));
}

void UNet::backward(const Trace& t, std::span<const double> grad_evidence,
                    std::span<float> grads) const {
  if (grads.size() != params_.size())
    throw Error(ErrorKind::kDimensionMismatch, "gradient buffer does not match parameters");
  const std::size_t V = static_cast<std::size_t>(t.h) * t.w;
  if (grad_evidence.size() != V * classes_)
    throw Error(ErrorKind::kDimensionMismatch, "evidence gradient is not V x K");
  const float* p = params_.data();
  float* g = grads.data();
  const int h = t.h, w = t.w, h2 = h / 2, w2 = w / 2, h4 = h / 4, w4 = w / 4;
  const int c = base_;

  Mat dlogits(static_cast<Eigen::Index>(V), classes_);
  for (std::size_t i = 0; i < V; ++i)
    for (int k = 0; k < classes_; ++k) {
      const auto ii = static_cast<Eigen::Index>(i);
      dlogits(ii, k) = static_cast<float>(grad_evidence[i * classes_ + k]) * sigmoid(t.logits(ii, k));
    }
  MapMat ghw(g + head_offset_, base_, classes_);
  Eigen::Map<Vec> ghb(g + head_offset_ + static_cast<std::size_t>(base_) * classes_, classes_);
  ghw.noalias() += t.d1b.transpose() * dlogits;
  ghb += dlogits.colwise().sum().transpose();
  ConstMapMat hw(p + head_offset_, base_, classes_);
  Mat d = dlogits * hw.transpose();

  Mat dn;
  relu_back(t.d1b, d);
  d1b_.backward(p, t.d1a, d, h, w, g, &dn);
  relu_back(t.d1a, dn);
  Mat dc1;
  d1a_.backward(p, t.c1, dn, h, w, g, &dc1);
  Mat skip1 = dc1.leftCols(c);
  Mat du1 = dc1.rightCols(c);
  Mat dd2b;
  up1_.backward(p, t.d2b, du1, h2, w2, g, dd2b);
  relu_back(t.d2b, dd2b);
  Mat dd2a;
  d2b_.backward(p, t.d2a, dd2b, h2, w2, g, &dd2a);
  relu_back(t.d2a, dd2a);
  Mat dc2;
  d2a_.backward(p, t.c2, dd2a, h2, w2, g, &dc2);
  Mat skip2 = dc2.leftCols(2 * c);
  Mat du2 = dc2.rightCols(2 * c);
  Mat dbb;
  up2_.backward(p, t.bb, du2, h4, w4, g, dbb);
  relu_back(t.bb, dbb);
  Mat dba;
  b_b_.backward(p, t.ba, dbb, h4, w4, g, &dba);
  relu_back(t.ba, dba);
  Mat dp2;
  b_a_.backward(p, t.p2, dba, h4, w4, g, &dp2);
  Mat de2b;
  maxpool_back(dp2, t.arg2, h2, w2, de2b);
  de2b += skip2;
  relu_back(t.e2b, de2b);
  Mat de2a;
  e2b_.backward(p, t.e2a, de2b, h2, w2, g, &de2a);
  relu_back(t.e2a, de2a);
  Mat dp1;
  e2a_.backward(p, t.p1, de2a, h2, w2, g, &dp1);
  Mat de1b;
  maxpool_back(dp1, t.arg1, h, w, de1b);
  de1b += skip1;
  relu_back(t.e1b, de1b);
  Mat de1a;
  e1b_.backward(p, t.e1a, de1b, h, w, g, &de1a);
  relu_back(t.e1a, de1a);
  e1a_.backward(p, t.x, de1a, h, w, g, nullptr);
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0f), v_(n, 0.0f) {}

void Adam::step(std::span<float> params, std::span<const float> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw Error(ErrorKind::kDimensionMismatch, "Adam state does not match parameters");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gi = grads[i];
    const double m = b1_ * m_[i] + (1.0 - b1_) * gi;
    const double v = b2_ * v_[i] + (1.0 - b2_) * gi * gi;
    m_[i] = static_cast<float>(m);
    v_[i] = static_cast<float>(v);
    params[i] -= static_cast<float>(lr_ * (m / c1) / (std::sqrt(v / c2) + eps_));
  }
}

void save_checkpoint(const std::filesystem::path& dir, const UNet& net, int epoch,
                     std::uint64_t seed, const nlohmann::json& config) {
  std::filesystem::create_directories(dir);
  nlohmann::json tensors = nlohmann::json::array();
  const auto params = net.parameters();
  for (const auto& slot : net.slots()) {
    const std::string file = slot.name + ".f32";
    io::write_f32(dir / file, params.subspan(slot.offset, slot.size));
    tensors.push_back({{"name", slot.name}, {"shape", slot.shape}, {"file", file}});
  }
  io::write_json(dir / "manifest.json",
                 {{"architecture", net.architecture()},
                  {"architecture_hash", net.architecture_hash()},
                  {"classes", net.classes()},
                  {"base_channels", net.base_channels()},
                  {"epoch", epoch},
                  {"seed", seed},
                  {"config", config},
                  {"tensors", tensors}});
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_regular_file(dir / "manifest.json"))
    throw Error(ErrorKind::kIo, "no checkpoint manifest in " + dir.string());
  const auto manifest = io::read_json(dir / "manifest.json");
  LoadedCheckpoint out{UNet(manifest.at("classes").get<int>(),
                            manifest.at("base_channels").get<int>(), 0),
                       manifest.at("epoch").get<int>(), manifest.at("seed").get<std::uint64_t>(),
                       manifest.value("config", nlohmann::json::object())};
  if (out.net.architecture_hash() != manifest.at("architecture_hash").get<std::string>())
    throw Error(ErrorKind::kIo, "checkpoint architecture hash mismatch");
  auto params = out.net.parameters();
  for (const auto& slot : out.net.slots()) {
    const auto values = io::read_f32(dir / (slot.name + ".f32"));
    if (values.size() != slot.size)
      throw Error(ErrorKind::kIo, "tensor " + slot.name + " has the wrong size");
    std::copy(values.begin(), values.end(), params.begin() + static_cast<std::ptrdiff_t>(slot.offset));
  }
  return out;
}

}  // namespace evidseg::nn
