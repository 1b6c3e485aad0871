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

#include "evidseg/edl.hpp"

#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace evidseg::edl {
namespace {

using boost::math::digamma;
using boost::math::trigamma;

void check_pair(const EvidenceMap& e, const LabelMap& y) {
  if (e.shape() != y.shape() || e.classes() != y.classes())
    throw Error(ErrorKind::kDimensionMismatch, "evidence and label disagree on shape or K");
}

}  // namespace

ScalarMap uncertainty(const EvidenceMap& e) {
  ScalarMap u(e.shape(), 0.0);
  for (std::size_t i = 0; i < e.pixels(); ++i) u.values[i] = e.uncertainty(i);
  return u;
}

std::vector<double> expected_probs(const EvidenceMap& e) {
  const int K = e.classes();
  std::vector<double> p(e.pixels() * K);
  for (std::size_t i = 0; i < e.pixels(); ++i) {
    const double s = e.strength(i);
    for (int k = 0; k < K; ++k) p[i * K + k] = e.alpha(i, k) / s;
  }
  return p;
}

std::vector<std::uint8_t> predict(const EvidenceMap& e) {
  std::vector<std::uint8_t> out(e.pixels());
  for (std::size_t i = 0; i < e.pixels(); ++i) out[i] = static_cast<std::uint8_t>(e.argmax(i));
  return out;
}

void chain_uncertainty(const EvidenceMap& e, const std::vector<double>& grad_u,
                       double scale, std::vector<double>& grad_e) {
  const int K = e.classes();
  grad_e.resize(e.evidence().size(), 0.0);
  for (std::size_t i = 0; i < e.pixels(); ++i) {
    if (grad_u[i] == 0.0) continue;
    const double u = e.uncertainty(i);
    const double d = -scale * grad_u[i] * u * u / K;
    for (int k = 0; k < K; ++k) grad_e[i * K + k] += d;
  }
}

LossGrad loss_ce(const EvidenceMap& e, const LabelMap& y) {
  check_pair(e, y);
  const int K = e.classes();
  const std::size_t V = e.pixels();
  LossGrad out{0.0, std::vector<double>(V * K)};
  for (std::size_t i = 0; i < V; ++i) {
    const double s = e.strength(i);
    const int c = y[i];
    out.value += digamma(s) - digamma(e.alpha(i, c));
    const double ts = trigamma(s) / V;
    for (int k = 0; k < K; ++k) out.grad[i * K + k] = ts;
    out.grad[i * K + c] -= trigamma(e.alpha(i, c)) / V;
  }
  out.value /= V;
  return out;
}

LossGrad loss_dice(const EvidenceMap& e, const LabelMap& y, const DiceOptions& opt) {
  check_pair(e, y);
  const int K = e.classes();
  const std::size_t V = e.pixels();
  const int first = opt.include_background ? 0 : 1;
  const int used = K - first;
  const auto p = expected_probs(e);

  std::vector<double> inter(K, 0.0), psq(K, 0.0), ysq(K, 0.0);
  for (std::size_t i = 0; i < V; ++i)
    for (int k = first; k < K; ++k) {
      const double pk = p[i * K + k], yk = y.one_hot(i, k);
      inter[k] += pk * yk;
      psq[k] += pk * pk;
      ysq[k] += yk;
    }
  LossGrad out{1.0, std::vector<double>(V * K, 0.0)};
  std::vector<double> num(K), den(K);
  for (int k = first; k < K; ++k) {
    num[k] = 2.0 * inter[k] + opt.epsilon;
    den[k] = psq[k] + ysq[k] + opt.epsilon;
    out.value -= num[k] / den[k] / used;
  }
  // dL/dp_ik, then through p_ik = alpha_ik / S_i.
  std::vector<double> gp(K);
  for (std::size_t i = 0; i < V; ++i) {
    double dot = 0.0;
    for (int k = 0; k < K; ++k) {
      gp[k] = 0.0;
      if (k >= first) {
        const double pk = p[i * K + k];
        gp[k] = -(2.0 * y.one_hot(i, k) / den[k] - num[k] * 2.0 * pk / (den[k] * den[k])) / used;
      }
      dot += gp[k] * p[i * K + k];
    }
    const double s = e.strength(i);
    for (int j = 0; j < K; ++j) out.grad[i * K + j] = (gp[j] - dot) / s;
  }
  return out;
}

LossGrad loss_kl(const EvidenceMap& e, const LabelMap& y) {
  check_pair(e, y);
  const int K = e.classes();
  const std::size_t V = e.pixels();
  LossGrad out{0.0, std::vector<double>(V * K, 0.0)};
  const double lgamma_k = std::lgamma(static_cast<double>(K));
  std::vector<double> at(K);
  for (std::size_t i = 0; i < V; ++i) {
    const int c = y[i];
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      at[k] = k == c ? 1.0 : e.alpha(i, k);
      s += at[k];
    }
    const double psi_s = digamma(s);
    double kl = std::lgamma(s) - lgamma_k;
    double excess = 0.0;
    for (int k = 0; k < K; ++k) {
      kl += -std::lgamma(at[k]) + (at[k] - 1.0) * (digamma(at[k]) - psi_s);
      excess += at[k] - 1.0;
    }
    out.value += kl;
    const double tri_s = trigamma(s);
    for (int k = 0; k < K; ++k) {
      if (k == c) continue;
      out.grad[i * K + k] = ((at[k] - 1.0) * trigamma(at[k]) - tri_s * excess) / V;
    }
  }
  out.value /= V;
  return out;
}

SegLoss loss_seg(const EvidenceMap& e, const LabelMap& y, const SegWeights& w,
                 const DiceOptions& opt) {
  if (w.ce < 0.0 || w.dice < 0.0 || w.kl < 0.0)
    throw Error(ErrorKind::kInvalidArgument, "segmentation loss weights must be >= 0");
  SegLoss out;
  out.total.grad.assign(e.evidence().size(), 0.0);
  auto add = [&](double weight, const LossGrad& part) {
    out.total.value += weight * part.value;
    for (std::size_t j = 0; j < part.grad.size(); ++j) out.total.grad[j] += weight * part.grad[j];
  };
  const LossGrad ce = loss_ce(e, y);
  const LossGrad dice = loss_dice(e, y, opt);
  const LossGrad kl = loss_kl(e, y);
  out.ce = ce.value;
  out.dice = dice.value;
  out.kl = kl.value;
  add(w.ce, ce);
  add(w.dice, dice);
  add(w.kl, kl);
  return out;
}

}  // namespace evidseg::edl
