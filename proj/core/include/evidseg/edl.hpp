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

#include <vector>

#include "evidseg/datamodel.hpp"

// Evidential segmentation head: Dirichlet quantities and the three
// segmentation losses, each with its gradient with respect to the evidence.

namespace evidseg::edl {

// A scalar loss and d(loss)/d(e_ik), laid out like EvidenceMap::evidence().
struct LossGrad {
  double value = 0.0;
  std::vector<double> grad;
};

struct DiceOptions {
  double epsilon = 1e-5;
  bool include_background = false;
};

struct SegWeights {
  double ce = 1.0;
  double dice = 1.0;
  double kl = 0.0;
};

struct SegLoss {
  double ce = 0.0;
  double dice = 0.0;
  double kl = 0.0;
  LossGrad total;
};

ScalarMap uncertainty(const EvidenceMap& e);

// V x K expected probabilities, pixel-major.
std::vector<double> expected_probs(const EvidenceMap& e);

std::vector<std::uint8_t> predict(const EvidenceMap& e);

// du_i/de_ik = -u_i^2 / K for every k. Maps a gradient on u onto evidence and
// accumulates it (scaled) into grad_e.
void chain_uncertainty(const EvidenceMap& e, const std::vector<double>& grad_u,
                       double scale, std::vector<double>& grad_e);

// Mean over pixels of psi(S_i) - psi(alpha_i,y_i).
LossGrad loss_ce(const EvidenceMap& e, const LabelMap& y);

// 1 - mean_k (2 sum p y + eps) / (sum p^2 + sum y^2 + eps) over the selected
// classes, on expected probabilities.
LossGrad loss_dice(const EvidenceMap& e, const LabelMap& y, const DiceOptions& opt = {});

// Mean over pixels of KL(Dir(alpha~) || Dir(1)), alpha~ = y + (1 - y) * alpha.
LossGrad loss_kl(const EvidenceMap& e, const LabelMap& y);

SegLoss loss_seg(const EvidenceMap& e, const LabelMap& y, const SegWeights& w,
                 const DiceOptions& opt = {});

}  // namespace evidseg::edl
