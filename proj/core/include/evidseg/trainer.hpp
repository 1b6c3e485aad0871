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
#include <functional>
#include <optional>
#include <vector>

#include "evidseg/datamodel.hpp"
#include "evidseg/edl.hpp"
#include "evidseg/network.hpp"
#include "evidseg/supervision.hpp"

namespace evidseg::trainer {

// alpha(t) = alpha0 * exp(-(ln alpha0 / T) t): alpha0 at t = 0, 1 at t = T.
double anneal_alpha(double t, int total_epochs, double alpha0);

struct ScheduleState {
  int epoch = 0;
  int total = 1;
  double alpha = 0.0;
  double lambda_ce = 1.0;
  double lambda_dice = 0.0;
  double lambda_kl = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

// TrainConfig with the profile's beta/gamma multipliers filled in.
TrainConfig make_config(Profile p);

// Weights at epoch t, using the multipliers stored in cfg.supervision and the
// ablation switches (a disabled loss gets weight 0).
ScheduleState schedule(int t, const TrainConfig& cfg);

// Weights at epoch t with the multipliers of the given profile.
ScheduleState schedule(int t, const TrainConfig& cfg, Profile profile);

// One clean pass plus optional noised passes, with their supervision losses.
struct LossTerms {
  const EvidenceMap* clean = nullptr;
  const EvidenceMap* noised1 = nullptr;
  const EvidenceMap* noised2 = nullptr;
  const edl::SegLoss* seg = nullptr;
  const supervision::UncertaintyGrad* gu = nullptr;  // d/du0
  const supervision::NoiseLoss* nu = nullptr;        // d/du0, d/du1, d/du2
};

struct TotalLoss {
  double value = 0.0;
  double seg = 0.0;
  double gu = 0.0;
  double nu = 0.0;
  // d(total)/d(evidence) of each pass; empty when the pass gets no gradient.
  std::vector<double> grad_clean, grad_noised1, grad_noised2;
};

// L_total = L_seg + beta * L_gu + gamma * L_nu, gradients pushed through
// u = K / S onto the evidence of every pass.
TotalLoss total_loss(const LossTerms& terms, double beta, double gamma);

struct PreparedSample {
  Sample sample;
  BoundaryGeometry geometry;
};

std::vector<PreparedSample> prepare(const std::vector<Sample>& samples,
                                    const SupervisionConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double ce = 0, dice = 0, kl = 0, gu = 0, nu = 0, total = 0;
  double val_dsc = 0;
};

struct TrainOptions {
  // Checkpoint (each epoch) and epoch_log.csv go here when set.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  nn::UNet net;
  std::vector<EpochLog> log;
};

// Full optimisation loop; deterministic given cfg.seed. Throws
// ErrorKind::kNumerical when the loss goes non-finite.
TrainResult train(const TrainConfig& cfg, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& opt = {});

// Mean foreground DSC of the model's argmax over a sample set.
double mean_dsc(const supervision::EvidenceModel& model, const std::vector<Sample>& samples);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace evidseg::trainer
