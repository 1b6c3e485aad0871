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

#include "evidseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "evidseg/imageops.hpp"
#include "evidseg/io.hpp"
#include "evidseg/metrics.hpp"
#include "evidseg/reports.hpp"

namespace evidseg::trainer {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum Purpose : std::uint64_t { kShuffle = 1, kPairs, kNoise, kHard };

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
}

double anneal_alpha(double t, int total_epochs, double alpha0) {
  if (total_epochs <= 0) throw Error(ErrorKind::kInvalidArgument, "annealing needs T >= 1");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0))
    throw Error(ErrorKind::kInvalidArgument, "alpha0 must lie in (0, 1]");
  if (t < 0.0 || t > total_epochs)
    throw Error(ErrorKind::kInvalidArgument, "epoch outside [0, T]");
  return alpha0 * std::exp(-(std::log(alpha0) / total_epochs) * t);
}


TrainConfig make_config(Profile p) {
  TrainConfig cfg;
  cfg.profile = p;
  std::tie(cfg.supervision.beta, cfg.supervision.gamma) = profile_multipliers(p);
  return cfg;
}

ScheduleState schedule(int t, const TrainConfig& cfg) {
  ScheduleState s;
  s.epoch = t;
  s.total = cfg.epochs;
  s.alpha = anneal_alpha(t, cfg.epochs, cfg.alpha0);
  s.lambda_ce = cfg.lambda_ce;
  s.lambda_kl = std::min(1.0, static_cast<double>(t) / cfg.kl_warmup_epochs);
  s.lambda_dice = 1.0 - s.alpha;
  s.beta = cfg.use_gu ? cfg.supervision.beta * s.alpha : 0.0;
  s.gamma = cfg.use_nu ? cfg.supervision.gamma * s.alpha : 0.0;
  return s;
}

ScheduleState schedule(int t, const TrainConfig& cfg, Profile profile) {
  TrainConfig c = cfg;
  std::tie(c.supervision.beta, c.supervision.gamma) = profile_multipliers(profile);
  return schedule(t, c);
}

TotalLoss total_loss(const LossTerms& terms, double beta, double gamma) {
  if (!terms.clean || !terms.seg)
    throw Error(ErrorKind::kInvalidArgument, "total loss needs the clean pass and L_seg");
  TotalLoss out;
  out.seg = terms.seg->total.value;
  out.grad_clean = terms.seg->total.grad;
  if (terms.gu) {
    out.gu = terms.gu->value;
    if (beta != 0.0) edl::chain_uncertainty(*terms.clean, terms.gu->grad, beta, out.grad_clean);
  }
  if (terms.nu) {
    out.nu = terms.nu->value;
    if (gamma != 0.0) {
      if (!terms.noised1 || !terms.noised2)
        throw Error(ErrorKind::kInvalidArgument, "noise loss needs both noised passes");
      edl::chain_uncertainty(*terms.clean, terms.nu->grad[0], gamma, out.grad_clean);
      edl::chain_uncertainty(*terms.noised1, terms.nu->grad[1], gamma, out.grad_noised1);
      edl::chain_uncertainty(*terms.noised2, terms.nu->grad[2], gamma, out.grad_noised2);
    }
  }
  out.value = out.seg + beta * out.gu + gamma * out.nu;
  return out;
}

std::vector<PreparedSample> prepare(const std::vector<Sample>& samples,
                                    const SupervisionConfig& cfg) {
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.push_back({s, imageops::make_geometry(s.image, s.label, cfg.boundary_radius,
                                              cfg.gradient_sigma)});
  return out;
}

double mean_dsc(const supervision::EvidenceModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) {
    const EvidenceMap e = model.infer(s.image);
    const LabelMap pred(s.label.shape(), s.label.classes(), edl::predict(e));
    sum += metrics::dsc(pred, s.label).mean;
  }
  return sum / samples.size();
}

TrainResult train(const TrainConfig& cfg, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& opt) {
  cfg.validate();
  if (train_set.empty()) throw Error(ErrorKind::kInvalidArgument, "empty training set");
  for (const auto& s : train_set)
    if (s.label.classes() != cfg.classes)
      throw Error(ErrorKind::kInvalidArgument, "training labels disagree with K");
  const auto& sup = cfg.supervision;
  const auto data = prepare(train_set, sup);

  TrainResult result{nn::UNet(cfg.classes, cfg.base_channels, cfg.seed), {}};
  nn::UNet& net = result.net;
  nn::Adam adam(net.parameters().size(), cfg.lr);
  std::vector<float> grads(net.parameters().size());
  const edl::DiceOptions dice_opt{1e-5, cfg.dice_include_background};

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::optional<reports::EpochLogWriter> log_writer;
  if (opt.out_dir) log_writer.emplace(*opt.out_dir / "epoch_log.csv");

  nn::UNet::Trace t0, t1, t2;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const ScheduleState sched = schedule(epoch, cfg);
    const edl::SegWeights weights{sched.lambda_ce, sched.lambda_dice, sched.lambda_kl};
    const bool run_gu = cfg.use_gu;
    const bool run_nu = cfg.use_nu && sched.gamma > 0.0;
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, kShuffle, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog log;
    log.epoch = epoch;
    std::size_t seen = 0;
    for (std::size_t start = 0, batch = 0; start < order.size();
         start += cfg.batch_size, ++batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      std::fill(grads.begin(), grads.end(), 0.0f);
      double batch_total = 0.0;
      for (std::size_t pos = start; pos < stop; ++pos) {
        const std::size_t idx = order[pos];
        const auto& ps = data[idx];
        const ImageSlice& img = ps.sample.image;
        const LabelMap& y = ps.sample.label;

        const EvidenceMap e0 = net.forward(img, t0);
        const edl::SegLoss seg = edl::loss_seg(e0, y, weights, dice_opt);
        const ScalarMap u0 = edl::uncertainty(e0);

        std::optional<supervision::UncertaintyGrad> gu;
        if (run_gu && !ps.geometry.empty())
          gu = supervision::gradient_supervision_loss(
              u0, ps.geometry, sup.max_pairs, derive_seed(cfg.seed, kPairs, epoch, idx));

        std::optional<EvidenceMap> e1, e2;
        std::optional<supervision::NoiseLoss> nu;
        if (run_nu) {
          const auto noised =
              supervision::make_noised_pair(img, sup, derive_seed(cfg.seed, kNoise, epoch, idx));
          e1 = net.forward(noised.noised1, t1);
          e2 = net.forward(noised.noised2, t2);
          supervision::NoisePassBundle bundle{u0, edl::uncertainty(*e1), edl::uncertainty(*e2),
                                              sup.mu1, sup.mu2};
          const std::uint64_t hs = derive_seed(cfg.seed, kHard, epoch, idx);
          std::vector<std::size_t> sampled;
          if (cfg.use_hsd) {
            sampled = supervision::detect_hard_samples(bundle.u0, bundle.u1, y,
                                                       sup.samples_per_class, hs).sampled;
          } else {
            std::vector<std::size_t> all(y.pixels());
            std::iota(all.begin(), all.end(), 0);
            sampled = supervision::class_balanced_sample(all, y, sup.samples_per_class, hs);
          }
          nu = supervision::noise_supervision_loss(bundle, ps.geometry, sampled, sup.d0);
        }

        LossTerms terms{&e0, e1 ? &*e1 : nullptr, e2 ? &*e2 : nullptr, &seg,
                        gu ? &*gu : nullptr, nu ? &*nu : nullptr};
        const TotalLoss total = total_loss(terms, sched.beta, sched.gamma);
        if (!std::isfinite(total.value)) {
          std::ostringstream os;
          os << "non-finite loss at epoch " << epoch << ", batch " << batch << " (sample "
             << idx << ")";
          throw Error(ErrorKind::kNumerical, os.str());
        }
        batch_total += total.value;
        log.ce += seg.ce;
        log.dice += seg.dice;
        log.kl += seg.kl;
        log.gu += total.gu;
        log.nu += total.nu;
        log.total += total.value;
        ++seen;

        auto back = [&](const nn::UNet::Trace& trace, std::vector<double> g) {
          if (g.empty() || all_zero(g)) return;
          for (double& v : g) v *= inv;
          net.backward(trace, g, grads);
        };
        back(t0, total.grad_clean);
        if (run_nu) {
          back(t1, total.grad_noised1);
          back(t2, total.grad_noised2);
        }
      }
      if (!std::isfinite(batch_total))
        throw Error(ErrorKind::kNumerical, "non-finite batch loss");
      adam.step(net.parameters(), grads);
    }
    const double n = static_cast<double>(seen);
    log.ce /= n;
    log.dice /= n;
    log.kl /= n;
    log.gu /= n;
    log.nu /= n;
    log.total /= n;
    log.val_dsc = mean_dsc(net, val_set);
    result.log.push_back(log);
    if (opt.out_dir) {
      nn::save_checkpoint(*opt.out_dir / "checkpoint", net, epoch, cfg.seed, io::to_json(cfg));
      log_writer->append(log);
    }
    if (opt.on_epoch) opt.on_epoch(log);
  }
  return result;
}

}  // namespace evidseg::trainer
