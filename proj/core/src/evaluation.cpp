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

#include "evidseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "evidseg/edl.hpp"
#include "evidseg/imageops.hpp"
#include "evidseg/trainer.hpp"

namespace evidseg::evaluation {
namespace {

constexpr std::uint64_t kSweepTag = 0x5eed;
constexpr std::uint64_t kPairTag = 0x9a1f;

bool flagged(const MetricsReport& r, const std::string& name) {
  return std::find(r.flags.begin(), r.flags.end(), name) != r.flags.end();
}

}  // namespace

std::uint64_t sweep_seed(std::uint64_t seed, std::size_t image, std::size_t level) {
  return trainer::derive_seed(seed, kSweepTag, image, level);
}

ImageEval score_maps(const Sample& sample, const EvidenceMap& clean,
                     const std::vector<EvidenceMap>& levels, const EvalOptions& opt,
                     std::size_t index) {
  if (levels.size() != opt.sweep.size())
    throw Error(ErrorKind::kDimensionMismatch, "one evidence map per sweep level expected");
  const LabelMap& truth = sample.label;
  const int K = truth.classes();
  ImageEval out;
  MetricsReport& r = out.report;
  const BoundaryGeometry geom =
      imageops::make_geometry(sample.image, truth, opt.boundary_radius, opt.gradient_sigma);

  const LabelMap pred(truth.shape(), K, edl::predict(clean));
  const ScalarMap u = edl::uncertainty(clean);
  const auto d = metrics::dsc(pred, truth);
  r.dsc = d.mean;
  r.class_dsc = d.per_class;
  const auto h = metrics::hd95(pred, truth);
  for (int k : h.skipped) r.flags.push_back("hd95_class_" + std::to_string(k) + "_skipped");
  if (h.defined()) {
    r.hd95 = h.value;
  } else {
    r.flags.push_back("hd95_undefined");
  }
  r.ece = metrics::ece(edl::expected_probs(clean), K, truth, opt.ece_bins);
  const auto ueo = metrics::ueo(u, pred, truth, opt.ueo_step);
  r.ueo = ueo.value;
  if (ueo.degenerate) r.flags.push_back("ueo_degenerate");

  try {
    r.ucc_g = metrics::ucc_gradient(u, geom);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUndefined) throw;
    r.flags.push_back("ucc_g_undefined");
  }
  try {
    const auto ur = metrics::ur_gradient(u, geom, opt.pair_cap,
                                         trainer::derive_seed(opt.seed, kPairTag, index));
    r.ur_g = ur.ratio;
    r.ur_g_ties = ur.ties;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUndefined) throw;
    r.flags.push_back("ur_g_undefined");
  }

  std::vector<metrics::NoiseLevel> sweep;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const LabelMap lp(truth.shape(), K, edl::predict(levels[l]));
    out.level_dsc.push_back(metrics::dsc(lp, truth).mean);
    out.level_ece.push_back(metrics::ece(edl::expected_probs(levels[l]), K, truth, opt.ece_bins));
    sweep.push_back({opt.sweep[l], edl::uncertainty(levels[l])});
  }
  try {
    r.ucc_mu = metrics::ucc_noise(sweep, geom, opt.d0);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUndefined) throw;
    r.flags.push_back("ucc_mu_undefined");
  }
  try {
    r.ur_mu = metrics::ur_noise(sweep, geom, opt.d0);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUndefined) throw;
    r.flags.push_back("ur_mu_undefined");
  }
  if (opt.keep_maps) {
    out.evidence = clean;
    out.level_evidence = levels;
    out.geometry = geom;
  }
  return out;
}

ImageEval evaluate_image(const supervision::EvidenceModel& model, const Sample& sample,
                         std::size_t index, const EvalOptions& opt) {
  const EvidenceMap clean = model.infer(sample.image);
  std::vector<EvidenceMap> levels;
  for (std::size_t l = 0; l < opt.sweep.size(); ++l) {
    const NoiseSpec spec{opt.sweep[l], opt.noise_stddev, NoiseMode::kGlobal, std::nullopt,
                         sweep_seed(opt.seed, index, l)};
    levels.push_back(model.infer(imageops::apply_noise(sample.image, spec)));
  }
  return score_maps(sample, clean, levels, opt, index);
}

Evaluation evaluate(const supervision::EvidenceModel& model, const std::vector<Sample>& samples,
                    const EvalOptions& opt) {
  if (samples.empty()) throw Error(ErrorKind::kInvalidArgument, "nothing to evaluate");
  Evaluation ev;
  ev.sweep = opt.sweep;
  for (std::size_t i = 0; i < samples.size(); ++i)
    ev.images.push_back(evaluate_image(model, samples[i], i, opt));

  struct Acc {
    double sum = 0.0;
    int n = 0;
  };
  std::map<std::string, Acc> acc;
  std::map<std::string, int> flag_counts;
  auto add = [&](const char* name, double v, bool ok) {
    if (!ok) return;
    acc[name].sum += v;
    ++acc[name].n;
  };
  const std::size_t fg = samples.front().label.classes() - 1;
  std::vector<Acc> class_acc(fg);
  for (const auto& im : ev.images) {
    const auto& r = im.report;
    add("dsc", r.dsc, true);
    add("hd95", r.hd95, !flagged(r, "hd95_undefined"));
    add("ece", r.ece, true);
    add("ueo", r.ueo, true);
    add("ucc_g", r.ucc_g, !flagged(r, "ucc_g_undefined"));
    add("ucc_mu", r.ucc_mu, !flagged(r, "ucc_mu_undefined"));
    add("ur_g", r.ur_g, !flagged(r, "ur_g_undefined"));
    add("ur_g_ties", r.ur_g_ties, !flagged(r, "ur_g_undefined"));
    add("ur_mu", r.ur_mu, !flagged(r, "ur_mu_undefined"));
    for (std::size_t k = 0; k < std::min(fg, r.class_dsc.size()); ++k) {
      class_acc[k].sum += r.class_dsc[k];
      ++class_acc[k].n;
    }
    for (const auto& f : r.flags) ++flag_counts[f];
  }
  auto mean = [&](const char* name) {
    const Acc& a = acc[name];
    return a.n > 0 ? a.sum / a.n : 0.0;
  };
  MetricsReport& agg = ev.aggregate;
  agg.dsc = mean("dsc");
  agg.hd95 = mean("hd95");
  agg.ece = mean("ece");
  agg.ueo = mean("ueo");
  agg.ucc_g = mean("ucc_g");
  agg.ucc_mu = mean("ucc_mu");
  agg.ur_g = mean("ur_g");
  agg.ur_g_ties = mean("ur_g_ties");
  agg.ur_mu = mean("ur_mu");
  for (const auto& a : class_acc) agg.class_dsc.push_back(a.n > 0 ? a.sum / a.n : 0.0);
  for (const auto& [f, n] : flag_counts) agg.flags.push_back(f + ":" + std::to_string(n));

  const std::size_t L = opt.sweep.size();
  ev.level_dsc.assign(L, 0.0);
  ev.level_ece.assign(L, 0.0);
  for (const auto& im : ev.images)
    for (std::size_t l = 0; l < L; ++l) {
      ev.level_dsc[l] += im.level_dsc[l] / samples.size();
      ev.level_ece[l] += im.level_ece[l] / samples.size();
    }
  if (L < 2) {
    agg.flags.push_back("robustness_deltas_need_two_levels");
  } else {
    ev.dsc_deltas = metrics::robustness_deltas(opt.sweep, ev.level_dsc);
    ev.ece_deltas = metrics::robustness_deltas(opt.sweep, ev.level_ece);
    ev.mean_abs_dsc_delta = metrics::mean_abs_delta(ev.dsc_deltas);
    ev.mean_abs_ece_delta = metrics::mean_abs_delta(ev.ece_deltas);
  }
  return ev;
}

}  // namespace evidseg::evaluation
