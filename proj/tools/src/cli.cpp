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

#include "evidseg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evidseg/edl.hpp"
#include "evidseg/evaluation.hpp"
#include "evidseg/imageops.hpp"
#include "evidseg/io.hpp"
#include "evidseg/network.hpp"
#include "evidseg/reports.hpp"
#include "evidseg/synthdata.hpp"
#include "evidseg/trainer.hpp"

namespace evidseg::cli {
namespace {

namespace fs = std::filesystem;

// Failure carrying its exit code; message is the one-line diagnostic.
struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw Failure{code, msg}; }

void require_fresh(const fs::path& out) {
  if (io::nonempty_dir(out)) fail(kUnsafeOverwrite, "refusing to overwrite nonempty " + out.string());
  if (fs::exists(out) && !fs::is_directory(out))
    fail(kUnsafeOverwrite, out.string() + " exists and is not a directory");
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) fail(kMissingArtifact, what + " not found: " + p.string());
}

// ---------------------------------------------------------------- generate-data

struct GenerateArgs {
  std::string out;
  int train = 200, val = 20, test = 50, size = 64, classes = 3;
  std::uint64_t seed = 7;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  require_fresh(a.out);
  synthdata::SceneSpec spec;
  spec.height = spec.width = a.size;
  spec.classes = a.classes;
  synthdata::build_dataset(a.out, {a.train, a.val, a.test}, spec, a.seed);
  out << "wrote " << a.train << "/" << a.val << "/" << a.test << " samples to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------- train

struct TrainArgs {
  std::string data, out, config, profile;
  std::optional<int> epochs, base_channels;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta0, gamma0;
  bool no_gu = false, no_nu = false, no_hsd = false;
};

TrainConfig resolve_config(const TrainArgs& a, std::ostream& err) {
  TrainConfig cfg;
  if (!a.config.empty()) {
    require_exists(a.config, "config file");
    cfg = io::train_config_from_json(io::read_json(a.config));
  }
  if (!a.profile.empty()) {
    cfg.profile = profile_from_string(a.profile);
    std::tie(cfg.supervision.beta, cfg.supervision.gamma) = profile_multipliers(cfg.profile);
  }
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.seed) cfg.seed = *a.seed;
  if (a.base_channels) cfg.base_channels = *a.base_channels;
  if (a.beta0) cfg.supervision.beta = *a.beta0;
  if (a.gamma0) cfg.supervision.gamma = *a.gamma0;
  if (a.no_gu) cfg.use_gu = false;
  if (a.no_hsd) cfg.use_hsd = false;
  if (a.no_nu) {
    if (a.gamma0 && *a.gamma0 > 0.0)
      err << "warning: --no-nu overrides --gamma0 " << *a.gamma0 << "; gamma forced to 0\n";
    cfg.use_nu = false;
  }
  // The stored multipliers reflect what actually trains.
  if (!cfg.use_gu) cfg.supervision.beta = 0.0;
  if (!cfg.use_nu) cfg.supervision.gamma = 0.0;
  cfg.data_dir = a.data;
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = resolve_config(a, err);
  require_exists(a.data, "dataset");
  require_fresh(a.out);
  const auto train_set = io::read_split(a.data, "train");
  const auto val_set = io::read_split(a.data, "val");
  if (train_set.empty()) fail(kMissingArtifact, "no training samples under " + a.data);
  fs::create_directories(a.out);
  io::write_json(fs::path(a.out) / "config.json", io::to_json(cfg));

  trainer::TrainOptions opt;
  opt.out_dir = fs::path(a.out);
  opt.on_epoch = [&](const trainer::EpochLog& l) {
    err << "epoch " << l.epoch << "/" << cfg.epochs << "  L_total " << l.total << "  val_DSC "
        << l.val_dsc << "\n";
  };
  trainer::train(cfg, train_set, val_set, opt);
  out << "checkpoint: " << (fs::path(a.out) / "checkpoint").string() << "\n";
  return kOk;
}

// ------------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string checkpoint, data, split = "test", sweep, out, name;
  std::uint64_t seed = 0;
  bool dump_maps = false;
};

std::vector<double> parse_sweep(const std::string& text) {
  if (text.empty()) return metrics::kDefaultSweep;
  std::vector<double> levels;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      fail(kUsage, "bad --sweep entry '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(v)) fail(kUsage, "bad --sweep entry '" + item + "'");
    levels.push_back(v);
    start = comma + 1;
  }
  return levels;
}

// Checkpoint directory itself, or a training run directory holding one.
fs::path checkpoint_dir(const fs::path& p) {
  require_exists(p, "checkpoint");
  if (fs::exists(p / "manifest.json")) return p;
  if (fs::exists(p / "checkpoint" / "manifest.json")) return p / "checkpoint";
  fail(kMissingArtifact, "no checkpoint manifest under " + p.string());
}

std::string run_label(const nlohmann::json& config) {
  TrainConfig c = io::train_config_from_json(config);
  std::vector<std::string> parts;
  if (!c.use_gu) parts.push_back("no-gu");
  if (!c.use_nu) parts.push_back("no-nu");
  if (!c.use_hsd) parts.push_back("no-hsd");
  if (c.use_gu && c.supervision.beta == 0.0) parts.push_back("beta0=0");
  if (c.use_nu && c.supervision.gamma == 0.0) parts.push_back("gamma0=0");
  std::string label = to_string(c.profile) + "-seed" + std::to_string(c.seed);
  label += parts.empty() ? "-full" : "";
  for (const auto& p : parts) label += "-" + p;
  return label;
}

ScalarMap rescale(const ScalarMap& m) {
  double hi = 0.0;
  for (double v : m.values) hi = std::max(hi, v);
  ScalarMap out = m;
  if (hi > 0.0)
    for (double& v : out.values) v /= hi;
  return out;
}

ScalarMap abs_diff(const ScalarMap& a, const ScalarMap& b) {
  ScalarMap out = a;
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = std::abs(a.values[i] - b.values[i]);
  return out;
}

// Square patch (a quarter of the shorter side) centred on the median
// boundary pixel, clipped to the image.
PatchBox boundary_patch(const Shape& shape, const BoundaryGeometry& geom) {
  const int side = std::max(2, std::min(shape.height, shape.width) / 4);
  int cy = shape.height / 2, cx = shape.width / 2;
  if (!geom.boundary.empty()) {
    const std::size_t i = geom.boundary[geom.boundary.size() / 2];
    cy = static_cast<int>(i / shape.width);
    cx = static_cast<int>(i % shape.width);
  }
  const int y0 = std::clamp(cy - side / 2, 0, shape.height - side);
  const int x0 = std::clamp(cx - side / 2, 0, shape.width - side);
  return PatchBox{y0, x0, side, side};
}

void dump_maps(const fs::path& dir, const std::string& stem, const nn::UNet& net,
               const Sample& s, const evaluation::ImageEval& ev,
               const evaluation::EvalOptions& opt, std::uint64_t seed) {
  fs::create_directories(dir);
  const fs::path base = dir / stem;
  io::write_evidence(base.string() + ".evidence.f64", ev.evidence);
  for (std::size_t l = 0; l < ev.level_evidence.size(); ++l)
    io::write_evidence(base.string() + ".level" + std::to_string(l) + ".evidence.f64",
                       ev.level_evidence[l]);

  const ScalarMap u = edl::uncertainty(ev.evidence);
  io::write_pgm(base.string() + ".uncertainty.pgm", u, 0.0, 1.0);
  const ScalarMap g = rescale(ScalarMap{ev.geometry.shape, ev.geometry.gradient});
  io::write_pgm(base.string() + ".gradient.pgm", g, 0.0, 1.0);
  // u - g/max(g), mapped from [-1, 1].
  ScalarMap overlay = u;
  for (std::size_t i = 0; i < u.values.size(); ++i) overlay.values[i] = u.values[i] - g.values[i];
  io::write_pgm(base.string() + ".gradient_overlay_diff.pgm", overlay, -1.0, 1.0);

  const double mu = 0.5;
  NoiseSpec patch{mu, opt.noise_stddev, NoiseMode::kPatch,
                  boundary_patch(s.image.shape(), ev.geometry), seed};
  NoiseSpec global{mu, opt.noise_stddev, NoiseMode::kGlobal, std::nullopt, seed};
  const ScalarMap up = edl::uncertainty(net.infer(imageops::apply_noise(s.image, patch)));
  const ScalarMap ug = edl::uncertainty(net.infer(imageops::apply_noise(s.image, global)));
  io::write_pgm(base.string() + ".patch_noise_diff.pgm", abs_diff(up, u), 0.0, 1.0);
  io::write_pgm(base.string() + ".global_noise_diff.pgm", abs_diff(ug, u), 0.0, 1.0);
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const fs::path ckpt = checkpoint_dir(a.checkpoint);
  require_exists(a.data, "dataset");
  require_exists(fs::path(a.data) / a.split, "split");
  require_fresh(a.out);
  const auto loaded = nn::load_checkpoint(ckpt);
  const TrainConfig cfg = io::train_config_from_json(loaded.config);

  evaluation::EvalOptions opt;
  opt.sweep = parse_sweep(a.sweep);
  opt.d0 = cfg.supervision.d0;
  opt.noise_stddev = cfg.supervision.noise_stddev;
  opt.boundary_radius = cfg.supervision.boundary_radius;
  opt.gradient_sigma = cfg.supervision.gradient_sigma;
  opt.seed = a.seed;
  opt.keep_maps = a.dump_maps;

  const auto names = io::list_samples(fs::path(a.data) / a.split);
  const auto samples = io::read_split(a.data, a.split);
  if (samples.empty()) fail(kMissingArtifact, "no samples in split " + a.split);
  for (const auto& s : samples)
    if (s.label.classes() != loaded.net.classes())
      fail(kUsage, "dataset K disagrees with the checkpoint");

  const auto ev = evaluation::evaluate(loaded.net, samples, opt);
  const std::string label = a.name.empty() ? run_label(loaded.config) : a.name;
  reports::write_evaluation(a.out, ev, names, loaded.net.classes(), label);
  if (a.dump_maps)
    for (std::size_t i = 0; i < samples.size(); ++i)
      dump_maps(fs::path(a.out) / "maps", names[i], loaded.net, samples[i], ev.images[i], opt,
                trainer::derive_seed(a.seed, 0xd0, i));
  out << reports::aggregate_csv(ev, label);
  return kOk;
}

// -------------------------------------------------------------------- compare

struct CompareArgs {
  std::vector<std::string> runs;
  std::string out;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  if (a.runs.size() < 2) fail(kUsage, "compare needs at least two run directories");
  std::vector<reports::RunRow> rows;
  for (const auto& r : a.runs) {
    fs::path csv = fs::is_directory(r) ? fs::path(r) / "metrics.csv" : fs::path(r);
    require_exists(csv, "metrics");
    rows.push_back(reports::read_aggregate(csv));
  }
  const auto cmp = reports::compare(rows);
  if (!a.out.empty()) {
    require_fresh(a.out);
    fs::create_directories(a.out);
    io::write_text(fs::path(a.out) / "comparison.md", cmp.markdown);
    io::write_text(fs::path(a.out) / "comparison.csv", cmp.csv);
  }
  out << cmp.markdown;
  return kOk;
}

int code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kIo: return kMissingArtifact;
    case ErrorKind::kNumerical:
    case ErrorKind::kNonFinite: return kNumericalFailure;
    default: return kUsage;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evidential segmentation with uncertainty supervision", "evidseg"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate-data", "Write a synthetic dataset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--train", gen.train, "Training samples")->check(CLI::PositiveNumber);
  g->add_option("--val", gen.val, "Validation samples")->check(CLI::PositiveNumber);
  g->add_option("--test", gen.test, "Test samples")->check(CLI::PositiveNumber);
  g->add_option("--size", gen.size, "Image side in pixels")->check(CLI::Range(8, 4096));
  g->add_option("--classes", gen.classes, "Classes K including background")->check(CLI::Range(2, 4));
  g->add_option("--seed", gen.seed, "Seed");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Run directory")->required();
  t->add_option("--config", tr.config, "JSON config file");
  t->add_option("--profile", tr.profile, "acdc or refuge")->check(CLI::IsMember({"acdc", "refuge"}));
  t->add_option("--epochs", tr.epochs, "Epochs T");
  t->add_option("--seed", tr.seed, "Seed");
  t->add_option("--base-channels", tr.base_channels, "Backbone width");
  t->add_option("--beta0", tr.beta0, "L_gu weight at alpha = 1");
  t->add_option("--gamma0", tr.gamma0, "L_nu weight at alpha = 1");
  t->add_flag("--no-gu", tr.no_gu, "Disable gradient-based supervision");
  t->add_flag("--no-nu", tr.no_nu, "Disable noise-based supervision");
  t->add_flag("--no-hsd", tr.no_hsd, "Sample from all pixels instead of hard ones");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint or run directory")->required();
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--out", ev.out, "Report directory")->required();
  e->add_option("--split", ev.split, "Split to evaluate");
  e->add_option("--sweep", ev.sweep, "Comma-separated noise means");
  e->add_option("--seed", ev.seed, "Seed of the sweep noise");
  e->add_option("--name", ev.name, "Run label in metrics.csv");
  e->add_flag("--dump-maps", ev.dump_maps, "Write uncertainty and difference maps");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Compare evaluated runs");
  c->add_option("runs", cmp.runs, "Evaluation directories or metrics.csv files");
  c->add_option("--out", cmp.out, "Directory for comparison.md/.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (e->parsed()) return cmd_evaluate(ev, out);
    if (c->parsed()) return cmd_compare(cmp, out);
  } catch (const Failure& f) {
    err << "evidseg: " << f.message << "\n";
    return f.code;
  } catch (const Error& ex) {
    err << "evidseg: " << ex.what() << "\n";
    return code_for(ex.kind());
  } catch (const nlohmann::json::exception& ex) {
    err << "evidseg: " << ex.what() << "\n";
    return kUsage;
  } catch (const std::exception& ex) {
    err << "evidseg: " << ex.what() << "\n";
    return 1;
  }
  return kUsage;
}

}  // namespace evidseg::cli
