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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evidseg/cli.hpp"
#include "evidseg/edl.hpp"
#include "evidseg/evaluation.hpp"
#include "evidseg/imageops.hpp"
#include "evidseg/io.hpp"
#include "evidseg/reports.hpp"
#include "evidseg/synthdata.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace evidseg;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "evidseg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class ZeroModel : public supervision::EvidenceModel {
 public:
  explicit ZeroModel(int K) : K_(K) {}
  EvidenceMap infer(const ImageSlice& img) const override {
    return EvidenceMap(img.shape(), K_, std::vector<double>(img.pixels() * K_, 0.0));
  }
  int classes() const override { return K_; }

 private:
  int K_;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

// Small dataset plus one trained run shared by the CLI tests.
struct Fixture {
  test::TempDir tmp;
  fs::path data = tmp / "data";
  fs::path run = tmp / "run";
  Fixture() {
    REQUIRE(invoke({"generate-data", "--out", data.string(), "--train", "4", "--val", "2", "--test",
                 "3", "--size", "32", "--seed", "3"})
                .code == 0);
    REQUIRE(invoke({"train", "--data", data.string(), "--out", run.string(), "--epochs", "2",
                 "--base-channels", "2", "--seed", "4"})
                .code == 0);
  }
};

}  // namespace

TEST_CASE("zero-evidence model: u = 1, uniform confidence, constant argmax") {
  synthdata::SceneSpec spec;
  spec.height = spec.width = 32;
  std::vector<Sample> samples;
  for (int i = 0; i < 3; ++i) samples.push_back(synthdata::generate_scene(spec, i).sample);
  evaluation::EvalOptions opt;
  opt.keep_maps = true;
  const auto ev = evaluation::evaluate(ZeroModel(3), samples, opt);
  for (std::size_t n = 0; n < samples.size(); ++n) {
    for (double u : edl::uncertainty(ev.images[n].evidence).values) CHECK(u == 1.0);
    const auto counts = samples[n].label.class_counts();
    const double acc = counts[0] / double(samples[n].label.pixels());
    CHECK(ev.images[n].report.ece == doctest::Approx(std::abs(acc - 1.0 / 3.0)).epsilon(1e-12));
    CHECK(ev.images[n].report.dsc == 0.0);  // everything predicted as background
  }
}

TEST_CASE("a single sweep level yields no deltas and a flag") {
  synthdata::SceneSpec spec;
  spec.height = spec.width = 32;
  const std::vector<Sample> samples{synthdata::generate_scene(spec, 1).sample};
  evaluation::EvalOptions opt;
  opt.sweep = {0.3};
  const auto ev = evaluation::evaluate(ZeroModel(3), samples, opt);
  CHECK(ev.dsc_deltas.empty());
  CHECK(ev.ece_deltas.empty());
  const auto& f = ev.aggregate.flags;
  CHECK(std::find(f.begin(), f.end(), "robustness_deltas_need_two_levels") != f.end());
}

TEST_CASE("CLI usage and safety exit codes") {
  test::TempDir tmp;
  CHECK(invoke({"generate-data"}).code == cli::kUsage);
  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"bogus"}).code == cli::kUsage);
  fs::create_directories(tmp / "full");
  io::write_text(tmp / "full" / "x.txt", "x");
  CHECK(invoke({"generate-data", "--out", (tmp / "full").string()}).code == cli::kUnsafeOverwrite);
  CHECK(invoke({"evaluate", "--checkpoint", (tmp / "nope").string(), "--data", tmp.path().string(),
             "--out", (tmp / "e").string()})
            .code == cli::kMissingArtifact);
  CHECK(invoke({"train", "--data", (tmp / "nodata").string(), "--out", (tmp / "r").string()}).code ==
        cli::kMissingArtifact);
  CHECK(invoke({"compare", (tmp / "a").string()}).code == cli::kUsage);
  CHECK(invoke({"evaluate", "--checkpoint", "x", "--data", "y", "--out", "z", "--sweep", "0.1,abc"})
            .code != 0);
}

TEST_CASE("generate-data writes the requested dataset") {
  test::TempDir tmp;
  const auto r = invoke({"generate-data", "--out", (tmp / "d").string(), "--train", "5", "--val", "2",
                      "--test", "3", "--size", "64", "--classes", "4", "--seed", "7"});
  CHECK(r.code == 0);
  const auto test = io::read_split(tmp / "d", "test");
  CHECK(test.size() == 3);
  CHECK(test[0].label.classes() == 4);
  CHECK(test[0].image.shape() == Shape{64, 64});
}

TEST_CASE("train/evaluate/compare end to end") {
  Fixture fx;
  CHECK(fs::exists(fx.run / "checkpoint" / "manifest.json"));
  const std::string log = io::read_text(fx.run / "epoch_log.csv");
  CHECK(log.rfind(std::string(reports::kEpochLogHeader) + "\n", 0) == 0);
  CHECK(split(log, '\n').size() == 3);

  SUBCASE("--no-nu with --gamma0 warns and forces gamma to 0") {
    const auto r = invoke({"train", "--data", fx.data.string(), "--out", (fx.tmp / "nn").string(),
                        "--epochs", "1", "--base-channels", "2", "--no-nu", "--gamma0", "3"});
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    const auto cfg = io::train_config_from_json(io::read_json(fx.tmp / "nn" / "config.json"));
    CHECK(cfg.supervision.gamma == 0.0);
    CHECK_FALSE(cfg.use_nu);
  }

  SUBCASE("pure EDL baseline and comparison table") {
    REQUIRE(invoke({"train", "--data", fx.data.string(), "--out", (fx.tmp / "edl").string(),
                 "--epochs", "2", "--base-channels", "2", "--no-gu", "--no-nu", "--no-hsd"})
                .code == 0);
    for (const char* r : {"run", "edl"})
      REQUIRE(invoke({"evaluate", "--checkpoint", (fx.tmp / r).string(), "--data", fx.data.string(),
                   "--out", (fx.tmp / (std::string(r) + "_eval")).string(), "--sweep",
                   "0.0,0.1,0.3,0.5,0.7,0.9"})
                  .code == 0);
    const auto deltas = io::read_text(fx.tmp / "run_eval" / "deltas.csv");
    CHECK(split(deltas, '\n').size() == 1 + 2 * 15);
    CHECK(split(io::read_text(fx.tmp / "run_eval" / "sweep.csv"), '\n').size() == 7);
    CHECK(io::read_text(fx.tmp / "edl_eval" / "metrics.csv").find("no-gu-no-nu-no-hsd") !=
          std::string::npos);

    const auto c = invoke({"compare", (fx.tmp / "run_eval").string(), (fx.tmp / "edl_eval").string(),
                        "--out", (fx.tmp / "cmp").string()});
    CHECK(c.code == 0);
    const auto md = io::read_text(fx.tmp / "cmp" / "comparison.md");
    CHECK(md.find("UCC g") != std::string::npos);
    CHECK((md.find("✓") != std::string::npos || md.find("×") != std::string::npos));
    CHECK(split(io::read_text(fx.tmp / "cmp" / "comparison.csv"), '\n').size() == 3);

    const auto same = invoke({"compare", (fx.tmp / "run_eval").string(), (fx.tmp / "run_eval").string()});
    CHECK(same.code == 0);
    CHECK(same.out.find("Tied best values") != std::string::npos);
  }

  SUBCASE("re-evaluation is byte-identical") {
    for (const char* o : {"e1", "e2"})
      REQUIRE(invoke({"evaluate", "--checkpoint", fx.run.string(), "--data", fx.data.string(),
                   "--out", (fx.tmp / o).string()})
                  .code == 0);
    for (const char* f : {"metrics.csv", "metrics_per_image.csv", "sweep.csv", "deltas.csv"})
      CHECK(io::read_text(fx.tmp / "e1" / f) == io::read_text(fx.tmp / "e2" / f));
    CHECK(invoke({"evaluate", "--checkpoint", fx.run.string(), "--data", fx.data.string(), "--out",
               (fx.tmp / "e1").string()})
              .code == cli::kUnsafeOverwrite);
  }

  SUBCASE("dumped maps replay to the reported metrics") {
    REQUIRE(invoke({"evaluate", "--checkpoint", fx.run.string(), "--data", fx.data.string(), "--out",
                 (fx.tmp / "ev").string(), "--dump-maps"})
                .code == 0);
    const auto rows = split(io::read_text(fx.tmp / "ev" / "metrics_per_image.csv"), '\n');
    const auto header = split(rows[0], ',');
    const auto names = io::list_samples(fx.data / "test");
    const auto samples = io::read_split(fx.data, "test");
    REQUIRE(rows.size() == samples.size() + 1);
    for (std::size_t n = 0; n < samples.size(); ++n) {
      const auto cols = split(rows[n + 1], ',');
      auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        return std::stod(cols[it - header.begin()]);
      };
      const fs::path base = fx.tmp / "ev" / "maps" / names[n];
      CHECK(fs::exists(base.string() + ".uncertainty.pgm"));
      CHECK(fs::exists(base.string() + ".patch_noise_diff.pgm"));
      CHECK(fs::exists(base.string() + ".global_noise_diff.pgm"));
      CHECK(fs::exists(base.string() + ".gradient_overlay_diff.pgm"));
      const EvidenceMap e = io::read_evidence(base.string() + ".evidence.f64");
      const Sample& s = samples[n];
      const LabelMap pred(s.label.shape(), 3, edl::predict(e));
      const auto u = edl::uncertainty(e);
      CHECK(std::abs(col("ece") - oracle::ece(edl::expected_probs(e), 3, s.label, 10)) <= 1e-12);
      CHECK(std::abs(col("ueo") - oracle::ueo(u.values, pred, s.label)) <= 1e-12);
      const double h = oracle::hd95(pred, s.label);
      if (!std::isnan(h)) CHECK(std::abs(col("hd95") - h) <= 1e-12);
      const auto geo = imageops::make_geometry(s.image, s.label, 1.0, 1.0);
      std::vector<double> gb, ub;
      for (std::size_t i : geo.boundary) {
        gb.push_back(geo.gradient[i]);
        ub.push_back(u[i]);
      }
      const double ucc = oracle::spearman(gb, ub);
      if (std::isfinite(ucc)) CHECK(std::abs(col("ucc_g") - ucc) <= 1e-12);
      CHECK(std::abs(col("ur_g") - oracle::pair_ratio(ub, gb)) <= 1e-12);
      // UCC_mu / UR_mu from the per-level dumps.
      std::vector<double> mus, us;
      double good = 0, all = 0;
      std::vector<ScalarMap> levels;
      for (std::size_t l = 0; l < metrics::kDefaultSweep.size(); ++l)
        levels.push_back(edl::uncertainty(
            io::read_evidence(base.string() + ".level" + std::to_string(l) + ".evidence.f64")));
      for (std::size_t l = 0; l < levels.size(); ++l)
        for (std::size_t i = 0; i < s.label.pixels(); ++i)
          if (geo.distance[i] <= 4.0) {
            mus.push_back(metrics::kDefaultSweep[l]);
            us.push_back(levels[l][i]);
            for (std::size_t m = 0; m < levels.size(); ++m)
              if (m != l) {
                ++all;
                good += (metrics::kDefaultSweep[l] - metrics::kDefaultSweep[m]) *
                            (levels[l][i] - levels[m][i]) >= 0.0;
              }
          }
      const double uccm = oracle::spearman(mus, us);
      if (std::isfinite(uccm)) CHECK(std::abs(col("ucc_mu") - uccm) <= 1e-12);
      CHECK(col("ur_mu") == doctest::Approx(good / all).epsilon(1e-14));
    }
  }
}
