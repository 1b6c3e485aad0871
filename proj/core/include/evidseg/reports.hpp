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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "evidseg/datamodel.hpp"

namespace evidseg::trainer {
struct EpochLog;
}
namespace evidseg::evaluation {
struct Evaluation;
}

// CSV and markdown reports. Every CSV has a fixed header (see README).

namespace evidseg::reports {

namespace fs = std::filesystem;

inline constexpr const char* kEpochLogHeader = "epoch,L_CE,L_Dice,L_KL,L_gu,L_nu,L_total,val_DSC";
inline constexpr const char* kAggregateHeader =
    "run,dsc,hd95,ece,ueo,ucc_g,ucc_mu,ur_g,ur_mu,ur_g_ties,mean_abs_delta_dsc,"
    "mean_abs_delta_ece,flags";
inline constexpr const char* kSweepHeader = "mu,dsc,ece";
inline constexpr const char* kDeltaHeader = "metric,mu_hi,mu_lo,delta";
inline constexpr const char* kCompareHeader =
    "run,dsc,hd95,ueo,ece,ucc_g,ucc_g_sign,ucc_mu,ucc_mu_sign,ur_g,ur_mu,best,second,ties";

// Round-trippable decimal text of a double.
std::string fmt(double v);

std::string epoch_log_row(const trainer::EpochLog& log);

class EpochLogWriter {
 public:
  explicit EpochLogWriter(const fs::path& path);
  void append(const trainer::EpochLog& log);

 private:
  std::ofstream out_;
};

std::string per_image_header(int classes);
std::string per_image_csv(const evaluation::Evaluation& ev, const std::vector<std::string>& names,
                          int classes);
std::string aggregate_csv(const evaluation::Evaluation& ev, const std::string& run);
std::string sweep_csv(const evaluation::Evaluation& ev);
std::string deltas_csv(const evaluation::Evaluation& ev);

// Writes metrics.csv, metrics_per_image.csv, sweep.csv and deltas.csv.
void write_evaluation(const fs::path& dir, const evaluation::Evaluation& ev,
                      const std::vector<std::string>& names, int classes, const std::string& run);

struct RunRow {
  std::string run;
  double dsc = 0, hd95 = 0, ueo = 0, ece = 0, ucc_g = 0, ucc_mu = 0, ur_g = 0, ur_mu = 0;
};

// Reads the single data row of a metrics.csv.
RunRow read_aggregate(const fs::path& metrics_csv);

struct Comparison {
  std::string markdown;
  std::string csv;
  std::vector<std::string> ties;  // metric names whose best value is shared
};

// Side-by-side table; UCC values carry (✓)/(×) for the expected sign
// (negative for g, positive for mu), best values bold and second-best
// underlined. Needs at least two runs.
Comparison compare(const std::vector<RunRow>& runs);

}  // namespace evidseg::reports
