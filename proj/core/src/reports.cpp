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

#include "evidseg/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "evidseg/evaluation.hpp"
#include "evidseg/io.hpp"
#include "evidseg/trainer.hpp"

namespace evidseg::reports {
namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string epoch_log_row(const trainer::EpochLog& l) {
  return std::to_string(l.epoch) + "," + fmt(l.ce) + "," + fmt(l.dice) + "," + fmt(l.kl) + "," +
         fmt(l.gu) + "," + fmt(l.nu) + "," + fmt(l.total) + "," + fmt(l.val_dsc);
}

EpochLogWriter::EpochLogWriter(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::trunc);
  if (!out_) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out_ << kEpochLogHeader << "\n";
  out_.flush();
}

void EpochLogWriter::append(const trainer::EpochLog& log) {
  out_ << epoch_log_row(log) << "\n";
  out_.flush();
}

std::string per_image_header(int classes) {
  std::string h = "image,dsc,hd95,ece,ueo,ucc_g,ucc_mu,ur_g,ur_mu,ur_g_ties";
  for (int k = 1; k < classes; ++k) h += ",dsc_class_" + std::to_string(k);
  return h + ",flags";
}

std::string per_image_csv(const evaluation::Evaluation& ev, const std::vector<std::string>& names,
                          int classes) {
  std::ostringstream os;
  os << per_image_header(classes) << "\n";
  for (std::size_t i = 0; i < ev.images.size(); ++i) {
    const auto& r = ev.images[i].report;
    os << (i < names.size() ? names[i] : std::to_string(i)) << "," << fmt(r.dsc) << ","
       << fmt(r.hd95) << "," << fmt(r.ece) << "," << fmt(r.ueo) << "," << fmt(r.ucc_g) << ","
       << fmt(r.ucc_mu) << "," << fmt(r.ur_g) << "," << fmt(r.ur_mu) << "," << fmt(r.ur_g_ties);
    for (int k = 1; k < classes; ++k)
      os << "," << (static_cast<std::size_t>(k - 1) < r.class_dsc.size() ? fmt(r.class_dsc[k - 1]) : "");
    os << "," << join(r.flags, ';') << "\n";
  }
  return os.str();
}

std::string aggregate_csv(const evaluation::Evaluation& ev, const std::string& run) {
  const auto& r = ev.aggregate;
  std::ostringstream os;
  os << kAggregateHeader << "\n"
     << run << "," << fmt(r.dsc) << "," << fmt(r.hd95) << "," << fmt(r.ece) << "," << fmt(r.ueo)
     << "," << fmt(r.ucc_g) << "," << fmt(r.ucc_mu) << "," << fmt(r.ur_g) << "," << fmt(r.ur_mu)
     << "," << fmt(r.ur_g_ties) << "," << fmt(ev.mean_abs_dsc_delta) << ","
     << fmt(ev.mean_abs_ece_delta) << "," << join(r.flags, ';') << "\n";
  return os.str();
}

std::string sweep_csv(const evaluation::Evaluation& ev) {
  std::ostringstream os;
  os << kSweepHeader << "\n";
  for (std::size_t l = 0; l < ev.sweep.size(); ++l)
    os << fmt(ev.sweep[l]) << "," << fmt(ev.level_dsc[l]) << "," << fmt(ev.level_ece[l]) << "\n";
  return os.str();
}

std::string deltas_csv(const evaluation::Evaluation& ev) {
  std::ostringstream os;
  os << kDeltaHeader << "\n";
  for (const auto& d : ev.dsc_deltas)
    os << "dsc," << fmt(d.mu_hi) << "," << fmt(d.mu_lo) << "," << fmt(d.value) << "\n";
  for (const auto& d : ev.ece_deltas)
    os << "ece," << fmt(d.mu_hi) << "," << fmt(d.mu_lo) << "," << fmt(d.value) << "\n";
  return os.str();
}

void write_evaluation(const fs::path& dir, const evaluation::Evaluation& ev,
                      const std::vector<std::string>& names, int classes, const std::string& run) {
  fs::create_directories(dir);
  io::write_text(dir / "metrics.csv", aggregate_csv(ev, run));
  io::write_text(dir / "metrics_per_image.csv", per_image_csv(ev, names, classes));
  io::write_text(dir / "sweep.csv", sweep_csv(ev));
  io::write_text(dir / "deltas.csv", deltas_csv(ev));
}

RunRow read_aggregate(const fs::path& metrics_csv) {
  std::istringstream is(io::read_text(metrics_csv));
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  if (header != kAggregateHeader)
    throw Error(ErrorKind::kIo, metrics_csv.string() + " has an unexpected header");
  const auto f = split(row, ',');
  if (f.size() < 9) throw Error(ErrorKind::kIo, metrics_csv.string() + " has no data row");
  RunRow r;
  r.run = f[0];
  r.dsc = std::stod(f[1]);
  r.hd95 = std::stod(f[2]);
  r.ece = std::stod(f[3]);
  r.ueo = std::stod(f[4]);
  r.ucc_g = std::stod(f[5]);
  r.ucc_mu = std::stod(f[6]);
  r.ur_g = std::stod(f[7]);
  r.ur_mu = std::stod(f[8]);
  return r;
}

Comparison compare(const std::vector<RunRow>& runs) {
  if (runs.size() < 2) throw Error(ErrorKind::kInvalidArgument, "comparison needs >= 2 runs");
  struct Column {
    const char* name;
    double RunRow::*field;
    bool higher_better;
  };
  const Column ranked[] = {{"dsc", &RunRow::dsc, true},   {"hd95", &RunRow::hd95, false},
                           {"ueo", &RunRow::ueo, true},   {"ece", &RunRow::ece, false},
                           {"ur_g", &RunRow::ur_g, true}, {"ur_mu", &RunRow::ur_mu, true}};
  const std::size_t n = runs.size();
  // mark[c][i]: 2 best, 1 second best, 0 otherwise.
  std::vector<std::vector<int>> mark(std::size(ranked), std::vector<int>(n, 0));
  Comparison out;
  for (std::size_t c = 0; c < std::size(ranked); ++c) {
    std::vector<double> vals;
    for (const auto& r : runs) vals.push_back(r.*(ranked[c].field));
    std::vector<double> distinct = vals;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (ranked[c].higher_better) std::reverse(distinct.begin(), distinct.end());
    const std::size_t best_count = std::count(vals.begin(), vals.end(), distinct[0]);
    if (best_count > 1) out.ties.push_back(ranked[c].name);
    for (std::size_t i = 0; i < n; ++i) {
      if (vals[i] == distinct[0]) mark[c][i] = 2;
      else if (best_count == 1 && distinct.size() > 1 && vals[i] == distinct[1]) mark[c][i] = 1;
    }
  }
  auto sign = [](double v, bool want_negative) {
    return (want_negative ? v < 0.0 : v > 0.0) ? "✓" : "×";
  };
  auto cell = [&](std::size_t c, std::size_t i, const std::string& text) {
    if (mark[c][i] == 2) return "**" + text + "**";
    if (mark[c][i] == 1) return "<u>" + text + "</u>";
    return text;
  };

  std::ostringstream md, csv;
  md << "| Run | DSC (%) ↑ | HD95 ↓ | UEO ↑ | ECE ↓ | UCC g(−) | UCC μ(+) | UR g ↑ | UR μ ↑ |\n"
     << "|---|---|---|---|---|---|---|---|---|\n";
  csv << kCompareHeader << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    const RunRow& r = runs[i];
    md << "| " << r.run << " | " << cell(0, i, fixed(100.0 * r.dsc, 2)) << " | "
       << cell(1, i, fixed(r.hd95, 2)) << " | " << cell(2, i, fixed(r.ueo, 3)) << " | "
       << cell(3, i, fixed(r.ece, 3)) << " | " << fixed(r.ucc_g, 3) << "(" << sign(r.ucc_g, true)
       << ") | " << fixed(r.ucc_mu, 3) << "(" << sign(r.ucc_mu, false) << ") | "
       << cell(4, i, fixed(r.ur_g, 3)) << " | " << cell(5, i, fixed(r.ur_mu, 3)) << " |\n";
    std::vector<std::string> best, second;
    for (std::size_t c = 0; c < std::size(ranked); ++c) {
      if (mark[c][i] == 2) best.push_back(ranked[c].name);
      if (mark[c][i] == 1) second.push_back(ranked[c].name);
    }
    csv << r.run << "," << fmt(r.dsc) << "," << fmt(r.hd95) << "," << fmt(r.ueo) << ","
        << fmt(r.ece) << "," << fmt(r.ucc_g) << "," << sign(r.ucc_g, true) << ","
        << fmt(r.ucc_mu) << "," << sign(r.ucc_mu, false) << "," << fmt(r.ur_g) << ","
        << fmt(r.ur_mu) << "," << join(best, ';') << "," << join(second, ';') << ","
        << join(out.ties, ';') << "\n";
  }
  md << "\n(✓) and (×) mark UCC values with the expected and the opposite sign. "
        "**Bold** is the best value in a column, <u>underlined</u> the second best.\n";
  if (!out.ties.empty()) md << "Tied best values: " << join(out.ties, ',') << ".\n";
  out.markdown = md.str();
  out.csv = csv.str();
  return out;
}

}  // namespace evidseg::reports
