#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tabdistill/eval/metrics.hpp"

namespace tabdistill::bench {

// Competitor label used in rank and win/loss tables.
std::string competitor_of(const eval::RunRecord& r);

// Linear-interpolation quantile (position q·(n−1) of the sorted sample).
double quantile(std::vector<double> values, double q);

// Writes into `out_dir`, from the latest record per key:
//   runs.csv            one row per record, no timing
//   timing.csv          wall clock per record and stage
//   regret_summary.csv  median and quartiles of regret per
//                       (encoder, method, space, variant, representation, ipc)
//   ranks.csv           mean rank and pooled median regret per competitor
//   winloss.csv         pairwise win ratios and tie counts
//   correlation_<dataset>_{original,random,best}.csv and
//   correlation_summary.csv, when sets were saved under out_dir/sets
// Ranking groups are (dataset, classifier, ipc); a competitor's value in a
// group is its median regret over seeds. Only competitors present in every
// group are ranked. An empty store writes nothing and warns. Returns the
// files written.
std::vector<std::filesystem::path> emit_reports(std::span<const eval::RunRecord> records,
                                                const std::filesystem::path& out_dir);

// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace tabdistill::bench
