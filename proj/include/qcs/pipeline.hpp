#pragma once

// Command stages behind the CLI. Each stage reads its inputs from and
// writes its outputs under one output directory:
//
//   plan.json, pairings.csv                 plan
//   timestamps/manifest.json, *.qts [*.csv] simulate
//   offsets/<user>.csv, fits/<user>.csv,
//   histograms/<user>_{su,sus}_batch0.csv,
//   analysis.json                           analyze
//   report/summary.json, report/tdev_<user>.csv,
//   report/pairwise_<a>-<b>.csv             report

#include "qcs/scenario.hpp"
#include "qcs/stability.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>

namespace qcs {

struct StageOptions
{
    std::filesystem::path out_dir = "out";
    std::ostream* log = nullptr; // human-readable progress, optional
};

NetworkPlan run_plan(const Scenario& s, const StageOptions& opt);

/// Uses <out>/plan.json when present, otherwise plans first.
void run_simulate(const Scenario& s, const StageOptions& opt);

std::map<std::string, OffsetSeries> run_analyze(const Scenario& s, const StageOptions& opt);

struct UserReport
{
    SummaryStats stats;
    std::size_t total_batches = 0;
    TdevCurve tdev;
    std::optional<double> true_offset_ps;
    int csv_mismatches = 0;
};

struct Report
{
    std::map<std::string, UserReport> users;
    std::map<std::string, SummaryStats> pairwise;
    std::map<std::string, double> pairwise_truth;
};

/// Reads <out>/offsets/*.csv. The scenario, when given, supplies the batch
/// length and TDEV grid; ground truth comes from <out>/plan.json if present.
Report run_report(const Scenario* s, const StageOptions& opt);

Report run_all(const Scenario& s, const StageOptions& opt);

} // namespace qcs
