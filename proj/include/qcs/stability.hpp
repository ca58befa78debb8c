#pragma once

#include "qcs/sync_engine.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qcs {

struct TdevPoint
{
    int m = 1;
    double tau_s = 0.0;
    double tdev_ps = 0.0;
    std::size_t n_samples = 0; // windows averaged
};

struct TdevCurve
{
    double tau0_s = 0.0;
    std::vector<TdevPoint> points;
    std::vector<std::string> warnings;
};

/// Overlapping TDEV at averaging factor m over samples x with per-sample
/// validity. Windows touching an invalid sample are skipped. Returns false
/// (and leaves out untouched) when no complete window exists.
bool tdev_point(std::span<const double> x, std::span<const std::uint8_t> valid, int m, TdevPoint& out);

/// One point per m, sorted and de-duplicated; m values without a complete
/// window are dropped with a warning.
TdevCurve tdev(const OffsetSeries& series, std::vector<int> m_values);

struct SummaryStats
{
    double mean_ps = 0.0;
    double std_dev_ps = 0.0; // population
    double min_ps = 0.0;
    double max_ps = 0.0;
    std::size_t count = 0;
};

/// Over valid batches; throws Error with fewer than two.
SummaryStats summary_stats(const OffsetSeries& series);

/// 1, 2, 4, ... up to max_m, merged with extras.
std::vector<int> doubling_grid(int max_m, const std::vector<int>& extras = {});

/// CSV: tau_s,tdev_ps,n_samples
std::string tdev_csv(const TdevCurve& c);

} // namespace qcs
