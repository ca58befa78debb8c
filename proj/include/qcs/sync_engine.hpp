#pragma once

// Round-trip clock difference per batch:
//   tau_su  = t2 - t1        (server signal -> user detection, user clock)
//   tau_sus = t3 - t1        (server signal -> round-trip detection, server clock)
//   delta_t = tau_su - tau_sus / 2
// Stream order in the histograms is always (server signal, other), so a
// positive tau means the second detector fires later.

#include "qcs/coincidence.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qcs {

enum class BatchQuality
{
    ok,
    no_signal_events,
    no_peak_su,
    no_peak_sus,
    not_converged,
};

std::string_view to_string(BatchQuality q);
BatchQuality quality_from_string(std::string_view s);

struct BatchOffsets
{
    int batch_index = 0;
    double tau_su_ps = 0.0;
    double tau_sus_ps = 0.0;
    double delta_t_ps = 0.0;
    BatchQuality quality = BatchQuality::ok;
    std::optional<PeakFit> fit_su;
    std::optional<PeakFit> fit_sus;

    bool valid() const { return quality == BatchQuality::ok; }
};

struct OffsetSeries
{
    std::string user;
    double batch_duration_s = 0.0;
    /// One entry per batch slot, contiguous from batch 0; failed batches stay
    /// in place with a non-ok quality.
    std::vector<BatchOffsets> offsets;

    std::size_t valid_count() const;
};

struct AnalysisParams
{
    Picoseconds bin_width_ps = 16;
    Picoseconds half_window_ps = 20000;
    Picoseconds coarse_bin_ps = 1000;
    Picoseconds coarse_min_ps = -500'000'000;
    Picoseconds coarse_max_ps = 500'000'000;
    FitOptions fit;

    bool operator==(const AnalysisParams& o) const
    {
        return bin_width_ps == o.bin_width_ps && half_window_ps == o.half_window_ps &&
               coarse_bin_ps == o.coarse_bin_ps && coarse_min_ps == o.coarse_min_ps &&
               coarse_max_ps == o.coarse_max_ps && fit.max_iterations == o.fit.max_iterations &&
               fit.tolerance_bins == o.fit.tolerance_bins;
    }
};

/// delta_t from the two fitted delays; the only place the identity is evaluated.
double clock_difference(double tau_su_ps, double tau_sus_ps);

/// Per-batch histograms and fits for one fitted pair of delays.
struct BatchDetail
{
    CoincidenceHistogram hist_su;
    CoincidenceHistogram hist_sus;
};

/// Splits the server stream into batches [k*B, (k+1)*B) for k < duration/B
/// and evaluates every batch. When duration_s is not given it is taken from
/// the last server event. The fine window follows the previous good fit and
/// falls back to a coarse scan after a failure. Throws NoPeak if no batch
/// yields a valid clock difference.
OffsetSeries estimate_batch(const TimestampStream& server, const TimestampStream& user,
                            const TimestampStream& roundtrip, double batch_duration_s,
                            const AnalysisParams& params = {}, std::optional<double> duration_s = std::nullopt,
                            std::vector<BatchDetail>* details = nullptr, std::string user_name = {});

/// delta_t(a) - delta_t(b) per batch. Grids with equal batch length are
/// matched by index; otherwise each batch of a takes the nearest batch of b
/// within half a batch. Throws Error when no batches overlap.
OffsetSeries pairwise_offset(const OffsetSeries& a, const OffsetSeries& b);

/// CSV: batch_start_s,tau_su_ps,tau_sus_ps,delta_t_ps,quality
std::string offsets_csv(const OffsetSeries& s);
/// Parses offsets CSV. delta_t is recomputed from the tau columns; a file
/// whose delta_t column disagrees by more than 1e-3 ps is reported through
/// mismatches.
OffsetSeries parse_offsets_csv(std::string_view text, std::string user, double batch_duration_s = 0.0,
                               int* mismatches = nullptr);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

} // namespace qcs
