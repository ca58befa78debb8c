#pragma once

// G2(tau) coincidence histograms between two timestamp streams and the
// Gaussian-plus-floor peak fit used to read off the relative delay.

#include "qcs/photon_sim.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qcs {

/// counts[k] holds pairs with t_b - t_a in [tau_min + k*bin_width, tau_min + (k+1)*bin_width).
struct CoincidenceHistogram
{
    Picoseconds bin_width_ps = 16;
    Picoseconds tau_min_ps = 0;
    Picoseconds tau_max_ps = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_a = 0;
    std::uint64_t n_b = 0;
    double span_s = 0.0;
    /// Set when either input had no events; counts are then all zero.
    bool empty_input = false;

    /// Midpoint of the integer delays a bin can hold.
    double bin_center(std::size_t k) const
    {
        return static_cast<double>(tau_min_ps) + static_cast<double>(k) * static_cast<double>(bin_width_ps) +
               0.5 * static_cast<double>(bin_width_ps - 1);
    }
    std::uint64_t total() const;
};

/// Exact two-pointer sweep, O(N_a + N_b + coincidences). Both inputs must be
/// sorted. The window is [search_center - half_window, search_center + half_window)
/// and 2*half_window must be a multiple of bin_width.
CoincidenceHistogram build_histogram(std::span<const Picoseconds> a, std::span<const Picoseconds> b,
                                     Picoseconds search_center, Picoseconds half_window, Picoseconds bin_width,
                                     double span_s = 0.0);

CoincidenceHistogram build_histogram(const TimestampStream& a, const TimestampStream& b, Picoseconds search_center,
                                     Picoseconds half_window, Picoseconds bin_width, double span_s = 0.0);

/// Coarse delay scan over [range_min, range_max) with wide bins. Returns the
/// center of the fullest coarse bin (lowest tau on ties). Throws NoPeak when
/// the scan finds no coincidences at all.
Picoseconds coarse_search(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds range_min,
                          Picoseconds range_max, Picoseconds coarse_bin);

struct PeakFit
{
    double center_ps = 0.0;
    double fwhm_ps = 0.0;
    double amplitude = 0.0; // counts per bin above the floor at the peak
    double baseline = 0.0;  // counts per bin
    double car = 0.0;
    double fit_rms = 0.0;
    int iterations = 0;
    /// False when the iteration cap was hit; parameters are then best-so-far.
    bool converged = false;

    double sigma_ps() const { return fwhm_ps / kFwhmPerSigma; }
};

struct FitOptions
{
    int max_iterations = 200;
    /// Convergence when center and width steps fall below this many bin widths.
    double tolerance_bins = 1e-3;
};

/// Floor used in the CAR denominator.
inline constexpr double kCarEpsilon = 1e-9;

/// Levenberg-Marquardt fit of baseline + amplitude * exp(-(tau - center)^2 / (2 sigma^2))
/// at bin centers. Initial guess: argmax bin (lowest tau on ties), median
/// floor, half-maximum width. Throws NoPeak unless the fullest bin exceeds
/// median + 5 sqrt(max(median, 1)), or if the fit collapses (non-positive amplitude).
PeakFit fit_peak(const CoincidenceHistogram& h, const FitOptions& opt = {});

/// amplitude / max(baseline, kCarEpsilon); +inf when baseline <= 0.
double car(const PeakFit& fit);

} // namespace qcs
