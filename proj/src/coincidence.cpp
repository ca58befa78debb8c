#include "qcs/coincidence.hpp"

#include "qcs/error.hpp"

#include <algorithm>
#include <numeric>

namespace qcs {

namespace {

void accumulate_pairs(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds tau_min,
                      Picoseconds bin_width, std::vector<std::uint64_t>& counts)
{
    const auto nbins = static_cast<Picoseconds>(counts.size());
    const Picoseconds tau_max = tau_min + nbins * bin_width;
    std::size_t lo = 0;
    for (Picoseconds ta : a)
    {
        const Picoseconds start = ta + tau_min;
        const Picoseconds stop = ta + tau_max;
        while (lo < b.size() && b[lo] < start)
        {
            ++lo;
        }
        for (std::size_t j = lo; j < b.size() && b[j] < stop; ++j)
        {
            ++counts[static_cast<std::size_t>((b[j] - start) / bin_width)];
        }
    }
}

} // namespace

std::uint64_t CoincidenceHistogram::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CoincidenceHistogram build_histogram(std::span<const Picoseconds> a, std::span<const Picoseconds> b,
                                     Picoseconds search_center, Picoseconds half_window, Picoseconds bin_width,
                                     double span_s)
{
    if (bin_width <= 0 || half_window <= 0 || (2 * half_window) % bin_width != 0)
    {
        throw ConfigError("histogram window 2*" + std::to_string(half_window) + " ps is not a positive multiple of " +
                          std::to_string(bin_width) + " ps bins");
    }
    CoincidenceHistogram h;
    h.bin_width_ps = bin_width;
    h.tau_min_ps = search_center - half_window;
    h.tau_max_ps = search_center + half_window;
    h.counts.assign(static_cast<std::size_t>(2 * half_window / bin_width), 0);
    h.n_a = a.size();
    h.n_b = b.size();
    h.span_s = span_s;
    h.empty_input = a.empty() || b.empty();
    if (!h.empty_input)
    {
        accumulate_pairs(a, b, h.tau_min_ps, bin_width, h.counts);
    }
    return h;
}

CoincidenceHistogram build_histogram(const TimestampStream& a, const TimestampStream& b, Picoseconds search_center,
                                     Picoseconds half_window, Picoseconds bin_width, double span_s)
{
    return build_histogram(std::span<const Picoseconds>(a.events), std::span<const Picoseconds>(b.events),
                           search_center, half_window, bin_width, span_s);
}

Picoseconds coarse_search(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds range_min,
                          Picoseconds range_max, Picoseconds coarse_bin)
{
    if (coarse_bin <= 0 || range_max <= range_min)
    {
        throw ConfigError("coarse search needs a positive bin and a non-empty range");
    }
    const auto nbins = static_cast<std::size_t>((range_max - range_min + coarse_bin - 1) / coarse_bin);
    std::vector<std::uint64_t> counts(nbins, 0);
    accumulate_pairs(a, b, range_min, coarse_bin, counts);
    const auto it = std::max_element(counts.begin(), counts.end()); // first maximum = lowest tau
    if (it == counts.end() || *it == 0)
    {
        throw NoPeak("coarse scan found no coincidences");
    }
    const auto k = static_cast<Picoseconds>(it - counts.begin());
    return range_min + k * coarse_bin + coarse_bin / 2;
}

double car(const PeakFit& fit)
{
    if (fit.baseline <= 0.0)
    {
        return std::numeric_limits<double>::infinity();
    }
    return fit.amplitude / std::max(fit.baseline, kCarEpsilon);
}

} // namespace qcs
