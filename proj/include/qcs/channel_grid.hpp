#pragma once

// ITU DWDM grid arithmetic and dual-pump SFWM channel pairing.
//
// All frequencies are integer GHz so that energy conservation checks are
// exact. A channel's frequency is anchor + index * spacing.

#include <cstdint>
#include <string>
#include <vector>

namespace qcs {

using FrequencyGhz = std::int64_t;

struct GridSpec
{
    FrequencyGhz anchor_ghz = 190000; // index 0
    FrequencyGhz spacing_ghz = 100;
    int min_index = 17;
    int max_index = 61;

    bool contains(int index) const { return index >= min_index && index <= max_index; }
    bool operator==(const GridSpec&) const = default;
};

struct GridChannel
{
    int index = 0;
    FrequencyGhz frequency_ghz = 0;

    double frequency_thz() const { return static_cast<double>(frequency_ghz) / 1000.0; }
    /// Vacuum wavelength; display only.
    double wavelength_nm() const;
    /// "C33" style label.
    std::string label() const;

    bool operator==(const GridChannel&) const = default;
};

struct PumpPair
{
    GridChannel p;
    GridChannel q;

    bool operator==(const PumpPair&) const = default;
};

/// One signal channel with its three SFWM partners:
///   p + p = s + idler_deg_p
///   p + q = s + idler_nondeg
///   q + q = s + idler_deg_q
struct PairingTriple
{
    GridChannel signal;
    GridChannel idler_deg_p;
    GridChannel idler_nondeg;
    GridChannel idler_deg_q;

    bool operator==(const PairingTriple&) const = default;
};

/// Throws OutOfGrid if index is outside the grid.
FrequencyGhz channel_frequency_ghz(int index, const GridSpec& grid);
double channel_frequency_thz(int index, const GridSpec& grid);

GridChannel make_channel(int index, const GridSpec& grid);

/// Validates p != q and both inside the grid.
PumpPair make_pumps(int p_index, int q_index, const GridSpec& grid);

/// Throws PumpCollision when the signal or any partner is a pump channel,
/// OutOfGrid when a partner leaves the grid.
PairingTriple pair_partners(const GridChannel& signal, const PumpPair& pumps, const GridSpec& grid);

/// Signals strictly below the pump midpoint (in frequency), sorted by
/// index; signals whose triple collides with a pump or leaves the grid are
/// skipped.
std::vector<PairingTriple> enumerate_pairings(const PumpPair& pumps, const GridSpec& grid);

/// CSV export: signal_index,idler_deg_p,idler_nondeg,idler_deg_q,sum_pp_ghz,sum_pq_ghz,sum_qq_ghz
std::string pairings_csv(const std::vector<PairingTriple>& triples);

} // namespace qcs
