#include "qcs/channel_grid.hpp"

#include "qcs/error.hpp"

#include <algorithm>
#include <sstream>

namespace qcs {

namespace {

constexpr double kSpeedOfLightNmThz = 299792.458; // c in nm * THz

bool is_pump(int index, const PumpPair& pumps)
{
    return index == pumps.p.index || index == pumps.q.index;
}

} // namespace

double GridChannel::wavelength_nm() const
{
    return kSpeedOfLightNmThz / frequency_thz();
}

std::string GridChannel::label() const
{
    return "C" + std::to_string(index);
}

FrequencyGhz channel_frequency_ghz(int index, const GridSpec& grid)
{
    if (!grid.contains(index))
    {
        throw OutOfGrid("channel " + std::to_string(index) + " outside grid [" +
                        std::to_string(grid.min_index) + ", " + std::to_string(grid.max_index) + "]");
    }
    return grid.anchor_ghz + static_cast<FrequencyGhz>(index) * grid.spacing_ghz;
}

double channel_frequency_thz(int index, const GridSpec& grid)
{
    return static_cast<double>(channel_frequency_ghz(index, grid)) / 1000.0;
}

GridChannel make_channel(int index, const GridSpec& grid)
{
    return GridChannel{index, channel_frequency_ghz(index, grid)};
}

PumpPair make_pumps(int p_index, int q_index, const GridSpec& grid)
{
    if (p_index == q_index)
    {
        throw ConfigError("pump channels must differ (both C" + std::to_string(p_index) + ")");
    }
    return PumpPair{make_channel(p_index, grid), make_channel(q_index, grid)};
}

PairingTriple pair_partners(const GridChannel& signal, const PumpPair& pumps, const GridSpec& grid)
{
    if (is_pump(signal.index, pumps))
    {
        throw PumpCollision("signal " + signal.label() + " is a pump channel");
    }
    const int partners[3] = {
        2 * pumps.p.index - signal.index,
        pumps.p.index + pumps.q.index - signal.index,
        2 * pumps.q.index - signal.index,
    };
    for (int idx : partners)
    {
        if (is_pump(idx, pumps))
        {
            throw PumpCollision("signal " + signal.label() + " pairs with pump channel C" + std::to_string(idx));
        }
    }
    return PairingTriple{
        signal,
        make_channel(partners[0], grid),
        make_channel(partners[1], grid),
        make_channel(partners[2], grid),
    };
}

std::vector<PairingTriple> enumerate_pairings(const PumpPair& pumps, const GridSpec& grid)
{
    std::vector<PairingTriple> out;
    // Compare 2*index with p+q to keep the midpoint test in integers.
    const int twice_mid = pumps.p.index + pumps.q.index;
    const bool low_is_low_index = grid.spacing_ghz > 0;
    for (int s = grid.min_index; s <= grid.max_index; ++s)
    {
        const bool low_side = low_is_low_index ? 2 * s < twice_mid : 2 * s > twice_mid;
        if (!low_side || is_pump(s, pumps))
        {
            continue;
        }
        try
        {
            out.push_back(pair_partners(make_channel(s, grid), pumps, grid));
        }
        catch (const PumpCollision&)
        {
        }
        catch (const OutOfGrid&)
        {
        }
    }
    return out;
}

std::string pairings_csv(const std::vector<PairingTriple>& triples)
{
    std::ostringstream os;
    os << "signal_index,idler_deg_p,idler_nondeg,idler_deg_q,sum_pp_ghz,sum_pq_ghz,sum_qq_ghz\n";
    for (const auto& t : triples)
    {
        os << t.signal.index << ',' << t.idler_deg_p.index << ',' << t.idler_nondeg.index << ','
           << t.idler_deg_q.index << ',' << t.signal.frequency_ghz + t.idler_deg_p.frequency_ghz << ','
           << t.signal.frequency_ghz + t.idler_nondeg.frequency_ghz << ','
           << t.signal.frequency_ghz + t.idler_deg_q.frequency_ghz << '\n';
    }
    return os.str();
}

} // namespace qcs
