#pragma once

// Synthetic detector timestamps for a planned round-trip network.
//
// Per pairing triple, each SFWM mechanism emits pairs as a homogeneous
// Poisson process. The signal photon is detected at the server. The idler
// crosses the server->user span, is split 50/50 at the user, and is either
// detected there (user clock) or sent back over the same span to the
// server's round-trip detector (server clock).

#include "qcs/network_planner.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qcs {

using Picoseconds = std::int64_t;

inline constexpr double kPsPerSecond = 1e12;
inline constexpr double kFwhmPerSigma = 2.3548200450309493; // 2 sqrt(2 ln 2)

struct SourceParams
{
    double pair_rate_hz = 1000.0; // per mechanism per triple
    double correlation_jitter_fwhm_ps = 0.0;

    bool operator==(const SourceParams&) const = default;
};

struct DetectorParams
{
    double efficiency = 1.0;
    double jitter_fwhm_ps = 0.0;
    double dark_count_rate_hz = 0.0;
    double dead_time_ps = 0.0;

    bool operator==(const DetectorParams&) const = default;
};

struct FiberSpan
{
    double length_km = 0.0;
    double group_delay_ps_per_km = 4'895'900.0;
    double loss_db_per_km = 0.0;
    /// Gaussian FWHM broadening accumulated per km of propagation.
    double dispersion_ps_per_km = 0.0;
    /// Circulator, splitter and connector losses per traversal.
    double insertion_loss_db = 0.0;
    /// Slow sinusoidal delay wander common to both directions.
    double wander_amplitude_ps = 0.0;
    double wander_period_s = 0.0;

    double one_way_delay_ps() const { return length_km * group_delay_ps_per_km; }
    double transmission() const;

    bool operator==(const FiberSpan&) const = default;
};

/// From at_s on (detector's true time), the detector's delay grows by shift_ps.
struct StepPerturbation
{
    std::string detector_id;
    double at_s = 0.0;
    double shift_ps = 0.0;

    bool operator==(const StepPerturbation&) const = default;
};

struct TimestampStream
{
    std::string detector_id;
    std::string clock_id;
    std::vector<Picoseconds> events; // non-decreasing
};

struct SimulationInput
{
    SourceParams source;
    std::map<std::string, DetectorParams> detectors;
    std::map<std::string, FiberSpan> fibers; // keyed by user name
    std::vector<StepPerturbation> steps;
    double duration_s = 0.0;
    std::uint64_t seed = 0;
};

struct SimulationResult
{
    std::map<std::string, TimestampStream> streams;
    /// Emitted pair count per "<signal label>/<mechanism>".
    std::map<std::string, std::uint64_t> emitted_pairs;
};

inline const std::string kServerClock = "server";

std::string signal_detector_id(const GridChannel& signal);
std::string user_detector_id(std::string_view user);
std::string roundtrip_detector_id(std::string_view user);

/// Every detector id the plan needs, in a stable order.
std::vector<std::string> required_detectors(const NetworkPlan& plan);

/// Throws ConfigError on missing or invalid detector/fiber entries.
SimulationResult simulate(const NetworkPlan& plan, const SimulationInput& input);

/// Deterministic generator for a named sub-stream of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name);

} // namespace qcs
