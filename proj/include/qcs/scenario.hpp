#pragma once

// Scenario file: one JSON document driving plan, simulate, analyze and report.

#include "qcs/network_planner.hpp"
#include "qcs/photon_sim.hpp"
#include "qcs/sync_engine.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qcs {

/// Key used for fallback detector and fiber entries.
inline const std::string kDefaultKey = "default";

struct Scenario
{
    GridSpec grid;
    int pump_p = 27;
    int pump_q = 41;
    std::vector<UserSpec> users;
    SourceParams source;
    /// Detector id -> params; "default" applies to ids without an entry.
    std::map<std::string, DetectorParams> detectors;
    /// User name -> span params (length comes from the user); "default" as above.
    std::map<std::string, FiberSpan> fibers;
    std::vector<StepPerturbation> steps;
    double duration_s = 2000.0;
    double batch_s = 20.0;
    std::uint64_t seed = 1;
    AnalysisParams analysis;
    std::vector<int> tdev_m;
    bool stream_csv = false;

    bool operator==(const Scenario&) const = default;
};

/// Three users on C27/C41 pumps: Alice 10 km on C49, Bob 25 km on C35,
/// Charlie 10 km on C21, 20 s batches. Alice and Charlie sit behind noisier,
/// wider-jitter detectors; Bob's span has low dispersion. Per-batch spread
/// lands at a few ps for every user.
Scenario default_scenario();

Scenario scenario_from_json(std::string_view text);
std::string scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

PumpPair scenario_pumps(const Scenario& s);

/// Explicit per-detector and per-user maps for simulate(). Throws
/// ConfigError when a planned detector or user has neither an entry nor a default.
SimulationInput simulation_input(const Scenario& s, const NetworkPlan& plan);

/// Structural checks: duration >= batch, unique user names, positive rates.
void validate(const Scenario& s);

} // namespace qcs
