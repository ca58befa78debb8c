#pragma once

#include "qcs/channel_grid.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace qcs {

/// A remote user. Offset and drift are the injected ground truth of the
/// user's clock relative to the server: local = true + offset + drift * true.
struct UserSpec
{
    std::string name;
    double fiber_km = 0.0;
    double clock_offset_ps = 0.0;
    double clock_drift_ps_per_s = 0.0;
    /// Extra delay on the user-detection branch only (component asymmetry).
    double path_asymmetry_ps = 0.0;

    bool operator==(const UserSpec&) const = default;
};

enum class Mechanism
{
    degenerate_p,
    non_degenerate,
    degenerate_q,
};

std::string_view to_string(Mechanism m);
Mechanism mechanism_from_string(std::string_view s);

struct Assignment
{
    UserSpec user;
    GridChannel idler;
    GridChannel signal;
    Mechanism mechanism = Mechanism::degenerate_p;

    bool operator==(const Assignment&) const = default;
};

struct NetworkPlan
{
    GridSpec grid;
    PumpPair pumps;
    std::vector<Assignment> assignments;
    int channel_count = 0;

    /// Distinct signal channels in first-use order.
    std::vector<GridChannel> signal_channels() const;
    const Assignment& assignment_for(std::string_view user) const;

    bool operator==(const NetworkPlan&) const = default;
};

/// ceil(4n/3); throws ConfigError for n < 1.
int resource_count(int n);

/// Packs users three per triple in input order. Triples are taken nearest
/// to the pump midpoint first, skipping any that reuse a channel already
/// allocated; inside a triple idlers are handed out highest frequency first.
/// Throws InsufficientGrid when triples run out.
NetworkPlan plan_network(const std::vector<UserSpec>& users, const PumpPair& pumps, const GridSpec& grid);

std::string plan_to_json(const NetworkPlan& plan);
NetworkPlan plan_from_json(std::string_view text);

/// Fixed-width table for terminal output.
std::string plan_table(const NetworkPlan& plan);

} // namespace qcs
