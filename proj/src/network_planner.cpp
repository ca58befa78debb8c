#include "qcs/network_planner.hpp"

#include "qcs/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <iomanip>
#include <set>
#include <sstream>

namespace qcs {

using nlohmann::json;

std::string_view to_string(Mechanism m)
{
    switch (m)
    {
    case Mechanism::degenerate_p:
        return "degenerate_p";
    case Mechanism::non_degenerate:
        return "non_degenerate";
    case Mechanism::degenerate_q:
        return "degenerate_q";
    }
    return "unknown";
}

Mechanism mechanism_from_string(std::string_view s)
{
    if (s == "degenerate_p")
        return Mechanism::degenerate_p;
    if (s == "non_degenerate")
        return Mechanism::non_degenerate;
    if (s == "degenerate_q")
        return Mechanism::degenerate_q;
    throw FormatError("unknown SFWM mechanism '" + std::string(s) + "'");
}

std::vector<GridChannel> NetworkPlan::signal_channels() const
{
    std::vector<GridChannel> out;
    for (const auto& a : assignments)
    {
        if (std::find(out.begin(), out.end(), a.signal) == out.end())
        {
            out.push_back(a.signal);
        }
    }
    return out;
}

const Assignment& NetworkPlan::assignment_for(std::string_view user) const
{
    for (const auto& a : assignments)
    {
        if (a.user.name == user)
        {
            return a;
        }
    }
    throw ConfigError("user '" + std::string(user) + "' not in plan");
}

int resource_count(int n)
{
    if (n < 1)
    {
        throw ConfigError("resource count needs at least one user");
    }
    return (4 * n + 2) / 3;
}

NetworkPlan plan_network(const std::vector<UserSpec>& users, const PumpPair& pumps, const GridSpec& grid)
{
    if (users.empty())
    {
        throw ConfigError("no users to plan");
    }
    std::set<std::string> names;
    for (const auto& u : users)
    {
        if (u.fiber_km < 0.0)
        {
            throw ConfigError("user '" + u.name + "' has negative fiber length");
        }
        if (!names.insert(u.name).second)
        {
            throw ConfigError("duplicate user name '" + u.name + "'");
        }
    }

    auto triples = enumerate_pairings(pumps, grid);
    const int twice_mid = pumps.p.index + pumps.q.index;
    std::stable_sort(triples.begin(), triples.end(), [&](const PairingTriple& a, const PairingTriple& b) {
        return std::abs(2 * a.signal.index - twice_mid) < std::abs(2 * b.signal.index - twice_mid);
    });

    NetworkPlan plan;
    plan.grid = grid;
    plan.pumps = pumps;

    std::set<int> used;
    std::set<int> counted;
    std::size_t next_user = 0;
    for (const auto& t : triples)
    {
        if (next_user == users.size())
        {
            break;
        }
        const std::array<int, 4> members = {t.signal.index, t.idler_deg_p.index, t.idler_nondeg.index,
                                            t.idler_deg_q.index};
        if (std::any_of(members.begin(), members.end(), [&](int i) { return used.count(i) > 0; }))
        {
            continue;
        }
        used.insert(members.begin(), members.end());

        std::array<std::pair<GridChannel, Mechanism>, 3> idlers = {{
            {t.idler_deg_p, Mechanism::degenerate_p},
            {t.idler_nondeg, Mechanism::non_degenerate},
            {t.idler_deg_q, Mechanism::degenerate_q},
        }};
        std::sort(idlers.begin(), idlers.end(), [](const auto& a, const auto& b) {
            return a.first.frequency_ghz > b.first.frequency_ghz;
        });

        counted.insert(t.signal.index);
        for (const auto& [idler, mech] : idlers)
        {
            if (next_user == users.size())
            {
                break;
            }
            plan.assignments.push_back(Assignment{users[next_user++], idler, t.signal, mech});
            counted.insert(idler.index);
        }
    }
    if (next_user < users.size())
    {
        throw InsufficientGrid("grid [" + std::to_string(grid.min_index) + ", " + std::to_string(grid.max_index) +
                               "] has room for " + std::to_string(next_user) + " of " +
                               std::to_string(users.size()) + " users");
    }
    plan.channel_count = static_cast<int>(counted.size());
    return plan;
}

namespace {

json channel_json(const GridChannel& c)
{
    return json{{"index", c.index}, {"frequency_ghz", c.frequency_ghz}};
}

GridChannel channel_from(const json& j, const GridSpec& grid)
{
    auto c = make_channel(j.at("index").get<int>(), grid);
    if (j.contains("frequency_ghz") && j.at("frequency_ghz").get<FrequencyGhz>() != c.frequency_ghz)
    {
        throw FormatError("channel " + c.label() + " frequency does not match grid");
    }
    return c;
}

} // namespace

std::string plan_to_json(const NetworkPlan& plan)
{
    json j;
    j["grid"] = {{"anchor_ghz", plan.grid.anchor_ghz},
                 {"spacing_ghz", plan.grid.spacing_ghz},
                 {"min_index", plan.grid.min_index},
                 {"max_index", plan.grid.max_index}};
    j["pumps"] = {{"p", channel_json(plan.pumps.p)}, {"q", channel_json(plan.pumps.q)}};
    j["channel_count"] = plan.channel_count;
    json arr = json::array();
    for (const auto& a : plan.assignments)
    {
        arr.push_back({{"user",
                        {{"name", a.user.name},
                         {"fiber_km", a.user.fiber_km},
                         {"clock_offset_ps", a.user.clock_offset_ps},
                         {"clock_drift_ps_per_s", a.user.clock_drift_ps_per_s},
                         {"path_asymmetry_ps", a.user.path_asymmetry_ps}}},
                       {"signal", channel_json(a.signal)},
                       {"idler", channel_json(a.idler)},
                       {"mechanism", std::string(to_string(a.mechanism))}});
    }
    j["assignments"] = std::move(arr);
    return j.dump(2) + "\n";
}

NetworkPlan plan_from_json(std::string_view text)
{
    try
    {
        const json j = json::parse(text);
        NetworkPlan plan;
        const auto& g = j.at("grid");
        plan.grid.anchor_ghz = g.at("anchor_ghz").get<FrequencyGhz>();
        plan.grid.spacing_ghz = g.at("spacing_ghz").get<FrequencyGhz>();
        plan.grid.min_index = g.at("min_index").get<int>();
        plan.grid.max_index = g.at("max_index").get<int>();
        plan.pumps.p = channel_from(j.at("pumps").at("p"), plan.grid);
        plan.pumps.q = channel_from(j.at("pumps").at("q"), plan.grid);
        plan.channel_count = j.at("channel_count").get<int>();
        for (const auto& a : j.at("assignments"))
        {
            Assignment as;
            const auto& u = a.at("user");
            as.user.name = u.at("name").get<std::string>();
            as.user.fiber_km = u.at("fiber_km").get<double>();
            as.user.clock_offset_ps = u.value("clock_offset_ps", 0.0);
            as.user.clock_drift_ps_per_s = u.value("clock_drift_ps_per_s", 0.0);
            as.user.path_asymmetry_ps = u.value("path_asymmetry_ps", 0.0);
            as.signal = channel_from(a.at("signal"), plan.grid);
            as.idler = channel_from(a.at("idler"), plan.grid);
            as.mechanism = mechanism_from_string(a.at("mechanism").get<std::string>());
            plan.assignments.push_back(std::move(as));
        }
        return plan;
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("plan: ") + e.what());
    }
}

std::string plan_table(const NetworkPlan& plan)
{
    std::ostringstream os;
    os << "pumps " << plan.pumps.p.label() << " / " << plan.pumps.q.label() << ", " << plan.assignments.size()
       << " users, " << plan.channel_count << " channels\n";
    os << std::left << std::setw(12) << "user" << std::setw(8) << "signal" << std::setw(8) << "idler"
       << std::setw(12) << "idler_nm" << std::setw(16) << "mechanism" << std::right << std::setw(10) << "fiber_km"
       << '\n';
    for (const auto& a : plan.assignments)
    {
        os << std::left << std::setw(12) << a.user.name << std::setw(8) << a.signal.label() << std::setw(8)
           << a.idler.label() << std::setw(12) << std::fixed << std::setprecision(2) << a.idler.wavelength_nm()
           << std::setw(16) << to_string(a.mechanism) << std::right << std::setw(10) << std::setprecision(1)
           << a.user.fiber_km << '\n';
    }
    return os.str();
}

} // namespace qcs
