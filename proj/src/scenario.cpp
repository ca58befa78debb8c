#include "qcs/scenario.hpp"

#include "qcs/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace qcs {

using nlohmann::json;

Scenario default_scenario()
{
    Scenario s;
    s.grid = GridSpec{190000, 100, 17, 61};
    s.pump_p = 27;
    s.pump_q = 41;
    s.users = {
        UserSpec{"Alice", 10.0, 12345.0, 0.0, 0.0},
        UserSpec{"Bob", 25.0, -7000.0, 0.0, 0.0},
        UserSpec{"Charlie", 10.0, 19215.0, 0.0, 0.0},
    };
    s.source = SourceParams{400.0, 10.0};

    const DetectorParams quiet{0.8, 70.0, 100.0, 50000.0};
    const DetectorParams noisy{0.8, 300.0, 5000.0, 50000.0};
    s.detectors[kDefaultKey] = quiet;
    s.detectors["server.signal.C33"] = DetectorParams{0.8, 70.0, 1000.0, 50000.0};
    s.detectors["Alice.upd"] = noisy;
    s.detectors["server.rtd.Alice"] = noisy;
    s.detectors["Charlie.upd"] = noisy;
    s.detectors["server.rtd.Charlie"] = noisy;

    FiberSpan fiber;
    fiber.group_delay_ps_per_km = 4'895'900.0;
    fiber.loss_db_per_km = 0.2;
    fiber.dispersion_ps_per_km = 10.0;
    fiber.insertion_loss_db = 1.0;
    s.fibers[kDefaultKey] = fiber;
    // Bob's span is dispersion-managed.
    fiber.dispersion_ps_per_km = 4.0;
    s.fibers["Bob"] = fiber;

    s.duration_s = 2000.0;
    s.batch_s = 20.0;
    s.seed = 20240601;
    s.tdev_m = {1, 2, 4, 8, 16, 20, 32};
    return s;
}

namespace {

json detector_json(const DetectorParams& d)
{
    return json{{"efficiency", d.efficiency},
                {"jitter_fwhm_ps", d.jitter_fwhm_ps},
                {"dark_count_rate_hz", d.dark_count_rate_hz},
                {"dead_time_ps", d.dead_time_ps}};
}

DetectorParams detector_from(const json& j, const DetectorParams& base)
{
    DetectorParams d = base;
    d.efficiency = j.value("efficiency", d.efficiency);
    d.jitter_fwhm_ps = j.value("jitter_fwhm_ps", d.jitter_fwhm_ps);
    d.dark_count_rate_hz = j.value("dark_count_rate_hz", d.dark_count_rate_hz);
    d.dead_time_ps = j.value("dead_time_ps", d.dead_time_ps);
    return d;
}

json fiber_json(const FiberSpan& f)
{
    return json{{"group_delay_ps_per_km", f.group_delay_ps_per_km},
                {"loss_db_per_km", f.loss_db_per_km},
                {"dispersion_ps_per_km", f.dispersion_ps_per_km},
                {"insertion_loss_db", f.insertion_loss_db},
                {"wander_amplitude_ps", f.wander_amplitude_ps},
                {"wander_period_s", f.wander_period_s}};
}

FiberSpan fiber_from(const json& j, const FiberSpan& base)
{
    FiberSpan f = base;
    f.group_delay_ps_per_km = j.value("group_delay_ps_per_km", f.group_delay_ps_per_km);
    f.loss_db_per_km = j.value("loss_db_per_km", f.loss_db_per_km);
    f.dispersion_ps_per_km = j.value("dispersion_ps_per_km", f.dispersion_ps_per_km);
    f.insertion_loss_db = j.value("insertion_loss_db", f.insertion_loss_db);
    f.wander_amplitude_ps = j.value("wander_amplitude_ps", f.wander_amplitude_ps);
    f.wander_period_s = j.value("wander_period_s", f.wander_period_s);
    return f;
}

} // namespace

std::string scenario_to_json(const Scenario& s)
{
    json j;
    j["grid"] = {{"anchor_ghz", s.grid.anchor_ghz},
                 {"spacing_ghz", s.grid.spacing_ghz},
                 {"min_index", s.grid.min_index},
                 {"max_index", s.grid.max_index}};
    j["pumps"] = {{"p", s.pump_p}, {"q", s.pump_q}};
    json users = json::array();
    for (const auto& u : s.users)
    {
        users.push_back({{"name", u.name},
                         {"fiber_km", u.fiber_km},
                         {"clock_offset_ps", u.clock_offset_ps},
                         {"clock_drift_ps_per_s", u.clock_drift_ps_per_s},
                         {"path_asymmetry_ps", u.path_asymmetry_ps}});
    }
    j["users"] = std::move(users);
    j["source"] = {{"pair_rate_hz", s.source.pair_rate_hz},
                   {"correlation_jitter_fwhm_ps", s.source.correlation_jitter_fwhm_ps}};
    j["detectors"] = json::object();
    for (const auto& [id, d] : s.detectors)
        j["detectors"][id] = detector_json(d);
    j["fibers"] = json::object();
    for (const auto& [id, f] : s.fibers)
        j["fibers"][id] = fiber_json(f);
    json steps = json::array();
    for (const auto& st : s.steps)
        steps.push_back({{"detector_id", st.detector_id}, {"at_s", st.at_s}, {"shift_ps", st.shift_ps}});
    j["steps"] = std::move(steps);
    j["duration_s"] = s.duration_s;
    j["batch_s"] = s.batch_s;
    j["seed"] = s.seed;
    j["analysis"] = {{"bin_width_ps", s.analysis.bin_width_ps},
                     {"half_window_ps", s.analysis.half_window_ps},
                     {"coarse_bin_ps", s.analysis.coarse_bin_ps},
                     {"coarse_min_ps", s.analysis.coarse_min_ps},
                     {"coarse_max_ps", s.analysis.coarse_max_ps},
                     {"fit_max_iterations", s.analysis.fit.max_iterations},
                     {"fit_tolerance_bins", s.analysis.fit.tolerance_bins},
                     {"tdev_m", s.tdev_m}};
    j["output"] = {{"stream_csv", s.stream_csv}};
    return j.dump(2) + "\n";
}

Scenario scenario_from_json(std::string_view text)
{
    Scenario s;
    try
    {
        const json j = json::parse(text);
        const auto& g = j.at("grid");
        s.grid.anchor_ghz = g.value("anchor_ghz", s.grid.anchor_ghz);
        s.grid.spacing_ghz = g.value("spacing_ghz", s.grid.spacing_ghz);
        s.grid.min_index = g.at("min_index").get<int>();
        s.grid.max_index = g.at("max_index").get<int>();
        s.pump_p = j.at("pumps").at("p").get<int>();
        s.pump_q = j.at("pumps").at("q").get<int>();
        for (const auto& u : j.at("users"))
        {
            UserSpec us;
            us.name = u.at("name").get<std::string>();
            us.fiber_km = u.at("fiber_km").get<double>();
            us.clock_offset_ps = u.value("clock_offset_ps", 0.0);
            us.clock_drift_ps_per_s = u.value("clock_drift_ps_per_s", 0.0);
            us.path_asymmetry_ps = u.value("path_asymmetry_ps", 0.0);
            s.users.push_back(std::move(us));
        }
        if (j.contains("source"))
        {
            const auto& src = j.at("source");
            s.source.pair_rate_hz = src.value("pair_rate_hz", s.source.pair_rate_hz);
            s.source.correlation_jitter_fwhm_ps =
                src.value("correlation_jitter_fwhm_ps", s.source.correlation_jitter_fwhm_ps);
        }
        // Explicit entries inherit unspecified fields from the default entry.
        if (j.contains("detectors"))
        {
            const auto& dets = j.at("detectors");
            const DetectorParams base = dets.contains(kDefaultKey) ? detector_from(dets.at(kDefaultKey), {})
                                                                   : DetectorParams{};
            for (const auto& [id, d] : dets.items())
                s.detectors[id] = id == kDefaultKey ? base : detector_from(d, base);
        }
        if (j.contains("fibers"))
        {
            const auto& fibers = j.at("fibers");
            const FiberSpan base = fibers.contains(kDefaultKey) ? fiber_from(fibers.at(kDefaultKey), {}) : FiberSpan{};
            for (const auto& [id, f] : fibers.items())
                s.fibers[id] = id == kDefaultKey ? base : fiber_from(f, base);
        }
        if (j.contains("steps"))
        {
            for (const auto& st : j.at("steps"))
            {
                s.steps.push_back(StepPerturbation{st.at("detector_id").get<std::string>(),
                                                   st.at("at_s").get<double>(), st.at("shift_ps").get<double>()});
            }
        }
        s.duration_s = j.value("duration_s", s.duration_s);
        s.batch_s = j.value("batch_s", s.batch_s);
        s.seed = j.value("seed", s.seed);
        if (j.contains("analysis"))
        {
            const auto& a = j.at("analysis");
            s.analysis.bin_width_ps = a.value("bin_width_ps", s.analysis.bin_width_ps);
            s.analysis.half_window_ps = a.value("half_window_ps", s.analysis.half_window_ps);
            s.analysis.coarse_bin_ps = a.value("coarse_bin_ps", s.analysis.coarse_bin_ps);
            s.analysis.coarse_min_ps = a.value("coarse_min_ps", s.analysis.coarse_min_ps);
            s.analysis.coarse_max_ps = a.value("coarse_max_ps", s.analysis.coarse_max_ps);
            s.analysis.fit.max_iterations = a.value("fit_max_iterations", s.analysis.fit.max_iterations);
            s.analysis.fit.tolerance_bins = a.value("fit_tolerance_bins", s.analysis.fit.tolerance_bins);
            s.tdev_m = a.value("tdev_m", s.tdev_m);
        }
        if (j.contains("output"))
        {
            s.stream_csv = j.at("output").value("stream_csv", s.stream_csv);
        }
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    validate(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
    {
        throw ConfigError("cannot open scenario " + path.string());
    }
    std::stringstream buf;
    buf << is.rdbuf();
    return scenario_from_json(buf.str());
}

PumpPair scenario_pumps(const Scenario& s)
{
    return make_pumps(s.pump_p, s.pump_q, s.grid);
}

void validate(const Scenario& s)
{
    if (s.grid.min_index > s.grid.max_index || s.grid.spacing_ghz == 0)
        throw ConfigError("grid bounds are empty or spacing is zero");
    if (s.users.empty())
        throw ConfigError("scenario has no users");
    std::set<std::string> names;
    for (const auto& u : s.users)
    {
        if (u.name.empty() || u.name == kDefaultKey)
            throw ConfigError("invalid user name '" + u.name + "'");
        if (!names.insert(u.name).second)
            throw ConfigError("duplicate user '" + u.name + "'");
        if (u.fiber_km < 0.0)
            throw ConfigError("user '" + u.name + "' has negative fiber length");
    }
    if (!(s.batch_s > 0.0) || s.duration_s < s.batch_s)
        throw ConfigError("need batch_s > 0 and duration_s >= batch_s");
    if (!(s.source.pair_rate_hz > 0.0))
        throw ConfigError("pair_rate_hz must be positive");
}

SimulationInput simulation_input(const Scenario& s, const NetworkPlan& plan)
{
    SimulationInput in;
    in.source = s.source;
    in.steps = s.steps;
    in.duration_s = s.duration_s;
    in.seed = s.seed;
    for (const auto& id : required_detectors(plan))
    {
        auto it = s.detectors.find(id);
        if (it == s.detectors.end())
            it = s.detectors.find(kDefaultKey);
        if (it == s.detectors.end())
            throw ConfigError("no detector entry for '" + id + "' and no default");
        in.detectors[id] = it->second;
    }
    for (const auto& a : plan.assignments)
    {
        auto it = s.fibers.find(a.user.name);
        if (it == s.fibers.end())
            it = s.fibers.find(kDefaultKey);
        if (it == s.fibers.end())
            throw ConfigError("no fiber entry for '" + a.user.name + "' and no default");
        FiberSpan f = it->second;
        f.length_km = a.user.fiber_km;
        in.fibers[a.user.name] = f;
    }
    for (const auto& st : s.steps)
    {
        if (!in.detectors.count(st.detector_id))
            throw ConfigError("step perturbation names unknown detector '" + st.detector_id + "'");
    }
    return in;
}

} // namespace qcs
