#include "qcs/photon_sim.hpp"

#include "qcs/error.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>

namespace qcs {

namespace {

// A photon arrival: integer emission time plus a small real-valued delay.
// Keeping the large part integral preserves sub-ps precision over hours.
struct Arrival
{
    Picoseconds base;
    double delay_ps;
};

struct DetectorLoad
{
    std::string clock_id;
    std::vector<Arrival> arrivals;
    double clock_offset_ps = 0.0;
    double clock_drift_ps_per_s = 0.0;
};

double sigma_from_fwhm(double fwhm)
{
    return fwhm / kFwhmPerSigma;
}

double wander_ps(const FiberSpan& f, double t_ps)
{
    if (f.wander_amplitude_ps == 0.0 || f.wander_period_s <= 0.0)
    {
        return 0.0;
    }
    return f.wander_amplitude_ps * std::sin(2.0 * std::numbers::pi * (t_ps / kPsPerSecond) / f.wander_period_s);
}

void validate(const NetworkPlan& plan, const SimulationInput& in)
{
    if (!(in.duration_s > 0.0))
    {
        throw ConfigError("simulation duration must be positive");
    }
    if (!(in.source.pair_rate_hz > 0.0) || in.source.correlation_jitter_fwhm_ps < 0.0)
    {
        throw ConfigError("source needs pair_rate > 0 and non-negative jitter");
    }
    for (const auto& id : required_detectors(plan))
    {
        auto it = in.detectors.find(id);
        if (it == in.detectors.end())
        {
            throw ConfigError("no detector parameters for '" + id + "'");
        }
        const auto& d = it->second;
        if (d.efficiency < 0.0 || d.efficiency > 1.0 || d.jitter_fwhm_ps < 0.0 || d.dark_count_rate_hz < 0.0 ||
            d.dead_time_ps < 0.0)
        {
            throw ConfigError("detector '" + id + "' has out-of-range parameters");
        }
    }
    for (const auto& a : plan.assignments)
    {
        auto it = in.fibers.find(a.user.name);
        if (it == in.fibers.end())
        {
            throw ConfigError("no fiber span for user '" + a.user.name + "'");
        }
        const auto& f = it->second;
        if (f.length_km < 0.0 || !(f.group_delay_ps_per_km > 0.0) || f.loss_db_per_km < 0.0 ||
            f.dispersion_ps_per_km < 0.0)
        {
            throw ConfigError("fiber for '" + a.user.name + "' has out-of-range parameters");
        }
        if (std::abs(f.length_km - a.user.fiber_km) > 1e-9)
        {
            throw ConfigError("fiber length for '" + a.user.name + "' disagrees with the plan");
        }
    }
}

std::vector<Picoseconds> poisson_times(std::mt19937_64& rng, double rate_hz, Picoseconds horizon)
{
    std::vector<Picoseconds> out;
    if (rate_hz <= 0.0)
    {
        return out;
    }
    std::exponential_distribution<double> gap(rate_hz / kPsPerSecond);
    out.reserve(static_cast<std::size_t>(rate_hz * static_cast<double>(horizon) / kPsPerSecond * 1.01) + 16);
    double t = gap(rng);
    while (t < static_cast<double>(horizon))
    {
        out.push_back(static_cast<Picoseconds>(t));
        t += gap(rng);
    }
    return out;
}

struct TripleOutput
{
    std::vector<Arrival> signal;
    std::map<std::string, std::vector<Arrival>> user;      // keyed by user name
    std::map<std::string, std::vector<Arrival>> roundtrip; // keyed by user name
    std::map<std::string, std::uint64_t> emitted;
};

TripleOutput run_triple(const GridChannel& signal, const NetworkPlan& plan, const SimulationInput& in,
                        Picoseconds horizon)
{
    TripleOutput out;
    const double corr_sigma = sigma_from_fwhm(in.source.correlation_jitter_fwhm_ps);
    constexpr Mechanism mechanisms[] = {Mechanism::degenerate_p, Mechanism::non_degenerate, Mechanism::degenerate_q};

    for (Mechanism mech : mechanisms)
    {
        const std::string key = signal.label() + "/" + std::string(to_string(mech));
        std::mt19937_64 rng(derive_seed(in.seed, "pairs/" + key));
        const auto emissions = poisson_times(rng, in.source.pair_rate_hz, horizon);
        out.emitted[key] = emissions.size();

        const Assignment* user = nullptr;
        for (const auto& a : plan.assignments)
        {
            if (a.signal == signal && a.mechanism == mech)
            {
                user = &a;
            }
        }

        for (Picoseconds t : emissions)
        {
            out.signal.push_back(Arrival{t, 0.0});
        }
        if (user == nullptr)
        {
            continue; // idler channel unused; its photons are dropped at the DWDM
        }

        const FiberSpan& span = in.fibers.at(user->user.name);
        const double transmission = span.transmission();
        const double disp_sigma = sigma_from_fwhm(span.dispersion_ps_per_km * span.length_km);
        const double base_delay = span.one_way_delay_ps();
        auto& to_user = out.user[user->user.name];
        auto& back = out.roundtrip[user->user.name];

        std::normal_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        for (Picoseconds t : emissions)
        {
            const double idler_jitter = corr_sigma * unit(rng);
            // Spectral detuning is a property of the photon, so the same draw
            // broadens both traversals coherently.
            const double detuning = unit(rng);
            const double split = coin(rng);
            const double loss_out = coin(rng);
            const double loss_back = coin(rng);
            if (loss_out >= transmission)
            {
                continue;
            }
            const double launch = static_cast<double>(t) + idler_jitter;
            const double leg1 = base_delay + wander_ps(span, launch) + detuning * disp_sigma;
            if (split < 0.5)
            {
                to_user.push_back(Arrival{t, idler_jitter + leg1 + user->user.path_asymmetry_ps});
            }
            else if (loss_back < transmission)
            {
                const double leg2 = base_delay + wander_ps(span, launch + leg1) + detuning * disp_sigma;
                back.push_back(Arrival{t, idler_jitter + leg1 + leg2});
            }
        }
    }
    return out;
}

TimestampStream detect(const std::string& id, DetectorLoad load, const DetectorParams& det,
                       const std::vector<StepPerturbation>& steps, std::uint64_t seed, Picoseconds horizon)
{
    std::mt19937_64 rng(derive_seed(seed, "detector/" + id));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double jitter_sigma = sigma_from_fwhm(det.jitter_fwhm_ps);

    std::vector<Arrival> hits;
    hits.reserve(load.arrivals.size());
    for (const auto& a : load.arrivals)
    {
        if (coin(rng) < det.efficiency)
        {
            hits.push_back(a);
        }
    }
    std::vector<Picoseconds> dark;
    if (det.dark_count_rate_hz > 0.0)
    {
        std::poisson_distribution<long long> count(det.dark_count_rate_hz * static_cast<double>(horizon) /
                                                   kPsPerSecond);
        std::uniform_int_distribution<Picoseconds> when(0, horizon - 1);
        const long long n = count(rng);
        for (long long i = 0; i < n; ++i)
        {
            hits.push_back(Arrival{when(rng), 0.0});
        }
    }

    std::vector<StepPerturbation> mine;
    for (const auto& s : steps)
    {
        if (s.detector_id == id)
        {
            mine.push_back(s);
        }
    }

    TimestampStream out;
    out.detector_id = id;
    out.clock_id = load.clock_id;
    out.events.reserve(hits.size());
    for (const auto& h : hits)
    {
        double delta = h.delay_ps + jitter_sigma * unit(rng);
        const double true_ps = static_cast<double>(h.base) + delta;
        for (const auto& s : mine)
        {
            if (true_ps >= s.at_s * kPsPerSecond)
            {
                delta += s.shift_ps;
            }
        }
        delta += load.clock_offset_ps + load.clock_drift_ps_per_s * (true_ps / kPsPerSecond);
        out.events.push_back(h.base + static_cast<Picoseconds>(std::llround(delta)));
    }
    std::sort(out.events.begin(), out.events.end());

    if (det.dead_time_ps > 0.0 && !out.events.empty())
    {
        std::size_t kept = 1;
        Picoseconds last = out.events.front();
        for (std::size_t i = 1; i < out.events.size(); ++i)
        {
            if (static_cast<double>(out.events[i] - last) >= det.dead_time_ps)
            {
                last = out.events[i];
                out.events[kept++] = last;
            }
        }
        out.events.resize(kept);
    }
    return out;
}

} // namespace

double FiberSpan::transmission() const
{
    return std::pow(10.0, -(loss_db_per_km * length_km + insertion_loss_db) / 10.0);
}

std::string signal_detector_id(const GridChannel& signal)
{
    return "server.signal." + signal.label();
}

std::string user_detector_id(std::string_view user)
{
    return std::string(user) + ".upd";
}

std::string roundtrip_detector_id(std::string_view user)
{
    return "server.rtd." + std::string(user);
}

std::vector<std::string> required_detectors(const NetworkPlan& plan)
{
    std::vector<std::string> ids;
    for (const auto& s : plan.signal_channels())
    {
        ids.push_back(signal_detector_id(s));
    }
    for (const auto& a : plan.assignments)
    {
        ids.push_back(user_detector_id(a.user.name));
        ids.push_back(roundtrip_detector_id(a.user.name));
    }
    return ids;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view name)
{
    // FNV-1a over the name, folded into a seed_seq with the master seed.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name)
    {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

SimulationResult simulate(const NetworkPlan& plan, const SimulationInput& input)
{
    validate(plan, input);
    const auto horizon = static_cast<Picoseconds>(std::llround(input.duration_s * kPsPerSecond));

    const auto signals = plan.signal_channels();
    std::vector<std::future<TripleOutput>> triples;
    for (const auto& s : signals)
    {
        triples.push_back(std::async(std::launch::async, run_triple, s, std::cref(plan), std::cref(input), horizon));
    }

    SimulationResult result;
    std::map<std::string, DetectorLoad> loads;
    for (std::size_t i = 0; i < signals.size(); ++i)
    {
        TripleOutput t = triples[i].get();
        result.emitted_pairs.merge(t.emitted);
        auto& sig = loads[signal_detector_id(signals[i])];
        sig.clock_id = kServerClock;
        sig.arrivals = std::move(t.signal);
        for (auto& [name, arrivals] : t.user)
        {
            const auto& u = plan.assignment_for(name).user;
            auto& load = loads[user_detector_id(name)];
            load.clock_id = name;
            load.clock_offset_ps = u.clock_offset_ps;
            load.clock_drift_ps_per_s = u.clock_drift_ps_per_s;
            load.arrivals = std::move(arrivals);
        }
        for (auto& [name, arrivals] : t.roundtrip)
        {
            auto& load = loads[roundtrip_detector_id(name)];
            load.clock_id = kServerClock;
            load.arrivals = std::move(arrivals);
        }
    }

    std::vector<std::pair<std::string, std::future<TimestampStream>>> pending;
    for (auto& [id, load] : loads)
    {
        pending.emplace_back(id, std::async(std::launch::async, detect, id, std::move(load),
                                            std::cref(input.detectors.at(id)), std::cref(input.steps), input.seed,
                                            horizon));
    }
    for (auto& [id, fut] : pending)
    {
        result.streams.emplace(id, fut.get());
    }
    return result;
}

} // namespace qcs
