#include "qcs/error.hpp"
#include "qcs/scenario.hpp"
#include "qcs/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace qcs;

namespace {

struct Link
{
    NetworkPlan plan;
    SimulationResult sim;
    const TimestampStream& server() const { return sim.streams.at("server.signal.C33"); }
    const TimestampStream& user(const std::string& n) const { return sim.streams.at(user_detector_id(n)); }
    const TimestampStream& rtd(const std::string& n) const { return sim.streams.at(roundtrip_detector_id(n)); }
};

// Short version of the bundled scenario with a configurable user list.
Link run_link(double duration_s, std::uint64_t seed, std::vector<UserSpec> users = {},
              double wander_ps = 0.0)
{
    Scenario s = default_scenario();
    if (!users.empty())
        s.users = std::move(users);
    s.duration_s = duration_s;
    s.seed = seed;
    s.fibers[kDefaultKey].wander_amplitude_ps = wander_ps;
    s.fibers[kDefaultKey].wander_period_s = 400.0;
    Link l;
    l.plan = plan_network(s.users, scenario_pumps(s), s.grid);
    l.sim = simulate(l.plan, simulation_input(s, l.plan));
    return l;
}

OffsetSeries constant_series(double v, int n, double batch = 20.0)
{
    OffsetSeries s;
    s.user = "c";
    s.batch_duration_s = batch;
    for (int i = 0; i < n; ++i)
    {
        BatchOffsets b;
        b.batch_index = i;
        b.tau_su_ps = v;
        b.tau_sus_ps = 0.0;
        b.delta_t_ps = v;
        s.offsets.push_back(b);
    }
    return s;
}

double mean_delta(const OffsetSeries& s)
{
    return summary_stats(s).mean_ps;
}

std::vector<double> column(const OffsetSeries& s, double BatchOffsets::*field)
{
    std::vector<double> v;
    for (const auto& b : s.offsets)
        if (b.valid())
            v.push_back(b.*field);
    return v;
}

double stddev(const std::vector<double>& v)
{
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

} // namespace

TEST_CASE("round-trip clock difference arithmetic")
{
    const double d = 48'959'000.0;
    CHECK(clock_difference(d, 2 * d) == 0.0);
    CHECK(clock_difference(-48'959'057.0, -97'956'545.0) == 19'215.5);
}

TEST_CASE("closed-loop recovery on one 10 km link")
{
    const auto link = run_link(200.0, 99, {UserSpec{"Alice", 10.0, 12345.0, 0.0, 0.0}});
    const auto series = estimate_batch(link.server(), link.user("Alice"), link.rtd("Alice"), 20.0, {}, 200.0);
    CHECK(series.user == "Alice");
    REQUIRE(series.offsets.size() == 10);
    CHECK(series.valid_count() == 10);
    for (const auto& b : series.offsets)
    {
        CHECK(b.delta_t_ps == b.tau_su_ps - b.tau_sus_ps / 2.0);
        CHECK(b.tau_su_ps == doctest::Approx(48'959'000.0 + 12'345.0).epsilon(1e-6));
        CHECK(b.tau_sus_ps == doctest::Approx(2 * 48'959'000.0).epsilon(1e-6));
    }
    CHECK(std::abs(mean_delta(series) - 12345.0) < 5.0);
}

TEST_CASE("time-origin and user-clock shifts")
{
    const auto link = run_link(120.0, 5, {UserSpec{"Alice", 10.0, 0.0, 0.0, 0.0}});
    const auto base = estimate_batch(link.server(), link.user("Alice"), link.rtd("Alice"), 20.0, {}, 120.0);

    SUBCASE("whole-batch shift of every stream reproduces the batches exactly")
    {
        const Picoseconds shift = 20'000'000'000'000;
        auto shifted = [&](TimestampStream s) {
            for (auto& t : s.events)
                t += shift;
            return s;
        };
        const auto moved = estimate_batch(shifted(link.server()), shifted(link.user("Alice")),
                                          shifted(link.rtd("Alice")), 20.0, {}, 140.0);
        REQUIRE(moved.offsets.size() == 7);
        CHECK_FALSE(moved.offsets[0].valid());
        for (std::size_t k = 0; k < base.offsets.size(); ++k)
            CHECK(moved.offsets[k + 1].delta_t_ps == doctest::Approx(base.offsets[k].delta_t_ps).epsilon(1e-12));
    }
    SUBCASE("arbitrary common shift keeps the mean")
    {
        const Picoseconds shift = 3'141'592'653;
        auto shifted = [&](TimestampStream s) {
            for (auto& t : s.events)
                t += shift;
            return s;
        };
        const auto moved = estimate_batch(shifted(link.server()), shifted(link.user("Alice")),
                                          shifted(link.rtd("Alice")), 20.0, {}, 120.0);
        CHECK(std::abs(mean_delta(moved) - mean_delta(base)) < 3.0);
    }
    SUBCASE("user clock offset kappa shifts delta_t by kappa")
    {
        const double kappa = 7777.0;
        TimestampStream user = link.user("Alice");
        for (auto& t : user.events)
            t += static_cast<Picoseconds>(kappa);
        const auto moved = estimate_batch(link.server(), user, link.rtd("Alice"), 20.0, {}, 120.0);
        for (std::size_t k = 0; k < base.offsets.size(); ++k)
            CHECK(std::abs(moved.offsets[k].delta_t_ps - base.offsets[k].delta_t_ps - kappa) < 2.0);
    }
}

TEST_CASE("common path wander cancels in the clock difference")
{
    const auto link = run_link(400.0, 21, {UserSpec{"Alice", 10.0, 0.0, 0.0, 0.0}}, 200.0);
    const auto series = estimate_batch(link.server(), link.user("Alice"), link.rtd("Alice"), 20.0, {}, 400.0);
    const double sd_su = stddev(column(series, &BatchOffsets::tau_su_ps));
    const double sd_dt = stddev(column(series, &BatchOffsets::delta_t_ps));
    CHECK(sd_su > 50.0);
    CHECK(sd_dt < sd_su);
    CHECK(sd_dt < 20.0);
}

TEST_CASE("repeat seeds give a stable peak center")
{
    std::vector<double> centers;
    for (std::uint64_t seed = 1; seed <= 8; ++seed)
    {
        // A user without explicit detector entries gets the quiet defaults.
        const auto link = run_link(20.0, seed, {UserSpec{"Dana", 10.0, 0.0, 0.0, 0.0}});
        const auto series = estimate_batch(link.server(), link.user("Dana"), link.rtd("Dana"), 20.0, {}, 20.0);
        centers.push_back(series.offsets[0].tau_su_ps);
    }
    const double mean = std::accumulate(centers.begin(), centers.end(), 0.0) / static_cast<double>(centers.size());
    const double se = stddev(centers) / std::sqrt(static_cast<double>(centers.size()));
    CHECK(se < 2.0);
    CHECK(std::abs(mean - 48'959'000.0) < 4.0 * std::max(se, 0.5));
}

TEST_CASE("failed batches are flagged, not dropped")
{
    const auto link = run_link(100.0, 3, {UserSpec{"Alice", 10.0, 0.0, 0.0, 0.0}});
    TimestampStream user = link.user("Alice");
    // Blank the user detector during batch 2.
    std::erase_if(user.events, [](Picoseconds t) { return t >= 40'000'000'000'000 && t < 60'100'000'000'000; });
    const auto series = estimate_batch(link.server(), user, link.rtd("Alice"), 20.0, {}, 100.0);
    REQUIRE(series.offsets.size() == 5);
    CHECK(series.offsets[2].quality == BatchQuality::no_peak_su);
    CHECK(std::isnan(series.offsets[2].delta_t_ps));
    CHECK(series.valid_count() == 4);
    CHECK(series.offsets[3].valid());

    TimestampStream silent = user;
    silent.events.clear();
    CHECK_THROWS_AS(estimate_batch(link.server(), silent, link.rtd("Alice"), 20.0, {}, 100.0), NoPeak);
    CHECK_THROWS_AS(estimate_batch(link.server(), user, link.rtd("Alice"), 0.0), ConfigError);
}

TEST_CASE("pairwise offsets")
{
    const auto a = constant_series(10.0, 5);
    const auto b = constant_series(4.0, 5);
    for (const auto& x : pairwise_offset(a, a).offsets)
        CHECK(x.delta_t_ps == 0.0);
    const auto d = pairwise_offset(a, b);
    CHECK(d.user == "c-c");
    REQUIRE(d.offsets.size() == 5);
    for (const auto& x : d.offsets)
        CHECK(x.delta_t_ps == 6.0);

    // Unequal grids match the nearest batch.
    const auto coarse = constant_series(1.0, 3, 40.0);
    const auto mixed = pairwise_offset(a, coarse);
    CHECK(mixed.offsets.size() == 5);
    for (const auto& x : mixed.offsets)
        CHECK(x.delta_t_ps == 9.0);

    auto late = constant_series(1.0, 3);
    for (auto& x : late.offsets)
        x.batch_index += 100;
    CHECK_THROWS_AS(pairwise_offset(a, late), Error);

    auto flagged = b;
    flagged.offsets[1].quality = BatchQuality::no_peak_sus;
    CHECK_FALSE(pairwise_offset(a, flagged).offsets[1].valid());
}

TEST_CASE("pairwise recovery on simulated users")
{
    const auto link = run_link(200.0, 12, {UserSpec{"Alice", 10.0, 10000.0, 0.0, 0.0},
                                           UserSpec{"Bob", 25.0, 2500.0, 0.0, 0.0}});
    const auto alice = estimate_batch(link.server(), link.user("Alice"), link.rtd("Alice"), 20.0, {}, 200.0);
    const auto bob = estimate_batch(link.server(), link.user("Bob"), link.rtd("Bob"), 20.0, {}, 200.0);
    const auto diff = pairwise_offset(alice, bob);
    CHECK(std::abs(summary_stats(diff).mean_ps - 7500.0) < 15.0);
}

TEST_CASE("offsets CSV")
{
    const std::string paper_row = "batch_start_s,tau_su_ps,tau_sus_ps,delta_t_ps,quality\n"
                                  "0,-48959057,-97956545,0,ok\n"
                                  "20,-48959057,-97956545,19215.5,ok\n"
                                  "40,nan,nan,nan,no_peak_su\n";
    int mismatches = -1;
    const auto s = parse_offsets_csv(paper_row, "Alice", 0.0, &mismatches);
    CHECK(mismatches == 1);
    CHECK(s.batch_duration_s == 20.0);
    REQUIRE(s.offsets.size() == 3);
    CHECK(s.offsets[0].delta_t_ps == 19215.5);
    CHECK(s.offsets[1].delta_t_ps == 19215.5);
    CHECK_FALSE(s.offsets[2].valid());

    const auto again = parse_offsets_csv(offsets_csv(s), "Alice", 20.0, &mismatches);
    CHECK(mismatches == 0);
    CHECK(offsets_csv(again) == offsets_csv(s));

    CHECK_THROWS_AS(parse_offsets_csv("nope\n", "x"), FormatError);
    CHECK_THROWS_AS(parse_offsets_csv("batch_start_s,tau_su_ps,tau_sus_ps,delta_t_ps,quality\n0,1,2\n", "x"),
                    FormatError);
    CHECK_THROWS_AS(parse_offsets_csv("batch_start_s,tau_su_ps,tau_sus_ps,delta_t_ps,quality\n0,1,2,0,meh\n", "x"),
                    FormatError);
    CHECK_THROWS_AS(
        parse_offsets_csv("batch_start_s,tau_su_ps,tau_sus_ps,delta_t_ps,quality\n0,1,2,0,ok\n7,1,2,0,ok\n", "x",
                          20.0),
        FormatError);
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-48959057.0) == "-48959057");
}
