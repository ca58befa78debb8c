#include "qcs/error.hpp"
#include "qcs/scenario.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace qcs;

TEST_CASE("bundled config matches the built-in preset")
{
    const auto loaded = load_scenario(std::filesystem::path(QCS_SOURCE_DIR) / "configs" / "default.json");
    CHECK(loaded == default_scenario());
}

TEST_CASE("JSON round trip")
{
    Scenario s = default_scenario();
    s.steps.push_back(StepPerturbation{"Bob.upd", 700.0, 25.0});
    s.users[1].clock_drift_ps_per_s = 0.125;
    s.users[2].path_asymmetry_ps = 3.5;
    s.analysis.bin_width_ps = 8;
    s.stream_csv = true;
    const auto text = scenario_to_json(s);
    CHECK(scenario_from_json(text) == s);
    CHECK(scenario_to_json(scenario_from_json(text)) == text);
}

TEST_CASE("explicit entries inherit from the default entry")
{
    const auto s = scenario_from_json(R"({
        "grid": {"min_index": 17, "max_index": 61},
        "pumps": {"p": 27, "q": 41},
        "users": [{"name": "Alice", "fiber_km": 5}],
        "detectors": {"default": {"efficiency": 0.5, "jitter_fwhm_ps": 40},
                      "Alice.upd": {"dark_count_rate_hz": 7}},
        "fibers": {"default": {"loss_db_per_km": 0.3}},
        "duration_s": 40, "batch_s": 20
    })");
    CHECK(s.detectors.at("Alice.upd").efficiency == 0.5);
    CHECK(s.detectors.at("Alice.upd").jitter_fwhm_ps == 40.0);
    CHECK(s.detectors.at("Alice.upd").dark_count_rate_hz == 7.0);
    CHECK(s.grid.anchor_ghz == 190000);

    const auto plan = plan_network(s.users, scenario_pumps(s), s.grid);
    const auto in = simulation_input(s, plan);
    CHECK(in.detectors.size() == required_detectors(plan).size());
    CHECK(in.detectors.at("server.signal.C33").efficiency == 0.5);
    CHECK(in.fibers.at("Alice").length_km == 5.0);
    CHECK(in.fibers.at("Alice").loss_db_per_km == 0.3);
    CHECK(in.duration_s == 40.0);
}

TEST_CASE("scenario errors")
{
    const std::string users = R"("users": [{"name": "Alice", "fiber_km": 5}])";
    const std::string grid = R"("grid": {"min_index": 17, "max_index": 61}, "pumps": {"p": 27, "q": 41})";
    CHECK_THROWS_AS(scenario_from_json("{"), ConfigError);
    CHECK_THROWS_AS(scenario_from_json("{" + users + "}"), ConfigError);
    CHECK_THROWS_AS(scenario_from_json("{" + grid + R"(, "users": []})"), ConfigError);
    CHECK_THROWS_AS(
        scenario_from_json("{" + grid + R"(, "users": [{"name": "A", "fiber_km": 1}, {"name": "A", "fiber_km": 2}]})"),
        ConfigError);
    CHECK_THROWS_AS(scenario_from_json("{" + grid + "," + users + R"(, "duration_s": 10, "batch_s": 20})"),
                    ConfigError);
    CHECK_THROWS_AS(scenario_from_json("{" + grid + "," + users + R"(, "source": {"pair_rate_hz": 0}})"),
                    ConfigError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ConfigError);

    auto s = scenario_from_json("{" + grid + "," + users + "}");
    const auto plan = plan_network(s.users, scenario_pumps(s), s.grid);
    s.detectors.clear();
    CHECK_THROWS_AS(simulation_input(s, plan), ConfigError);

    s = default_scenario();
    s.steps.push_back(StepPerturbation{"Nobody.upd", 1.0, 1.0});
    const auto plan3 = plan_network(s.users, scenario_pumps(s), s.grid);
    CHECK_THROWS_AS(simulation_input(s, plan3), ConfigError);
}
