// qcs: plan, simulate, analyze and report on a round-trip entanglement
// clock-synchronization network.

#include "qcs/error.hpp"
#include "qcs/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

namespace {

int exit_code(const qcs::Error& e)
{
    if (dynamic_cast<const qcs::ConfigError*>(&e))
        return 2;
    if (dynamic_cast<const qcs::FormatError*>(&e))
        return 3;
    if (dynamic_cast<const qcs::InsufficientGrid*>(&e) || dynamic_cast<const qcs::OutOfGrid*>(&e) ||
        dynamic_cast<const qcs::PumpCollision*>(&e))
        return 4;
    if (dynamic_cast<const qcs::NoPeak*>(&e))
        return 5;
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Round-trip entanglement clock synchronization: plan, simulate, analyze, report"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> batch_seconds;
    bool quiet = false;

    app.add_option("--config", config, "Scenario JSON (built-in default scenario when omitted)");
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--seed", seed, "Override the scenario seed");
    app.add_option("--batch-seconds", batch_seconds, "Override the analysis batch length");
    app.add_flag("-q,--quiet", quiet, "Suppress progress output");

    auto* plan = app.add_subcommand("plan", "Allocate channels and write plan.json");
    auto* simulate = app.add_subcommand("simulate", "Generate detector timestamp files");
    auto* analyze = app.add_subcommand("analyze", "Fit coincidence peaks and write per-batch offsets");
    auto* report = app.add_subcommand("report", "Summary statistics, TDEV and pairwise offsets");
    auto* all = app.add_subcommand("all", "plan, simulate, analyze and report");
    for (auto* sub : {plan, simulate, analyze, report, all})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    const std::string stage = app.get_subcommands().front()->get_name();
    try
    {
        qcs::Scenario scenario = config.empty() ? qcs::default_scenario() : qcs::load_scenario(config);
        if (seed)
            scenario.seed = *seed;
        if (batch_seconds)
        {
            scenario.batch_s = *batch_seconds;
            qcs::validate(scenario);
        }

        qcs::StageOptions opt;
        opt.out_dir = out;
        opt.log = quiet ? nullptr : &std::cout;

        if (stage == "plan")
            qcs::run_plan(scenario, opt);
        else if (stage == "simulate")
            qcs::run_simulate(scenario, opt);
        else if (stage == "analyze")
            qcs::run_analyze(scenario, opt);
        else if (stage == "report")
            qcs::run_report(config.empty() && !batch_seconds ? nullptr : &scenario, opt);
        else
            qcs::run_all(scenario, opt);
    }
    catch (const qcs::Error& e)
    {
        std::cerr << nlohmann::json{{"error", e.what()}, {"stage", stage}}.dump() << '\n';
        return exit_code(e);
    }
    catch (const std::exception& e)
    {
        std::cerr << nlohmann::json{{"error", e.what()}, {"stage", stage}}.dump() << '\n';
        return 1;
    }
    return 0;
}
