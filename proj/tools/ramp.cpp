// ramp: offline design, closed-loop simulation and tube comparison.

#include <CLI11.hpp>

#include "ramp/cli.hpp"

int main(int argc, char** argv) {
    ramp::cli::configure_logging();
    CLI::App app{"Robust adaptive tube MPC toolkit"};
    app.require_subcommand(1);

    std::string scenario, constants, out, csv, jsonl, summary, svg, report, stages;
    std::uint64_t seed = 0;
    bool no_adapt = false;
    int T = 500;

    auto* off = app.add_subcommand("offline", "Synthesize (P, K), tube constants and terminal sets");
    off->add_option("scenario", scenario, "Scenario JSON")->required();
    off->add_option("-o,--out", out, "Constants JSON to write");

    auto* sim = app.add_subcommand("simulate", "Run the closed loop");
    sim->add_option("scenario", scenario, "Scenario JSON")->required();
    sim->add_option("constants", constants, "Constants JSON from `offline`")->required();
    sim->add_flag("--adapt", "Adaptive mode (default)");
    sim->add_flag("--no-adapt", no_adapt, "Freeze the parameter set (robust baseline)");
    auto* seed_opt = sim->add_option("--seed", seed, "Disturbance seed");
    sim->add_option("--csv", csv, "Trace CSV");
    sim->add_option("--jsonl", jsonl, "Per-step JSON lines");
    sim->add_option("--summary", summary, "Summary JSON");
    sim->add_option("--svg", svg, "Prefix for SVG plots");

    auto* cmp = app.add_subcommand("compare-tubes", "Tube sizes of the propagation rules along the t = 0 trajectory");
    cmp->add_option("scenario", scenario, "Scenario JSON")->required();
    cmp->add_option("constants", constants, "Constants JSON from `offline`")->required();
    cmp->add_option("--report", report, "Report JSON");
    cmp->add_option("--stages", stages, "Tube size per stage CSV");

    auto* demo = app.add_subcommand("estimate-demo", "Set-membership and LMS estimation on random inputs");
    demo->add_option("scenario", scenario, "Scenario JSON")->required();
    demo->add_option("-T,--steps", T, "Number of steps");
    demo->add_option("--seed", seed, "Seed");
    demo->add_option("--csv", csv, "Estimate CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ramp::cli::schema_error;
    }

    if (*off) return ramp::cli::cmd_offline(scenario, out);
    if (*sim) {
        ramp::cli::SimulateOptions opt;
        opt.adapt = !no_adapt;
        if (*seed_opt) opt.seed = seed;
        opt.csv = csv;
        opt.jsonl = jsonl;
        opt.summary = summary;
        opt.svg_prefix = svg;
        return ramp::cli::cmd_simulate(scenario, constants, opt);
    }
    if (*cmp) return ramp::cli::cmd_compare_tubes(scenario, constants, report, stages);
    if (*demo) return ramp::cli::cmd_estimate_demo(scenario, T, seed, csv);
    return ramp::cli::schema_error;
}
