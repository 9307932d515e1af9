// Command-line driver: verify gain certificates, co-simulate plant and
// observer, and re-check error envelopes against stored trajectories.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lureobs/runner.hpp"

namespace {

struct SimulateFlags {
    std::string scenario;
    std::string out_dir = "out";
    double dt = 0.0;
    double t_end = 0.0;
    std::string scheme;
    double sigma = 0.0;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-mode observer toolkit for set-valued Lur'e systems"};
    app.require_subcommand(1);

    std::string verify_scenario_arg;
    auto* verify_cmd = app.add_subcommand("verify", "Evaluate the gain certificate (no simulation)");
    verify_cmd->add_option("scenario", verify_scenario_arg, "builtin name or scenario JSON path")
        ->required();

    SimulateFlags sim;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "Co-simulate, check the envelopes, write CSVs and a report");
    simulate_cmd->add_option("scenario", sim.scenario, "builtin name or scenario JSON path")->required();
    simulate_cmd->add_option("--out", sim.out_dir, "output directory (default: out)");
    auto* dt_opt = simulate_cmd->add_option("--dt", sim.dt, "override the time step");
    auto* tend_opt = simulate_cmd->add_option("--t-end", sim.t_end, "override the horizon");
    auto* scheme_opt = simulate_cmd->add_option(
        "--scheme", sim.scheme, "explicit-rk4-regularized | semi-implicit-euler-resolvent");
    auto* sigma_opt =
        simulate_cmd->add_option("--sigma", sim.sigma, "override both boundary layers");

    std::string bounds_scenario_arg, bounds_traj;
    auto* bounds_cmd =
        app.add_subcommand("bounds", "Re-check the envelopes against a stored trajectory CSV");
    bounds_cmd->add_option("scenario", bounds_scenario_arg, "builtin name or scenario JSON path")
        ->required();
    bounds_cmd->add_option("--traj", bounds_traj, "trajectory CSV written by simulate")->required();

    std::string runall_out = "out";
    auto* runall_cmd = app.add_subcommand("run-all", "Run every builtin scenario concurrently");
    runall_cmd->add_option("--out", runall_out, "output directory (default: out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : lureobs::kExitUsage;
    }

    try {
        if (*verify_cmd) {
            const auto cfg = lureobs::load_scenario(verify_scenario_arg);
            const auto outcome = lureobs::verify_scenario(cfg);
            std::cout << outcome.report;
            return outcome.exit_code;
        }
        if (*simulate_cmd) {
            auto cfg = lureobs::load_scenario(sim.scenario);
            if (dt_opt->count()) cfg.scheme.dt = sim.dt;
            if (tend_opt->count()) cfg.scheme.t_end = sim.t_end;
            if (scheme_opt->count()) {
                if (sim.scheme != "explicit-rk4-regularized" &&
                    sim.scheme != "semi-implicit-euler-resolvent")
                    throw lureobs::ScenarioParseError("--scheme: unknown method '" + sim.scheme + "'");
                cfg.scheme.method = sim.scheme;
            }
            if (sigma_opt->count()) {
                cfg.scheme.sigma_plant = sim.sigma;
                cfg.observer.sigma_sign = sim.sigma;
            }
            const auto outcome = lureobs::run_scenario(cfg, sim.out_dir);
            std::cout << outcome.report;
            return outcome.exit_code;
        }
        if (*bounds_cmd) {
            const auto cfg = lureobs::load_scenario(bounds_scenario_arg);
            const auto outcome = lureobs::bounds_scenario(cfg, bounds_traj);
            std::cout << outcome.report;
            return outcome.exit_code;
        }
        if (*runall_cmd) {
            std::string summary;
            const int code = lureobs::run_all(runall_out, summary);
            std::cout << summary;
            return code;
        }
    } catch (const lureobs::ScenarioParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lureobs::kExitUsage;
    } catch (const lureobs::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lureobs::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lureobs::kExitUsage;
    }
    return lureobs::kExitUsage;
}
