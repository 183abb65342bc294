// Command-line driver: simulate, verify-hj, reconstruct, compare, and
// list-scenarios over config files with CLI overrides.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "hybridhj/config.hpp"
#include "hybridhj/io.hpp"
#include "hybridhj/log.hpp"
#include "hybridhj/scenarios.hpp"

namespace {

using namespace hybridhj;

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_config_error = 2;
constexpr int exit_runtime_error = 3;

struct CliOverrides {
    std::string scenario;
    std::vector<std::string> sets;
    std::string out_dir;
    std::vector<double> h_values;
    std::vector<double> horizon_values;
};

// File values first, then --scenario, then --set in order, then the explicit
// scalar flags. Duplicate scalar flags take the last value with a warning.
void apply_overrides(RunConfig& cfg, const CliOverrides& ov) {
    if (!ov.scenario.empty()) cfg.scenario_name = ov.scenario;
    for (const std::string& assignment : ov.sets) apply_set_override(cfg, assignment);
    if (ov.h_values.size() > 1) {
        log::warn("--h given " + std::to_string(ov.h_values.size()) +
                  " times; using the last value");
    }
    if (!ov.h_values.empty()) {
        if (!(ov.h_values.back() > 0.0)) throw ConfigError("--h must be positive");
        cfg.h = ov.h_values.back();
    }
    if (ov.horizon_values.size() > 1) {
        log::warn("--horizon given " + std::to_string(ov.horizon_values.size()) +
                  " times; using the last value");
    }
    if (!ov.horizon_values.empty()) {
        if (ov.horizon_values.back() < 0.0) throw ConfigError("--horizon must be nonnegative");
        cfg.horizon = ov.horizon_values.back();
    }
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
}

scenarios::Scenario resolve_scenario(const RunConfig& cfg) {
    if (cfg.scenario_name.empty()) {
        throw ConfigError("no scenario selected; pass --scenario or set [scenario] name");
    }
    return scenarios::make_scenario(cfg.scenario_name, cfg.scenario_params);
}

PhasePoint resolve_x0(const RunConfig& cfg, const scenarios::Scenario& sc) {
    if (!cfg.x0) return sc.default_x0;
    const std::vector<double>& raw = *cfg.x0;
    const int n = sc.system.model.n;
    if (static_cast<int>(raw.size()) != 2 * n) {
        throw ConfigError("x0 must have " + std::to_string(2 * n) + " entries for scenario '" +
                          sc.name + "'");
    }
    PhasePoint x{Vec(n), Vec(n)};
    for (int i = 0; i < n; ++i) {
        x.q(i) = raw[static_cast<std::size_t>(i)];
        x.p(i) = raw[static_cast<std::size_t>(n + i)];
    }
    return x;
}

Vec resolve_lambda0(const RunConfig& cfg, const scenarios::Scenario& sc) {
    if (!cfg.lambda0) return sc.default_lambda0;
    const std::vector<double>& raw = *cfg.lambda0;
    if (static_cast<int>(raw.size()) != static_cast<int>(sc.default_lambda0.size())) {
        throw ConfigError("lambda0 must have " + std::to_string(sc.default_lambda0.size()) +
                          " entries for scenario '" + sc.name + "'");
    }
    Vec lambda(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) lambda(static_cast<Eigen::Index>(i)) = raw[i];
    return lambda;
}

SimulationPolicy resolve_policy(const RunConfig& cfg) {
    SimulationPolicy policy;
    policy.step.h = cfg.h;
    policy.step.adaptive = cfg.adaptive;
    policy.step.h_min = cfg.h_min;
    policy.tol = cfg.tol;
    return policy;
}

void ensure_out_dir(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
}

std::string out_path(const RunConfig& cfg, const std::string& file) {
    return (std::filesystem::path(cfg.out_dir) / file).string();
}

const char* termination_tag(Termination t) {
    switch (t) {
    case Termination::horizon_reached: return "horizon_reached";
    case Termination::zeno_guard: return "zeno_guard";
    case Termination::error: return "error";
    }
    return "unknown";
}

int cmd_simulate(const RunConfig& cfg, std::ostream& os) {
    const scenarios::Scenario sc = resolve_scenario(cfg);
    const PhasePoint x0 = resolve_x0(cfg, sc);
    const double horizon = cfg.horizon.value_or(sc.default_horizon);
    const HybridTrajectory traj = simulate_hybrid(sc.system, x0, horizon, resolve_policy(cfg));
    ensure_out_dir(cfg);
    io::write_file(out_path(cfg, "trajectory.csv"), io::trajectory_csv(traj, sc.coord_names));
    io::write_file(out_path(cfg, "events.json"), io::events_json(traj));
    os << "scenario: " << sc.name << "\n";
    os << "horizon: " << io::fmt17(horizon) << "\n";
    os << "termination: " << termination_tag(traj.termination);
    if (!traj.termination_detail.empty()) os << " (" << traj.termination_detail << ")";
    os << "\n";
    os << "impacts: " << traj.events.size() << "\n";
    for (const auto& [name, f] : sc.hybrid_constants) {
        const ConstantReport rep = check_hybrid_constant(f, traj);
        os << "hybrid constant " << name << ": reference " << io::fmt17(rep.reference)
           << ", max drift " << io::fmt17(rep.max_drift) << "\n";
    }
    os << "wrote " << out_path(cfg, "trajectory.csv") << ", " << out_path(cfg, "events.json")
       << "\n";
    return traj.termination == Termination::error ? exit_runtime_error : exit_ok;
}

int cmd_verify_hj(const RunConfig& cfg, std::ostream& os) {
    const scenarios::Scenario sc = resolve_scenario(cfg);
    const Tolerances& tol = cfg.tol;
    const DynamicsModel& model = sc.system.model;

    const std::vector<BasePoint> interior = sc.sample_interior(1000);
    const std::vector<ImpactSample> impacts = sc.sample_impacts(100);

    io::VerificationOutcome outcome;
    outcome.scenario = sc.name;

    const auto run_residual = [&](const Vec& lambda) {
        if (model.constraints) {
            return residual_nonholonomic(model, sc.family, 0, lambda, interior, tol);
        }
        if (model.force) {
            return residual_forced(model, sc.family, 0, lambda, interior, tol);
        }
        return residual_conservative(model, sc.family, 0, lambda, interior, tol);
    };

    bool pass = true;
    for (const Vec& lambda : sc.residual_lambdas) {
        outcome.reports.push_back(run_residual(lambda));
        std::string label = "lambda=[";
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
            if (i > 0) label += ", ";
            label += io::fmt17(lambda(i));
        }
        label += "]";
        outcome.report_labels.push_back(label);
        pass = pass && outcome.reports.back().passes();
    }

    try {
        outcome.relatedness =
            delta_relatedness_check(sc.system, sc.family, sc.transfer, impacts,
                                    sc.transfer_lambdas, tol);
        outcome.relatedness_defined = true;
        pass = pass && outcome.relatedness.passes();
    } catch (const TransferUndefined& e) {
        outcome.relatedness_defined = false;
        outcome.relatedness_error = e.what();
        pass = false;
    }

    SampleGrid grid;
    grid.impacts = impacts;
    grid.lambdas = sc.transfer_lambdas;
    for (const BasePoint& q : sc.sample_interior(100)) {
        grid.interior.push_back(RegionSample{0, q});
    }
    outcome.completeness = complete_solution_check(sc.system, sc.family, sc.transfer, grid, tol);
    pass = pass && outcome.completeness.passes();

    if (model.constraints) {
        double worst = 0.0;
        for (const ImpactSample& s : impacts) {
            for (const Vec& lambda : sc.transfer_lambdas) {
                const Covector gp = sc.family.gamma(s.from_region, s.q, lambda);
                const PhasePoint x_plus = sc.system.reset.delta(PhasePoint{s.q.q, gp});
                worst = std::max(worst, is_on_constraint(model, x_plus, tol).residual);
            }
        }
        outcome.reset_membership_defect = worst;
    }

    outcome.pass = pass;
    ensure_out_dir(cfg);
    io::write_file(out_path(cfg, "residuals.json"), io::residuals_json(outcome));

    os << "scenario: " << sc.name << "\n";
    for (std::size_t i = 0; i < outcome.reports.size(); ++i) {
        os << "residual " << outcome.report_labels[i] << ": max "
           << io::fmt17(outcome.reports[i].max_residual) << " (tol "
           << io::fmt17(outcome.reports[i].pass_tol) << ") "
           << (outcome.reports[i].passes() ? "ok" : "FAIL") << "\n";
    }
    if (outcome.relatedness_defined) {
        os << "relatedness: max " << io::fmt17(outcome.relatedness.max_residual) << " "
           << (outcome.relatedness.passes() ? "ok" : "FAIL") << "\n";
    } else {
        os << "relatedness: undefined (" << outcome.relatedness_error << ")\n";
    }
    os << "completeness: min |det| " << io::fmt17(outcome.completeness.min_abs_det) << ", transfer "
       << (outcome.completeness.transfer_defined ? "defined" : "undefined") << ", "
       << (outcome.completeness.passes() ? "ok" : "FAIL") << "\n";
    os << "wrote " << out_path(cfg, "residuals.json") << "\n";
    os << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? exit_ok : exit_check_failed;
}

int cmd_reconstruct(const RunConfig& cfg, std::ostream& os) {
    const scenarios::Scenario sc = resolve_scenario(cfg);
    const PhasePoint x0 = resolve_x0(cfg, sc);
    const Vec lambda0 = resolve_lambda0(cfg, sc);
    const double horizon = cfg.horizon.value_or(sc.default_horizon);
    const ReconstructionRun run = reconstruct(sc.system, sc.family, sc.transfer, BasePoint{x0.q},
                                              lambda0, cfg.region0, horizon, resolve_policy(cfg));
    ensure_out_dir(cfg);
    io::write_file(out_path(cfg, "base_trajectory.csv"),
                   io::base_trajectory_csv(run, sc.coord_names));
    io::write_file(out_path(cfg, "trajectory.csv"),
                   io::trajectory_csv(run.lifted, sc.coord_names));
    io::write_file(out_path(cfg, "events.json"), io::events_json(run.lifted));
    io::write_file(out_path(cfg, "transfer_log.json"), io::transfer_log_json(run));
    os << "scenario: " << sc.name << "\n";
    os << "horizon: " << io::fmt17(horizon) << "\n";
    os << "termination: " << termination_tag(run.lifted.termination);
    if (!run.lifted.termination_detail.empty()) {
        os << " (" << run.lifted.termination_detail << ")";
    }
    os << "\n";
    os << "impacts: " << run.lifted.events.size() << "\n";
    os << "wrote " << out_path(cfg, "base_trajectory.csv") << ", "
       << out_path(cfg, "trajectory.csv") << ", " << out_path(cfg, "events.json") << ", "
       << out_path(cfg, "transfer_log.json") << "\n";
    return run.lifted.termination == Termination::error ? exit_runtime_error : exit_ok;
}

int cmd_compare(const RunConfig& cfg, std::ostream& os) {
    const scenarios::Scenario sc = resolve_scenario(cfg);
    const PhasePoint x0 = resolve_x0(cfg, sc);
    const Vec lambda0 = resolve_lambda0(cfg, sc);
    const double horizon = cfg.horizon.value_or(sc.default_horizon);
    const SimulationPolicy policy = resolve_policy(cfg);
    const HybridTrajectory direct = simulate_hybrid(sc.system, x0, horizon, policy);
    const ReconstructionRun recon = reconstruct(sc.system, sc.family, sc.transfer,
                                                BasePoint{x0.q}, lambda0, cfg.region0, horizon,
                                                policy);
    const ComparisonReport rep = compare(direct, recon.lifted, cfg.tol);
    const bool pass = rep.sup_discrepancy <= cfg.tol.compare_tol && !rep.impact_count_mismatch;
    ensure_out_dir(cfg);
    io::write_file(out_path(cfg, "comparison.json"),
                   io::comparison_json(rep, cfg.tol.compare_tol));
    os << "scenario: " << sc.name << "\n";
    os << "impacts: direct " << rep.impact_count_a << ", reconstructed " << rep.impact_count_b
       << "\n";
    os << "sup discrepancy: " << io::fmt17(rep.sup_discrepancy) << " (tol "
       << io::fmt17(cfg.tol.compare_tol) << ")\n";
    os << "max impact-time diff: " << io::fmt17(rep.max_impact_time_diff) << "\n";
    os << "wrote " << out_path(cfg, "comparison.json") << "\n";
    os << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? exit_ok : exit_check_failed;
}

int cmd_list_scenarios(std::ostream& os) {
    for (const scenarios::ScenarioDescriptor& desc : scenarios::scenario_descriptors()) {
        os << desc.name << ": " << desc.doc << "\n";
        for (const scenarios::ParamSpec& p : desc.params) {
            os << "  " << p.name << " = " << io::fmt17(p.value) << "  (" << p.doc << ")\n";
        }
    }
    return exit_ok;
}

int run_one(const std::string& command, const std::string& config_path, const CliOverrides& ov,
            std::ostream& os) {
    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config_file(config_path);
        apply_overrides(cfg, ov);
        if (command == "simulate") return cmd_simulate(cfg, os);
        if (command == "verify-hj") return cmd_verify_hj(cfg, os);
        if (command == "reconstruct") return cmd_reconstruct(cfg, os);
        if (command == "compare") return cmd_compare(cfg, os);
        throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        os << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const BadParameters& e) {
        os << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const Error& e) {
        os << "runtime error: " << e.what() << "\n";
        return exit_runtime_error;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid flow simulation and stationary-family verification"};
    app.require_subcommand(1);
    // The step-size flag is spelled --h, so help must not claim the short -h.
    app.set_help_flag("--help", "print help and exit");

    CliOverrides ov;
    std::vector<std::string> config_paths;
    int jobs = 1;

    const auto add_common = [&](CLI::App* sub) {
        sub->set_help_flag("--help", "print help and exit");
        sub->add_option("--config", config_paths, "config file path (repeatable for batch mode)");
        sub->add_option("--scenario", ov.scenario, "scenario name")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--set", ov.sets, "override key=value (repeatable)");
        sub->add_option("--out", ov.out_dir, "output directory")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--h", ov.h_values, "integration step size");
        sub->add_option("--horizon", ov.horizon_values, "simulation horizon");
        sub->add_option("--jobs", jobs, "parallel workers in batch mode");
    };

    CLI::App* sim = app.add_subcommand("simulate", "integrate the hybrid flow");
    CLI::App* ver = app.add_subcommand("verify-hj", "run the verification suite on the family");
    CLI::App* rec = app.add_subcommand("reconstruct", "reconstruct the flow from the family");
    CLI::App* cmp = app.add_subcommand("compare", "compare direct and reconstructed runs");
    CLI::App* lst = app.add_subcommand("list-scenarios", "list scenarios and parameters");
    lst->set_help_flag("--help", "print help and exit");
    for (CLI::App* sub : {sim, ver, rec, cmp}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_config_error;
    }

    if (lst->parsed()) return cmd_list_scenarios(std::cout);

    const std::string command = sim->parsed()      ? "simulate"
                                : ver->parsed()    ? "verify-hj"
                                : rec->parsed()    ? "reconstruct"
                                : cmp->parsed()    ? "compare"
                                                   : "";

    if (config_paths.size() <= 1) {
        const std::string path = config_paths.empty() ? "" : config_paths.front();
        std::ostringstream os;
        const int code = run_one(command, path, ov, os);
        std::cout << os.str();
        return code;
    }

    // Batch mode: isolate outputs per config and report the worst exit code.
    if (jobs < 1) jobs = 1;
    std::mutex mu;
    std::size_t next = 0;
    int worst = exit_ok;
    const auto worker = [&]() {
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= config_paths.size()) return;
                idx = next++;
            }
            std::ostringstream os;
            os << "== config " << config_paths[idx] << " ==\n";
            const int code = run_one(command, config_paths[idx], ov, os);
            std::lock_guard<std::mutex> lock(mu);
            std::cout << os.str();
            worst = std::max(worst, code);
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(jobs, static_cast<int>(config_paths.size()));
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    return worst;
}
