// cmvsim: command-line front end for the contagious mean-field toolkit.
//
// Subcommands: validate, check-smallness, simulate-particles, solve-meanfield,
// converge, dominate, crosscheck-jump, risk, fp-validate.
//
// Exit codes: 0 success, 2 validation failure, 3 study/regime verdict failure,
// 4 budget exceeded (partial outputs), 64 usage error.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cmv/config.hpp"
#include "cmv/runio.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_root;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
};

struct RunContext {
    cmv::Config cfg;
    cmv::ModelSpec spec;
    std::string run_dir;
    cmv::RunManifest manifest;
    std::chrono::steady_clock::time_point start;
};

void emit(RunContext& ctx, const std::string& name, const std::string& content) {
    cmv::write_text_file(ctx.run_dir + "/" + name, content);
    ctx.manifest.artifacts.push_back(name);
}

void finish(RunContext& ctx) {
    ctx.manifest.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
    ctx.manifest.artifacts.push_back("manifest.json");
    cmv::write_text_file(ctx.run_dir + "/manifest.json", cmv::manifest_json(ctx.manifest));
    std::cout << "run directory: " << ctx.run_dir << "\n";
}

RunContext make_context(const CliOptions& opt, const std::string& subcommand) {
    RunContext ctx;
    ctx.start = std::chrono::steady_clock::now();
    std::string bytes = cmv::read_text_file(opt.config_path);
    ctx.cfg = cmv::parse_config(bytes);
    for (const auto& ov : opt.overrides) cmv::apply_override(ctx.cfg, ov);
    if (opt.seed_set) cmv::apply_override(ctx.cfg, "run.seed=" + std::to_string(opt.seed));
    cmv::apply_override(ctx.cfg, "run.jobs=" + std::to_string(opt.jobs));

    std::string root = opt.out_root;
    if (root.empty()) {
        const char* env = std::getenv("CMVSIM_OUT");
        root = env && *env ? env : "runs";
    }
    std::string hash = cmv::fnv1a_hex(bytes);
    ctx.run_dir = cmv::make_run_dir(root, subcommand, hash);
    ctx.manifest.subcommand = subcommand;
    ctx.manifest.config_path = opt.config_path;
    ctx.manifest.config_hash = "fnv1a64:" + hash;
    ctx.manifest.seed = ctx.cfg.u64("run.seed", 1);
    ctx.manifest.jobs = static_cast<int>(ctx.cfg.num("run.jobs", 1));

    ctx.spec = cmv::build_model_spec(ctx.cfg);
    emit(ctx, "effective_config.txt", cmv::serialize_config(ctx.cfg));
    return ctx;
}

int require_valid(RunContext& ctx) {
    cmv::ValidationReport rep = cmv::validate_model(ctx.spec);
    if (!rep.ok()) {
        emit(ctx, "validation_report.json", cmv::validation_report_json(rep));
        std::cerr << "model validation failed:\n" << rep.to_string();
        finish(ctx);
        return 2;
    }
    return 0;
}

int cmd_validate(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "validate");
    cmv::ValidationReport rep = cmv::validate_model(ctx.spec);
    emit(ctx, "validation_report.json", cmv::validation_report_json(rep));
    std::cout << rep.to_string();
    finish(ctx);
    return rep.ok() ? 0 : 2;
}

int cmd_check_smallness(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "check-smallness");
    int rc = require_valid(ctx);
    if (rc) return rc;
    cmv::SmallnessReport rep = cmv::check_smallness(ctx.spec);
    emit(ctx, "smallness_report.json", cmv::smallness_report_json(rep));
    std::cout << "B = " << rep.bound << (rep.passes ? " (uniqueness regime)" : " (outside uniqueness regime)") << "\n";
    finish(ctx);
    return rep.passes ? 0 : 3;
}

int cmd_simulate_particles(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "simulate-particles");
    int rc = require_valid(ctx);
    if (rc) return rc;
    cmv::ParticleRunParams pp = cmv::build_particle_params(ctx.cfg);
    cmv::ParticleRunResult run = cmv::simulate(ctx.spec, pp);
    emit(ctx, "loss.csv", cmv::particle_loss_csv(run));
    emit(ctx, "defaults.csv", cmv::default_list_csv(run));
    emit(ctx, "summary.json", cmv::particle_summary_json(run, pp));
    if (run.budget_exceeded) {
        std::cerr << "step budget exceeded; completed horizon " << run.completed_horizon << "\n";
        finish(ctx);
        return 4;
    }
    finish(ctx);
    return 0;
}

int cmd_solve_meanfield(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "solve-meanfield");
    int rc = require_valid(ctx);
    if (rc) return rc;
    cmv::SolverParams sp = cmv::build_solver_params(ctx.cfg);
    cmv::MfRunResult run = cmv::solve(ctx.spec, sp);
    emit(ctx, "loss.csv", cmv::meanfield_loss_csv(run));
    emit(ctx, "summary.json", cmv::meanfield_summary_json(run, sp));
    for (std::size_t i = 0; i < run.snapshots.size(); ++i)
        emit(ctx, "snapshot_" + std::to_string(i) + ".csv",
             cmv::snapshot_csv(sp.grid, run.snapshots[i].second));
    finish(ctx);
    return 0;
}

int cmd_converge(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "converge");
    int rc = require_valid(ctx);
    if (rc) return rc;
    cmv::ConvergenceReport rep = cmv::convergence_study(ctx.spec, cmv::build_convergence_params(ctx.cfg));
    emit(ctx, "convergence.json", cmv::convergence_report_json(rep));
    emit(ctx, "convergence.csv", cmv::convergence_report_csv(rep));
    std::cout << "verdict: " << rep.verdict << "\n";
    finish(ctx);
    return rep.pass ? 0 : 3;
}

int cmd_dominate(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "dominate");
    int rc = require_valid(ctx);
    if (rc) return rc;
    cmv::DominationReport rep = cmv::domination_study(ctx.spec, cmv::build_domination_params(ctx.cfg));
    emit(ctx, "domination.json", cmv::domination_report_json(rep));
    emit(ctx, "domination.csv", cmv::domination_report_csv(rep));
    std::cout << "verdict: " << rep.verdict << "\n";
    finish(ctx);
    return rep.pass ? 0 : 3;
}

int cmd_crosscheck(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "crosscheck-jump");
    int rc = require_valid(ctx);
    if (rc) return rc;
    cmv::CrosscheckReport rep = cmv::physical_jump_crosscheck(ctx.spec, cmv::build_solver_params(ctx.cfg));
    emit(ctx, "crosscheck.json", cmv::crosscheck_report_json(rep));
    std::cout << "verdict: " << rep.verdict << "\n";
    finish(ctx);
    return (!rep.applicable || rep.pass) ? 0 : 3;
}

int cmd_risk(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "risk");
    int rc = require_valid(ctx);
    if (rc) return rc;
    cmv::RiskReport rep = cmv::risk_study(ctx.spec, cmv::build_risk_params(ctx.cfg));
    emit(ctx, "risk.json", cmv::risk_report_json(rep));
    emit(ctx, "risk_scenarios.csv", cmv::risk_report_csv(rep));
    finish(ctx);
    return rep.ok ? 0 : 3;
}

int cmd_fp_validate(const CliOptions& opt) {
    RunContext ctx = make_context(opt, "fp-validate");
    cmv::FpValidationReport rep = cmv::fp_validation(cmv::build_fp_params(ctx.cfg));
    emit(ctx, "fp_validation.json", cmv::fp_report_json(rep));
    emit(ctx, "fp_validation.csv", cmv::fp_report_csv(rep));
    std::cout << "max abs error: " << rep.max_abs_err << "\n";
    finish(ctx);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"contagious mean-field simulation toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global options may appear after the subcommand

    CliOptions opt;
    app.add_option("--config", opt.config_path, "configuration file")->required();
    app.add_option("--seed", opt.seed, "seed override")->each([&](const std::string&) { opt.seed_set = true; });
    app.add_option("--jobs", opt.jobs, "worker thread cap")->check(CLI::PositiveNumber);
    app.add_option("--out", opt.out_root, "output root (default $CMVSIM_OUT or ./runs)");
    app.add_option("--set", opt.overrides, "dotted config override key=value (repeatable)");

    auto* sub_validate = app.add_subcommand("validate", "check every model invariant");
    auto* sub_small = app.add_subcommand("check-smallness", "evaluate the uniqueness-regime bound");
    auto* sub_particles = app.add_subcommand("simulate-particles", "run the n-particle system");
    auto* sub_meanfield = app.add_subcommand("solve-meanfield", "run the density evolution");
    auto* sub_converge = app.add_subcommand("converge", "particle vs mean-field convergence study");
    auto* sub_dominate = app.add_subcommand("dominate", "eps-removal domination study");
    auto* sub_crosscheck = app.add_subcommand("crosscheck-jump", "homogeneous physical-jump cross-check");
    auto* sub_risk = app.add_subcommand("risk", "conditional VaR / expected shortfall study");
    auto* sub_fp = app.add_subcommand("fp-validate", "first-passage closed-form validation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 64;
    }

    try {
        if (sub_validate->parsed()) return cmd_validate(opt);
        if (sub_small->parsed()) return cmd_check_smallness(opt);
        if (sub_particles->parsed()) return cmd_simulate_particles(opt);
        if (sub_meanfield->parsed()) return cmd_solve_meanfield(opt);
        if (sub_converge->parsed()) return cmd_converge(opt);
        if (sub_dominate->parsed()) return cmd_dominate(opt);
        if (sub_crosscheck->parsed()) return cmd_crosscheck(opt);
        if (sub_risk->parsed()) return cmd_risk(opt);
        if (sub_fp->parsed()) return cmd_fp_validate(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 64;
}
