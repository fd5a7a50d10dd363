#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cmv/density.hpp"
#include "cmv/particle.hpp"

namespace cmv {

/// Runs fn(0..count-1) on up to `jobs` worker threads. Tasks must write
/// only to their own result slots; the schedule never affects output.
void parallel_for_index(int jobs, int count, const std::function<void(int)>& fn);

/// Deterministic per-task seed derivation.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// ---------------------------------------------------------------------------
// particle vs mean-field convergence
// ---------------------------------------------------------------------------

struct ConvergenceParams {
    std::vector<int> n_ladder;
    int seeds = 20;
    std::uint64_t master_seed = 1;
    double particle_dt = 2e-3;
    bool bridge = true;
    AssignmentMode mode = AssignmentMode::iid;
    SolverParams solver; // mean-field reference configuration
    int output_points = 50;
    double threshold = 0.05;
    int jobs = 1;
};

struct ConvergenceReport {
    std::vector<int> n_ladder;
    std::vector<double> median_err;
    std::vector<std::vector<double>> per_seed_err; // [ladder index][seed]
    std::vector<double> comparison_times;
    std::vector<double> excluded_times; // within one dt of a flagged jump
    bool valid = true;
    bool pass = false;
    std::string verdict;
};

/// For each ladder size and seed, the sup over the output-time grid of
/// max_l |L^n_l(t) - L_l(t)| against a single mean-field reference run;
/// the report passes when the per-n medians are non-increasing and the
/// final median is below the threshold.
ConvergenceReport convergence_study(const ModelSpec& spec, const ConvergenceParams& params);

// ---------------------------------------------------------------------------
// eps-removal domination
// ---------------------------------------------------------------------------

struct DominationParams {
    std::vector<double> eps_ladder;
    SolverParams solver;
    int output_points = 50;
    double envelope_threshold = 0.05;
    int jobs = 1;
};

struct DominationReport {
    std::vector<double> eps_ladder;
    std::vector<double> envelope;   // max_t,v (Lv_eps - Lv) per ladder entry
    double t0 = 0.0;                // comparison window end (first jump or T)
    bool domination_ok = true;
    double worst_gap = 0.0;         // most negative Lv_eps - Lv seen
    double first_violation_eps = 0.0;
    double first_violation_t = 0.0;
    int first_violation_atom = -1;
    bool env_monotone = true;
    bool pass = false;
    std::string verdict;
};

/// Checks that each eps-system's per-atom total loss dominates the base
/// run before the first jump, and that the domination envelope shrinks
/// along the ladder. The comparison tolerance is two grid cells of mass.
DominationReport domination_study(const ModelSpec& spec, const DominationParams& params);

// ---------------------------------------------------------------------------
// eps-ladder jump-size diagnostic
// ---------------------------------------------------------------------------

struct JumpLadderReport {
    std::vector<double> eps;  // eps0, eps0/2, eps0/4, ...
    std::vector<double> jump; // summed increment of the first flagged jump per level
    double extrapolated = 0.0;
    bool all_jumped = false;
};

/// Runs the eps-amended system down a halving ladder and Richardson-
/// extrapolates the first flagged jump size to eps -> 0. Diagnostic only:
/// the production cascade seeds with the step's diffusion increment.
JumpLadderReport eps_jump_diagnostic(const ModelSpec& spec, const SolverParams& solver,
                                     double eps0, int levels);

// ---------------------------------------------------------------------------
// homogeneous physical-jump cross-check
// ---------------------------------------------------------------------------

struct CrosscheckReport {
    bool applicable = false; // a flagged jump occurred
    double t_jump = 0.0;
    double cascade_jump_mass = 0.0; // total step increment at the flagged jump
    double bisection_point = 0.0;   // D = inf{z > 0 : alpha nu([0,z]) < z}
    double direct_jump_mass = 0.0;  // nu([0, D]) on the left-limit density
    double gap = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string verdict;
};

/// Requires a single-atom spec with k = 1, u = 1, identity loss transform
/// and constant g = 1. At the first flagged jump, compares the cascade jump
/// with the direct computation D = inf{z > 0 : alpha nu([0,z]) < z} by
/// cell scan plus bisection on the pre-jump density.
CrosscheckReport physical_jump_crosscheck(const ModelSpec& spec, const SolverParams& solver);

// ---------------------------------------------------------------------------
// conditional risk measures over common-noise scenarios
// ---------------------------------------------------------------------------

struct RiskParams {
    int scenarios = 200;
    double q = 0.9;              // conditioning quantile on the core loss increment
    double window_frac = 0.25;   // conditioning window [0, window_frac * T]
    std::vector<double> alphas = {0.95};
    std::vector<std::string> core_labels = {"core"};
    SolverParams solver;
    std::uint64_t master_seed = 1;
    int jobs = 1;
};

struct RiskRow {
    double alpha = 0.0;
    double var_uncond = 0.0, es_uncond = 0.0;
    double var_cond = 0.0, es_cond = 0.0;
};

struct RiskReport {
    int scenarios = 0;
    double q = 0.0;
    double window_end = 0.0;
    int conditional_size = 0;
    std::vector<double> core_increment;   // per scenario
    std::vector<double> periphery_loss;   // per scenario
    std::vector<RiskRow> rows;
    bool ok = true; // ES >= VaR per row
};

/// Runs independent common-noise scenarios of the mean-field solver and
/// reports VaR/ES of the periphery terminal default mass, unconditionally
/// and conditional on the core loss increment over the window landing in
/// its top (1-q) tail across scenarios.
RiskReport risk_study(const ModelSpec& spec, const RiskParams& params);

// ---------------------------------------------------------------------------
// first-passage closed-form validation
// ---------------------------------------------------------------------------

struct FpValidationParams {
    double h = 2e-3;
    double dt = 1e-4;
    double x_max = 3.5;
    double x0 = 1.0;
    double window = 8e-3; // width of the narrow uniform start
    double sigma = 1.0;
    std::vector<double> times = {0.05, 0.10, 0.15, 0.20, 0.25};
    KernelMode kernel = KernelMode::images;
};

struct FpValidationReport {
    std::vector<double> times;
    std::vector<double> absorbed;
    std::vector<double> exact;
    double max_abs_err = 0.0;
};

/// No-feedback solver absorbed mass against the reflection-principle
/// closed form, at the requested times.
FpValidationReport fp_validation(const FpValidationParams& params);

} // namespace cmv
