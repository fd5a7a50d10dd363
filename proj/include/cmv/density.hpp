#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cmv/model.hpp"

namespace cmv {

/// Spatial transition kernel. `truncate` is the generic splitting scheme
/// (drift shift, Gaussian convolution, zero out x <= 0). `images` uses the
/// exact absorbed-transition kernel for coefficients frozen within a step,
/// which removes the first-order time bias at the boundary.
enum class KernelMode { truncate, images };

enum class NoiseMode { none, seeded, path };

struct CascadeParams {
    double tol = 1e-12;
    int m_max = 0; // 0 -> 10 * atoms * ceil(log(1/tol))
    double jump_ratio = 50.0;
    double jump_mass = 0.05;
};

struct SolverParams {
    Grid grid;
    double dt = 1e-3;
    KernelMode kernel = KernelMode::truncate;
    CascadeParams cascade;
    bool strict = false; // halt at the first flagged jump / explosion signal
    NoiseMode noise = NoiseMode::none;
    std::uint64_t seed = 0;
    const std::vector<double>* b0_increments = nullptr; // per-step dB0 (NoiseMode::path)
    std::vector<double> snapshot_times;
};

struct JumpRecord {
    double t = 0.0;
    std::vector<double> dl;
    int rounds = 0;
    double amplification = 1.0;
    bool flagged = false;
    bool exploded = false;
};

/// Per-type sub-probability densities on the grid plus the running
/// contagion processes and per-type feedback accumulators.
struct DensityField {
    Grid grid;
    int k = 0;
    double t = 0.0;
    std::vector<std::vector<double>> rows;      // per atom, cell-averaged density
    std::vector<double> loss;                   // L_l, size k
    std::vector<double> feedback_int;           // I_i = integral of g dL_v, per atom
    std::vector<double> absorbed_diffusion;     // cumulative, per atom
    std::vector<double> absorbed_feedback;      // cumulative, per atom
    std::vector<JumpRecord> jump_log;
    double initial_sup = 0.0;
    double sup_slack = 0.0; // max observed excess over the initial sup-norm

    double mass(int atom) const;
    void note_sup();
};

DensityField make_field(const ModelSpec& spec, const Grid& grid);

/// One transport step: per atom, shift by b*dt + rho*sigma*dB0, convolve
/// with the Gaussian of variance (1-rho^2) sigma^2 dt (kernel truncated at
/// 8 standard deviations), and absorb everything at x <= 0. Returns the
/// absorbed mass per atom. Rejects steps whose kernel would be wider than
/// a quarter of the domain.
std::vector<double> transition_step(DensityField& field, const ModelSpec& spec,
                                    double dt, double dB0, KernelMode mode);

/// Cascade response map: for per-atom exposure inputs f(v_i) >= 0, each
/// type's threshold is Theta_i = F(I_i + g_i(t) f_i) - F(I_i) and the
/// returned vector is Xi_l = sum_i p_i u_li * (row mass on [0, Theta_i]),
/// partial cells by linear interpolation.
std::vector<double> xi(const DensityField& field, const ModelSpec& spec,
                       double t, const std::vector<double>& f_per_atom);

struct MfCascadeResult {
    std::vector<double> dl;               // converged increments (seed included)
    std::vector<double> per_atom_absorbed;
    int rounds = 0;
    double amplification = 1.0;
    bool flagged = false;
    bool converged = true;
    bool exploded = false;
    double residual = 0.0; // max_l |seed_l + Xi_l(f(dl)) - dl_l|
};

/// Iterates delta^(m) = seed + Xi(t, f(delta^(m-1))) from delta^(0) = seed
/// until the sup-change drops below tol. Iterates are monotone
/// non-decreasing; hitting m_max with non-contracting increments raises the
/// explosion signal. The jump is flagged when the seed amplification
/// exceeds jump_ratio or the summed increment exceeds jump_mass.
MfCascadeResult resolve_cascade_meanfield(const DensityField& field, const ModelSpec& spec,
                                          double t, const std::vector<double>& seed,
                                          const CascadeParams& params);

struct FeedbackOutcome {
    std::vector<double> absorbed; // per atom
    double residual = 0.0;        // |weighted absorbed - Xi(f)| consistency gap
};

/// Shifts every row left by its Theta_i(dl), absorbs the mass pushed
/// through the origin and advances the feedback accumulators (left-point
/// rule). dl must come from a converged cascade at the current time.
FeedbackOutcome apply_feedback(DensityField& field, const ModelSpec& spec,
                               const std::vector<double>& dl);

struct MfRunResult {
    std::vector<double> times;
    std::vector<std::vector<double>> loss;           // per record, k entries
    std::vector<char> jump_flag;
    std::vector<int> rounds;
    std::vector<std::vector<double>> atom_defaulted; // per record, per atom 1 - mass
    std::vector<JumpRecord> jump_log;
    std::optional<double> t_star;
    bool halted = false;
    double sup_slack = 0.0;
    double mass_residual = 0.0;
    double feedback_residual = 0.0; // worst apply_feedback consistency gap
    std::vector<std::pair<double, std::vector<std::vector<double>>>> snapshots;

    double loss_at(double t, int l) const;
    double atom_defaulted_at(double t, int atom) const;
    int k() const { return loss.empty() ? 0 : static_cast<int>(loss.front().size()); }
};

/// Full mean-field evolution: transition, cascade, feedback per step.
/// On a flagged jump or explosion signal the first such time is recorded
/// as the T* estimate; strict mode halts there, otherwise the converged
/// (or capped) jump is applied and the run continues.
MfRunResult solve(const ModelSpec& spec, const SolverParams& params);

/// Auxiliary system: removes the initial mass on (0, eps), counts it as a
/// loss at time zero, lowers the surviving profile by eps/4 + F(g(0)
/// lambda_v) and starts the feedback accumulators at g(0) lambda_v.
MfRunResult solve_eps_approx(const ModelSpec& spec, double eps, const SolverParams& params);

struct EnvelopeReport {
    double k_fit = 0.0;
    int violations = 0;
    bool explosion_flag = false;
};

/// Fits the envelope d/ds L_l(s) <= K s^{-(1-beta)/2} by central
/// differences over a jump-free loss series. violations counts samples
/// exceeding k_limit when k_limit > 0. The explosion flag is a heuristic
/// based on the growth of the running L2 norm of the derivative.
EnvelopeReport regularity_envelope(const std::vector<double>& times,
                                   const std::vector<std::vector<double>>& loss,
                                   const std::vector<char>& jump_flag,
                                   double beta, double k_limit = 0.0);

} // namespace cmv
