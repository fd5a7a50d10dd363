#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cmv/model.hpp"

namespace cmv {

enum class AssignmentMode { iid, proportional };

/// State of the n-particle system. Aggregate losses are recomputed from the
/// default times after every cascade so they stay exactly consistent.
struct ParticleState {
    double t = 0.0;
    int k = 0;
    std::vector<double> x;
    std::vector<char> alive;
    std::vector<double> tau;          // +inf while alive
    std::vector<int> atom;
    std::vector<double> feedback_int; // I_i, accumulated g dL felt by i
    std::vector<double> loss;         // L_l = (1/n) sum_j u_l^j 1{tau_j <= t}
    std::vector<double> ubar, vbar;   // leave-one-out means, n*k row-major
    std::vector<Rng> rng;             // per particle
    Rng common;                       // B0 stream

    int n() const { return static_cast<int>(x.size()); }
    double ubar_at(int i, int l) const { return ubar[static_cast<std::size_t>(i) * k + l]; }
    double vbar_at(int i, int l) const { return vbar[static_cast<std::size_t>(i) * k + l]; }
    /// g for particle i at time t including the empirical-mean hook.
    double g_particle(const ModelSpec& spec, int i, double t) const;
    void recompute_loss(const ModelSpec& spec);
};

/// Builds the initial state: atom assignments i.i.d. from the type
/// distribution or by largest-remainder proportional counts, positions by
/// inverse-CDF sampling, leave-one-out means cached.
ParticleState init_particles(const ModelSpec& spec, int n, std::uint64_t seed, AssignmentMode mode);

/// One Euler step for every alive particle:
///   x += b dt + sigma (rho dB0 + sqrt(1-rho^2) dB_i).
/// Returns indices that reached the origin, either by endpoint crossing or
/// (when bridge is on) by the in-step Brownian bridge test with crossing
/// probability exp(-2 x x' / (sigma^2 dt)). Bridge crossers are placed at 0.
std::vector<int> diffusion_step(ParticleState& state, const ModelSpec& spec,
                                double dt, double dB0, bool bridge);

/// Plain Euler update, exposed for direct checks.
inline double euler_update(double x, double b, double sigma, double dt, double dw) {
    return x + b * dt + sigma * dw;
}

inline double bridge_crossing_prob(double x0, double x1, double sigma, double dt) {
    return std::exp(-2.0 * std::max(x0, 0.0) * std::max(x1, 0.0) / (sigma * sigma * dt));
}

struct CascadeOutcome {
    std::vector<int> defaulted;    // D_t, ascending
    std::vector<double> dl;        // jump increments (1/n) sum_{j in D} u^j, size k
    std::vector<double> dlv_atom;  // per-atom overall jump sum_l v_l dl_l
    int rounds = 0;
    bool converged = true;
};

/// Resolves simultaneous defaults by the iterated clearing cascade: the
/// crossers seed round zero; each round recomputes the candidate jump from
/// the current defaulted set and adds every alive particle pushed into
/// [0, Theta_j]. The loop is monotone and stops within n rounds, returning
/// the smallest consistent defaulted set (greatest clearing positions).
/// Final feedback shifts exclude each particle's own contribution.
CascadeOutcome resolve_cascade_discrete(ParticleState& state, const ModelSpec& spec,
                                        const std::vector<int>& crossers);

struct ParticleRunParams {
    int n = 100;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    bool bridge = true;
    AssignmentMode mode = AssignmentMode::iid;
    std::uint64_t budget_steps = 4'000'000'000ULL; // n * step count cap
    const std::vector<double>* b0_increments = nullptr;
};

struct DefaultRecord {
    int index = 0;
    int atom = 0;
    double tau = 0.0;
};

struct ParticleRunResult {
    std::vector<double> times;
    std::vector<std::vector<double>> loss; // per record, k entries
    std::vector<int> defaults_cum;
    std::vector<int> cascade_rounds;
    std::vector<DefaultRecord> defaults;
    bool budget_exceeded = false;
    double completed_horizon = 0.0;

    double loss_at(double t, int l) const;
};

/// Time-stepped simulation: diffusion, cascade, record. Deterministic for a
/// fixed (seed, n, dt) configuration regardless of worker count. When the
/// step budget would be exceeded the run stops early with the completed
/// horizon reported.
ParticleRunResult simulate(const ModelSpec& spec, const ParticleRunParams& params);

} // namespace cmv
