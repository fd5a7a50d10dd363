#include "cmv/particle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cmv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

double ParticleState::g_particle(const ModelSpec& spec, int i, double t) const {
    double base = spec.coef.g[atom[i]].at(t);
    if (spec.coef.hook.c == 0.0) return base;
    std::vector<double> ub(k), vb(k);
    for (int l = 0; l < k; ++l) { ub[l] = ubar_at(i, l); vb[l] = vbar_at(i, l); }
    return base * spec.coef.hook.at(ub, vb);
}

void ParticleState::recompute_loss(const ModelSpec& spec) {
    std::fill(loss.begin(), loss.end(), 0.0);
    const int nn = n();
    for (int j = 0; j < nn; ++j) {
        if (tau[j] <= t) {
            const auto& u = spec.dist.atoms[atom[j]].u;
            for (int l = 0; l < k; ++l) loss[l] += u[l];
        }
    }
    for (int l = 0; l < k; ++l) loss[l] /= nn;
}

ParticleState init_particles(const ModelSpec& spec, int n, std::uint64_t seed, AssignmentMode mode) {
    if (n < 1) throw std::invalid_argument("particle count must be at least 1");
    const int na = spec.n_atoms();
    const int k = spec.k();

    ParticleState st;
    st.t = 0.0;
    st.k = k;
    st.x.resize(n);
    st.alive.assign(n, 1);
    st.tau.assign(n, kInf);
    st.atom.resize(n);
    st.feedback_int.assign(n, 0.0);
    st.loss.assign(k, 0.0);
    st.common = Rng(seed, 0);
    st.rng.reserve(n);
    for (int i = 0; i < n; ++i) st.rng.emplace_back(seed, 16 + static_cast<std::uint64_t>(i));

    if (mode == AssignmentMode::proportional) {
        if (n < na) throw std::invalid_argument("proportional assignment needs n >= number of atoms");
        std::vector<int> count(na, 0);
        std::vector<std::pair<double, int>> rem(na);
        int assigned = 0;
        for (int a = 0; a < na; ++a) {
            double exact = n * spec.dist.atoms[a].p;
            count[a] = static_cast<int>(exact);
            rem[a] = {exact - count[a], a};
            assigned += count[a];
        }
        std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (int r = 0; assigned < n; ++r, ++assigned) ++count[rem[r % na].second];
        int i = 0;
        for (int a = 0; a < na; ++a)
            for (int c = 0; c < count[a]; ++c) st.atom[i++] = a;
    } else {
        Rng assign(seed, 1);
        std::vector<double> cum(na, 0.0);
        double acc = 0.0;
        for (int a = 0; a < na; ++a) { acc += spec.dist.atoms[a].p; cum[a] = acc; }
        for (int i = 0; i < n; ++i) {
            double q = assign.uniform() * acc;
            st.atom[i] = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), q) - cum.begin());
            if (st.atom[i] >= na) st.atom[i] = na - 1;
        }
    }

    for (int i = 0; i < n; ++i)
        st.x[i] = sample_initial(spec.initial[st.atom[i]], st.rng[i]);

    // leave-one-out empirical means: (sum - own) / n
    std::vector<double> su(k, 0.0), sv(k, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& a = spec.dist.atoms[st.atom[i]];
        for (int l = 0; l < k; ++l) { su[l] += a.u[l]; sv[l] += a.v[l]; }
    }
    st.ubar.resize(static_cast<std::size_t>(n) * k);
    st.vbar.resize(static_cast<std::size_t>(n) * k);
    for (int i = 0; i < n; ++i) {
        const auto& a = spec.dist.atoms[st.atom[i]];
        for (int l = 0; l < k; ++l) {
            st.ubar[static_cast<std::size_t>(i) * k + l] = (su[l] - a.u[l]) / n;
            st.vbar[static_cast<std::size_t>(i) * k + l] = (sv[l] - a.v[l]) / n;
        }
    }
    return st;
}

std::vector<int> diffusion_step(ParticleState& state, const ModelSpec& spec,
                                double dt, double dB0, bool bridge) {
    if (dt <= 0.0) throw std::invalid_argument("diffusion step needs dt > 0");
    const double rho = spec.coef.rho;
    const double root = std::sqrt(1.0 - rho * rho);
    const double sqdt = std::sqrt(dt);
    const double t = state.t;
    std::vector<int> crossers;

    for (int i = 0; i < state.n(); ++i) {
        if (!state.alive[i]) continue;
        int a = state.atom[i];
        double b = spec.coef.drift[a].at(t);
        double sigma = spec.coef.vol[a].at(t);
        double dw = rho * dB0 + root * sqdt * state.rng[i].normal();
        double x0 = state.x[i];
        double x1 = euler_update(x0, b, sigma, dt, dw);
        if (x1 <= 0.0) {
            state.x[i] = x1;
            crossers.push_back(i);
        } else if (bridge && x0 > 0.0 &&
                   state.rng[i].uniform() < bridge_crossing_prob(x0, x1, sigma, dt)) {
            state.x[i] = 0.0; // deemed to have touched the origin in-step
            crossers.push_back(i);
        } else {
            state.x[i] = x1;
        }
    }
    return crossers;
}

CascadeOutcome resolve_cascade_discrete(ParticleState& state, const ModelSpec& spec,
                                        const std::vector<int>& crossers) {
    const int n = state.n();
    const int k = state.k;
    const double t = state.t;
    CascadeOutcome out;
    out.dl.assign(k, 0.0);
    out.dlv_atom.assign(spec.n_atoms(), 0.0);
    if (crossers.empty()) return out;

    std::vector<char> in_set(n, 0);
    std::vector<int> defaulted;
    for (int i : crossers) {
        if (!state.alive[i]) continue;
        if (!in_set[i]) { in_set[i] = 1; defaulted.push_back(i); }
    }
    if (defaulted.empty()) return out;

    // grow the defaulted set until it is self-consistent (at most n rounds)
    std::vector<double> dl(k, 0.0);
    for (int round = 1; round <= n; ++round) {
        std::fill(dl.begin(), dl.end(), 0.0);
        for (int j : defaulted) {
            const auto& u = spec.dist.atoms[state.atom[j]].u;
            for (int l = 0; l < k; ++l) dl[l] += u[l];
        }
        for (int l = 0; l < k; ++l) dl[l] /= n;

        out.rounds = round;
        bool grew = false;
        for (int j = 0; j < n; ++j) {
            if (!state.alive[j] || in_set[j]) continue;
            double f = spec.exposure_dot(state.atom[j], dl);
            double gj = state.g_particle(spec, j, t);
            const auto& F = spec.coef.loss;
            double theta = F(state.feedback_int[j] + gj * f) - F(state.feedback_int[j]);
            if (state.x[j] - theta <= 0.0) {
                in_set[j] = 1;
                defaulted.push_back(j);
                grew = true;
            }
        }
        if (!grew) break;
    }

    std::sort(defaulted.begin(), defaulted.end());
    std::fill(dl.begin(), dl.end(), 0.0);
    for (int j : defaulted) {
        const auto& u = spec.dist.atoms[state.atom[j]].u;
        for (int l = 0; l < k; ++l) dl[l] += u[l];
    }
    for (int l = 0; l < k; ++l) dl[l] /= n;

    // apply final shifts with each particle's own contribution excluded
    const auto& F = spec.coef.loss;
    std::vector<double> theta(n, 0.0), felt(n, 0.0);
    for (int j = 0; j < n; ++j) {
        if (!state.alive[j]) continue;
        const auto& a = spec.dist.atoms[state.atom[j]];
        double f = 0.0;
        for (int l = 0; l < k; ++l) {
            double own = in_set[j] ? a.u[l] / n : 0.0;
            f += a.v[l] * (dl[l] - own);
        }
        felt[j] = f;
        double gj = state.g_particle(spec, j, t);
        theta[j] = F(state.feedback_int[j] + gj * f) - F(state.feedback_int[j]);
    }
    for (int j = 0; j < n; ++j) {
        if (!state.alive[j]) continue;
        state.x[j] -= theta[j];
        if (in_set[j]) {
            state.x[j] = std::min(state.x[j], 0.0);
            state.alive[j] = 0;
            state.tau[j] = t;
        } else {
            state.feedback_int[j] += state.g_particle(spec, j, t) * felt[j];
        }
    }

    state.recompute_loss(spec);
    out.defaulted = std::move(defaulted);
    out.dl = std::move(dl);
    for (int a = 0; a < spec.n_atoms(); ++a)
        out.dlv_atom[a] = spec.exposure_dot(a, out.dl);
    out.converged = true;
    return out;
}

ParticleRunResult simulate(const ModelSpec& spec, const ParticleRunParams& params) {
    ParticleState st = init_particles(spec, params.n, params.seed, params.mode);
    const double T = spec.horizon;
    ParticleRunResult res;

    std::uint64_t total_steps = static_cast<std::uint64_t>(params.n) *
                                static_cast<std::uint64_t>(std::ceil(T / params.dt - 1e-9));
    std::uint64_t allowed = params.budget_steps;

    auto record = [&](int rounds) {
        res.times.push_back(st.t);
        res.loss.push_back(st.loss);
        int dead = 0;
        for (char a : st.alive) dead += a ? 0 : 1;
        res.defaults_cum.push_back(dead);
        res.cascade_rounds.push_back(rounds);
    };
    record(0);

    std::uint64_t used = 0;
    std::size_t step_idx = 0;
    while (st.t < T - 1e-12) {
        if (used + static_cast<std::uint64_t>(params.n) > allowed && total_steps > allowed) {
            res.budget_exceeded = true;
            break;
        }
        double dt = std::min(params.dt, T - st.t);
        double dB0 = 0.0;
        if (spec.coef.rho > 0.0) {
            if (params.b0_increments) {
                if (step_idx >= params.b0_increments->size())
                    throw std::invalid_argument("common-noise path shorter than the run");
                dB0 = (*params.b0_increments)[step_idx];
            } else {
                dB0 = std::sqrt(dt) * st.common.normal();
            }
        }
        std::vector<int> crossers = diffusion_step(st, spec, dt, dB0, params.bridge);
        CascadeOutcome cas = resolve_cascade_discrete(st, spec, crossers);
        st.t += dt;
        for (int j : cas.defaulted) res.defaults.push_back({j, st.atom[j], st.tau[j]});
        record(cas.rounds);
        used += static_cast<std::uint64_t>(params.n);
        ++step_idx;
    }
    res.completed_horizon = st.t;
    return res;
}

double ParticleRunResult::loss_at(double t, int l) const {
    auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
    std::size_t idx = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return loss[idx][l];
}

} // namespace cmv
