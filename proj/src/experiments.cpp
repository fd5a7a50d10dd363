#include "cmv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace cmv {

void parallel_for_index(int jobs, int count, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return splitmix64(s);
}

namespace {

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// upper-tail empirical quantile and expected shortfall; losses ascending
void var_es(const std::vector<double>& sample, double alpha, double& var, double& es) {
    std::vector<double> xs = sample;
    std::sort(xs.begin(), xs.end());
    std::size_t m = xs.size();
    std::size_t idx = static_cast<std::size_t>(std::ceil(alpha * m));
    idx = idx == 0 ? 0 : idx - 1;
    if (idx >= m) idx = m - 1;
    var = xs[idx];
    double s = 0.0;
    for (std::size_t i = idx; i < m; ++i) s += xs[i];
    es = s / static_cast<double>(m - idx);
}

double grid_cell_mass(const ModelSpec& spec, const Grid& grid) {
    double sup = 0.0;
    for (const auto& d : spec.initial) sup = std::max(sup, d.sup_norm());
    return grid.h * sup;
}

} // namespace

ConvergenceReport convergence_study(const ModelSpec& spec, const ConvergenceParams& params) {
    for (std::size_t i = 1; i < params.n_ladder.size(); ++i)
        if (params.n_ladder[i] <= params.n_ladder[i - 1])
            throw std::invalid_argument("n ladder must be strictly increasing");
    ConvergenceReport rep;
    rep.n_ladder = params.n_ladder;

    // rho > 0 pairs each seed's particle run with a mean-field run on the
    // same common-noise path; the default rho = 0 study uses one
    // deterministic reference
    const bool paired = spec.coef.rho > 0.0;
    std::vector<std::vector<double>> paths(paired ? params.seeds : 0);
    std::vector<MfRunResult> refs;
    if (paired) {
        if (std::abs(params.solver.dt - params.particle_dt) > 1e-15)
            throw std::invalid_argument("paired common-noise study needs solver.dt == particle_dt");
        int steps = static_cast<int>(std::ceil(spec.horizon / params.particle_dt - 1e-9));
        refs.resize(params.seeds);
        for (int s = 0; s < params.seeds; ++s) {
            Rng noise(derive_seed(params.master_seed, 700001ULL + s), 0);
            paths[s].resize(steps);
            for (int m = 0; m < steps; ++m)
                paths[s][m] = std::sqrt(params.particle_dt) * noise.normal();
        }
        parallel_for_index(params.jobs, params.seeds, [&](int s) {
            SolverParams sp = params.solver;
            sp.noise = NoiseMode::path;
            sp.b0_increments = &paths[s];
            refs[s] = solve(spec, sp);
        });
    } else {
        refs.push_back(solve(spec, params.solver));
    }
    const MfRunResult& ref = refs.front();

    const double T = spec.horizon;
    for (int j = 1; j <= params.output_points; ++j)
        rep.comparison_times.push_back(T * j / params.output_points);

    // drop comparison times within one particle step of a flagged jump
    bool any_jump = false;
    for (const auto& r : refs) any_jump = any_jump || !r.jump_log.empty();
    if (any_jump) {
        std::vector<double> kept;
        for (double t : rep.comparison_times) {
            bool near = false;
            for (const auto& r : refs)
                for (const auto& rec : r.jump_log)
                    if (rec.flagged && std::abs(t - rec.t) <= params.particle_dt) near = true;
            (near ? rep.excluded_times : kept).push_back(t);
        }
        rep.comparison_times = kept;
        if (spec.coef.rho == 0.0) {
            rep.valid = false;
            rep.verdict = "reference run flagged a jump in a study configured as no-jump";
            return rep;
        }
    }

    const int k = spec.k();
    const int nl = static_cast<int>(params.n_ladder.size());
    rep.per_seed_err.assign(nl, std::vector<double>(params.seeds, 0.0));

    struct Task { int ladder; int seed; };
    std::vector<Task> tasks;
    for (int a = 0; a < nl; ++a)
        for (int s = 0; s < params.seeds; ++s) tasks.push_back({a, s});

    parallel_for_index(params.jobs, static_cast<int>(tasks.size()), [&](int ti) {
        const Task& tk = tasks[ti];
        ParticleRunParams pp;
        pp.n = params.n_ladder[tk.ladder];
        pp.dt = params.particle_dt;
        pp.seed = derive_seed(params.master_seed, static_cast<std::uint64_t>(tk.ladder) * 100003ULL + tk.seed);
        pp.bridge = params.bridge;
        pp.mode = params.mode;
        if (paired) pp.b0_increments = &paths[tk.seed];
        const MfRunResult& target = paired ? refs[tk.seed] : ref;
        ParticleRunResult run = simulate(spec, pp);
        double err = 0.0;
        for (double t : rep.comparison_times)
            for (int l = 0; l < k; ++l)
                err = std::max(err, std::abs(run.loss_at(t, l) - target.loss_at(t, l)));
        rep.per_seed_err[tk.ladder][tk.seed] = err;
    });

    for (int a = 0; a < nl; ++a) rep.median_err.push_back(median(rep.per_seed_err[a]));

    if (nl < 2) {
        rep.verdict = "insufficient ladder";
        return rep;
    }
    bool mono = true;
    for (int a = 1; a < nl; ++a)
        if (rep.median_err[a] > rep.median_err[a - 1]) mono = false;
    rep.pass = mono && rep.median_err.back() < params.threshold;
    rep.verdict = rep.pass ? "pass"
                           : (mono ? "final median above threshold" : "medians not non-increasing");
    return rep;
}

DominationReport domination_study(const ModelSpec& spec, const DominationParams& params) {
    if (spec.coef.rho != 0.0) throw std::invalid_argument("domination study requires rho = 0");
    for (std::size_t i = 1; i < params.eps_ladder.size(); ++i)
        if (params.eps_ladder[i] >= params.eps_ladder[i - 1])
            throw std::invalid_argument("eps ladder must be strictly decreasing");
    DominationReport rep;
    rep.eps_ladder = params.eps_ladder;

    MfRunResult base = solve(spec, params.solver);
    const double T = spec.horizon;
    rep.t0 = T;
    for (const auto& rec : base.jump_log)
        if (rec.flagged) { rep.t0 = std::min(rep.t0, rec.t); break; }

    std::vector<double> times;
    for (int j = 1; j <= params.output_points; ++j) {
        double t = T * j / params.output_points;
        if (t < rep.t0) times.push_back(t);
    }

    const double tol = 2.0 * grid_cell_mass(spec, params.solver.grid);
    const int na = spec.n_atoms();
    const int nl = static_cast<int>(params.eps_ladder.size());
    rep.envelope.assign(nl, 0.0);

    std::vector<MfRunResult> runs(nl);
    parallel_for_index(params.jobs, nl, [&](int e) {
        runs[e] = solve_eps_approx(spec, params.eps_ladder[e], params.solver);
    });

    for (int e = 0; e < nl; ++e) {
        double env = 0.0;
        for (double t : times) {
            for (int a = 0; a < na; ++a) {
                double vnorm = 0.0;
                for (double vl : spec.dist.atoms[a].v) vnorm += std::abs(vl);
                if (vnorm == 0.0) continue;
                double le = 0.0, lb = 0.0;
                for (int l = 0; l < spec.k(); ++l) {
                    le += spec.dist.atoms[a].v[l] * runs[e].loss_at(t, l);
                    lb += spec.dist.atoms[a].v[l] * base.loss_at(t, l);
                }
                double gap = le - lb;
                env = std::max(env, gap);
                if (gap < -tol && rep.domination_ok) {
                    rep.domination_ok = false;
                    rep.first_violation_eps = params.eps_ladder[e];
                    rep.first_violation_t = t;
                    rep.first_violation_atom = a;
                }
                rep.worst_gap = std::min(rep.worst_gap, gap);
            }
        }
        rep.envelope[e] = env;
    }

    if (nl < 2) {
        rep.verdict = "insufficient ladder";
        return rep;
    }
    rep.env_monotone = true;
    for (int e = 1; e < nl; ++e)
        if (rep.envelope[e] > rep.envelope[e - 1]) rep.env_monotone = false;
    rep.pass = rep.domination_ok && rep.env_monotone && rep.envelope.back() < params.envelope_threshold;
    rep.verdict = rep.pass ? "pass"
                 : !rep.domination_ok ? "domination violated"
                 : !rep.env_monotone  ? "envelope not monotone"
                                      : "final envelope above threshold";
    return rep;
}

JumpLadderReport eps_jump_diagnostic(const ModelSpec& spec, const SolverParams& solver,
                                     double eps0, int levels) {
    if (eps0 <= 0.0 || levels < 2) throw std::invalid_argument("jump ladder needs eps0 > 0 and at least 2 levels");
    JumpLadderReport rep;
    rep.all_jumped = true;
    double eps = eps0;
    for (int lvl = 0; lvl < levels; ++lvl, eps *= 0.5) {
        MfRunResult run = solve_eps_approx(spec, eps, solver);
        rep.eps.push_back(eps);
        double j = 0.0;
        for (const auto& rec : run.jump_log)
            if (rec.flagged) {
                for (double d : rec.dl) j += d;
                break;
            }
        if (j == 0.0) rep.all_jumped = false;
        rep.jump.push_back(j);
    }
    std::size_t m = rep.jump.size();
    rep.extrapolated = 2.0 * rep.jump[m - 1] - rep.jump[m - 2];
    return rep;
}

CrosscheckReport physical_jump_crosscheck(const ModelSpec& spec, const SolverParams& solver) {
    if (spec.n_atoms() != 1 || spec.k() != 1)
        throw std::invalid_argument("cross-check needs a single-atom spec with k = 1");
    if (std::abs(spec.dist.atoms[0].u[0] - 1.0) > 1e-12)
        throw std::invalid_argument("cross-check needs u = 1");
    if (spec.coef.loss.kind() != LossTransform::Kind::identity)
        throw std::invalid_argument("cross-check needs the identity loss transform");
    if (spec.coef.g[0].kind() != FeedbackWeight::Kind::constant || spec.coef.g[0].level() != 1.0)
        throw std::invalid_argument("cross-check needs constant g = 1");
    if (spec.coef.rho != 0.0) throw std::invalid_argument("cross-check requires rho = 0");

    const double alpha = spec.dist.atoms[0].v[0];
    const Grid& g = solver.grid;
    CrosscheckReport rep;
    rep.tolerance = 2.0 * grid_cell_mass(spec, g);

    DensityField field = make_field(spec, g);
    const double T = spec.horizon;
    while (field.t < T - 1e-12) {
        double dt = std::min(solver.dt, T - field.t);
        std::vector<double> left_limit = field.rows[0]; // state entering the step
        std::vector<double> adiff = transition_step(field, spec, dt, 0.0, solver.kernel);
        std::vector<double> seed = {spec.dist.atoms[0].p * adiff[0]};
        MfCascadeResult cas = resolve_cascade_meanfield(field, spec, field.t, seed, solver.cascade);
        if (cas.flagged) {
            // direct physical-jump size on the left-limit density; the
            // cascade's total includes the step's diffusion sliver, which
            // the direct computation counts as part of nu([0, D])
            const auto& row = left_limit;
            auto nu = [&](double z) {
                if (z <= 0.0) return 0.0;
                z = std::min(z, g.x_max());
                int full = static_cast<int>(z / g.h);
                double m = 0.0;
                for (int j = 0; j < std::min(full, g.cells); ++j) m += row[j];
                m *= g.h;
                if (full < g.cells) m += (z - full * g.h) * row[full];
                return m;
            };
            double total = 0.0;
            for (double r : row) total += r;
            total *= g.h;
            double z_hi = alpha * total + g.h;
            // scan for the first cell where alpha nu([0,z]) < z, then bisect
            double d_point = -1.0;
            double prev = 0.0;
            for (double z = g.h; z <= z_hi + g.h; z += g.h) {
                if (alpha * nu(z) < z) {
                    double lo = prev, hi = z;
                    for (int it = 0; it < 60; ++it) {
                        double mid = 0.5 * (lo + hi);
                        if (mid > 0.0 && alpha * nu(mid) < mid) hi = mid; else lo = mid;
                    }
                    d_point = hi;
                    break;
                }
                prev = z;
            }
            rep.applicable = true;
            rep.t_jump = field.t;
            rep.cascade_jump_mass = cas.dl[0];
            if (d_point < 0.0) {
                rep.bisection_point = std::numeric_limits<double>::infinity();
                rep.direct_jump_mass = total;
            } else {
                rep.bisection_point = d_point;
                rep.direct_jump_mass = nu(d_point);
            }
            rep.gap = std::abs(rep.cascade_jump_mass - rep.direct_jump_mass);
            rep.pass = rep.gap <= rep.tolerance;
            rep.verdict = rep.pass ? "pass" : "cascade and physical jump disagree";
            return rep;
        }
        FeedbackOutcome fb = apply_feedback(field, spec, cas.dl);
        field.loss[0] += seed[0] + spec.dist.atoms[0].p * fb.absorbed[0];
        field.t += dt;
    }
    rep.verdict = "not applicable: no flagged jump before the horizon";
    return rep;
}

RiskReport risk_study(const ModelSpec& spec, const RiskParams& params) {
    if (params.q <= 0.0 || params.q >= 1.0) throw std::invalid_argument("conditioning quantile must lie in (0,1)");
    if (params.scenarios < static_cast<int>(std::ceil(1.0 / (1.0 - params.q))))
        throw std::invalid_argument("too few scenarios for the conditioning quantile");

    const int na = spec.n_atoms();
    std::vector<char> is_core(na, 0);
    int n_core = 0;
    for (int a = 0; a < na; ++a)
        for (const auto& lbl : params.core_labels)
            if (spec.dist.atoms[a].label == lbl) { is_core[a] = 1; ++n_core; break; }
    if (n_core == 0 || n_core == na)
        throw std::invalid_argument("core/periphery partition must be non-trivial");

    double p_core = 0.0, p_per = 0.0;
    for (int a = 0; a < na; ++a)
        (is_core[a] ? p_core : p_per) += spec.dist.atoms[a].p;

    RiskReport rep;
    rep.scenarios = params.scenarios;
    rep.q = params.q;
    rep.window_end = params.window_frac * spec.horizon;
    rep.core_increment.assign(params.scenarios, 0.0);
    rep.periphery_loss.assign(params.scenarios, 0.0);

    parallel_for_index(params.jobs, params.scenarios, [&](int s) {
        SolverParams sp = params.solver;
        sp.noise = NoiseMode::seeded;
        sp.seed = derive_seed(params.master_seed, static_cast<std::uint64_t>(s));
        MfRunResult run = solve(spec, sp);
        double core0 = 0.0, core1 = 0.0, per = 0.0;
        for (int a = 0; a < na; ++a) {
            if (is_core[a]) {
                core0 += spec.dist.atoms[a].p * run.atom_defaulted_at(0.0, a);
                core1 += spec.dist.atoms[a].p * run.atom_defaulted_at(rep.window_end, a);
            } else {
                per += spec.dist.atoms[a].p * run.atom_defaulted_at(spec.horizon, a);
            }
        }
        rep.core_increment[s] = (core1 - core0) / p_core;
        rep.periphery_loss[s] = per / p_per;
    });

    // conditioning event: top (1-q) fraction of scenarios by core increment
    int top = params.scenarios - static_cast<int>(std::floor(params.q * params.scenarios));
    std::vector<int> order(params.scenarios);
    for (int s = 0; s < params.scenarios; ++s) order[s] = s;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rep.core_increment[a] > rep.core_increment[b];
    });
    std::vector<double> cond;
    for (int r = 0; r < top; ++r) cond.push_back(rep.periphery_loss[order[r]]);
    rep.conditional_size = static_cast<int>(cond.size());

    for (double alpha : params.alphas) {
        RiskRow row;
        row.alpha = alpha;
        var_es(rep.periphery_loss, alpha, row.var_uncond, row.es_uncond);
        var_es(cond, alpha, row.var_cond, row.es_cond);
        if (row.es_uncond < row.var_uncond - 1e-15 || row.es_cond < row.var_cond - 1e-15) rep.ok = false;
        rep.rows.push_back(row);
    }
    return rep;
}

FpValidationReport fp_validation(const FpValidationParams& params) {
    ModelSpec spec;
    spec.dist.k = 1;
    spec.dist.atoms.push_back({{1.0}, {0.0}, 1.0, ""});
    spec.coef.g = {FeedbackWeight::constant(1.0)};
    spec.coef.drift = {TimeCoef::constant(0.0)};
    spec.coef.vol = {TimeCoef::constant(params.sigma)};
    spec.coef.vol_lo = 0.5 * params.sigma;
    spec.coef.vol_hi = 2.0 * params.sigma;
    spec.initial = {InitialDensity::uniform(params.x0 - 0.5 * params.window, params.x0 + 0.5 * params.window)};
    spec.horizon = params.times.empty() ? 0.25 : *std::max_element(params.times.begin(), params.times.end());

    SolverParams sp;
    sp.grid = Grid::make(params.h, params.x_max);
    sp.dt = params.dt;
    sp.kernel = params.kernel;
    MfRunResult run = solve(spec, sp);

    FpValidationReport rep;
    rep.times = params.times;
    for (double t : params.times) {
        rep.absorbed.push_back(run.loss_at(t, 0));
        // reflection principle, averaged over the narrow uniform window
        const int nq = 2000;
        double a = params.x0 - 0.5 * params.window, b = params.x0 + 0.5 * params.window;
        double s = 0.0;
        for (int i = 0; i < nq; ++i) {
            double x = a + (b - a) * (i + 0.5) / nq;
            s += t > 0.0 ? std::erfc(x / (params.sigma * std::sqrt(2.0 * t))) : 0.0;
        }
        rep.exact.push_back(s / nq);
        rep.max_abs_err = std::max(rep.max_abs_err, std::abs(rep.absorbed.back() - rep.exact.back()));
    }
    return rep;
}

} // namespace cmv
