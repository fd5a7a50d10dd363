#include "cmv/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cmv {

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Binning cell-averaged mass into cells re-adds h^2/12 of variance per
// step, which accumulates to an O(h^2/dt) bias. Shrinking the kernel
// variance by the same amount cancels it; skipped when the kernel is
// already narrower than a couple of cells.
double matched_kernel_width(double s, double h) {
    double s2 = s * s - h * h / 12.0;
    return s2 > s * s / 6.0 ? std::sqrt(s2) : s;
}

// Mass of a cell-averaged row on [0, theta], partial cell linearly.
double mass_below(const std::vector<double>& row, const Grid& g, double theta) {
    if (theta <= 0.0) return 0.0;
    if (theta >= g.x_max()) {
        double m = 0.0;
        for (double r : row) m += r;
        return m * g.h;
    }
    int full = static_cast<int>(theta / g.h);
    if (full >= g.cells) {
        double m = 0.0;
        for (double r : row) m += r;
        return m * g.h;
    }
    double m = 0.0;
    for (int j = 0; j < full; ++j) m += row[j];
    m *= g.h;
    m += (theta - full * g.h) * row[full];
    return m;
}

// Shift a row toward the origin by theta >= 0, absorbing what crosses it.
// Exact for cell-averaged piecewise-constant data.
double shift_left(std::vector<double>& row, const Grid& g, double theta) {
    if (theta <= 0.0) return 0.0;
    const int m = g.cells;
    double absorbed = mass_below(row, g, theta);
    if (theta >= g.x_max()) {
        std::fill(row.begin(), row.end(), 0.0);
        return absorbed;
    }
    int i0 = static_cast<int>(theta / g.h);
    if (i0 >= m) {
        std::fill(row.begin(), row.end(), 0.0);
        return absorbed;
    }
    double frac = theta / g.h - i0;
    std::vector<double> out(m, 0.0);
    for (int j = 0; j < m; ++j) {
        double a = (j + i0 < m) ? row[j + i0] : 0.0;
        double b = (j + i0 + 1 < m) ? row[j + i0 + 1] : 0.0;
        out[j] = (1.0 - frac) * a + frac * b;
    }
    row.swap(out);
    return absorbed;
}

double theta_shift(const ModelSpec& spec, int atom, double t, double feedback_int, double f) {
    const auto& F = spec.coef.loss;
    double gf = spec.g_meanfield(atom, t) * f;
    return F(feedback_int + gf) - F(feedback_int);
}

} // namespace

double DensityField::mass(int atom) const {
    double m = 0.0;
    for (double r : rows[atom]) m += r;
    return m * grid.h;
}

void DensityField::note_sup() {
    double s = 0.0;
    for (const auto& row : rows)
        for (double r : row) s = std::max(s, r);
    sup_slack = std::max(sup_slack, s - initial_sup);
}

DensityField make_field(const ModelSpec& spec, const Grid& grid) {
    DensityField f;
    f.grid = grid;
    f.k = spec.k();
    f.t = 0.0;
    f.loss.assign(spec.k(), 0.0);
    f.feedback_int.assign(spec.n_atoms(), 0.0);
    f.absorbed_diffusion.assign(spec.n_atoms(), 0.0);
    f.absorbed_feedback.assign(spec.n_atoms(), 0.0);
    for (int i = 0; i < spec.n_atoms(); ++i) {
        f.rows.push_back(discretize_initial(spec.initial[i], grid));
        f.initial_sup = std::max(f.initial_sup, spec.initial[i].sup_norm());
    }
    return f;
}

std::vector<double> transition_step(DensityField& field, const ModelSpec& spec,
                                    double dt, double dB0, KernelMode mode) {
    if (dt <= 0.0) throw std::invalid_argument("transition step needs dt > 0");
    const Grid& g = field.grid;
    const double h = g.h;
    const int m = g.cells;
    const double rho = spec.coef.rho;
    const double t = field.t;
    std::vector<double> absorbed(spec.n_atoms(), 0.0);

    std::vector<double> out;
    std::vector<double> taps;
    for (int i = 0; i < spec.n_atoms(); ++i) {
        double sigma = spec.coef.vol[i].at(t);
        if (sigma * sigma * dt > 0.0625 * g.x_max() * g.x_max())
            throw std::invalid_argument("diffusion kernel wider than a quarter of the domain; shrink dt or enlarge x_max");
        double mass_before = field.mass(i);
        if (mass_before <= 0.0) continue;

        double d = spec.coef.drift[i].at(t) * dt + rho * sigma * dB0;
        double s = matched_kernel_width(sigma * std::sqrt((1.0 - rho * rho) * dt), h);

        int m_lo = static_cast<int>(std::floor((d - 8.0 * s) / h)) - 1;
        int m_hi = static_cast<int>(std::ceil((d + 8.0 * s) / h)) + 1;
        taps.assign(static_cast<std::size_t>(m_hi - m_lo + 1), 0.0);
        double wsum = 0.0;
        for (int mm = m_lo; mm <= m_hi; ++mm) {
            double w = norm_cdf((mm * h + 0.5 * h - d) / s) - norm_cdf((mm * h - 0.5 * h - d) / s);
            taps[mm - m_lo] = w;
            wsum += w;
        }
        if (mode == KernelMode::truncate && wsum > 0.0)
            for (auto& w : taps) w /= wsum;

        out.assign(m, 0.0);
        const auto& row = field.rows[i];
        for (int j = 0; j < m; ++j) {
            double rj = row[j];
            if (rj == 0.0) continue;
            for (int mm = m_lo; mm <= m_hi; ++mm) {
                int tgt = j + mm;
                double w = taps[mm - m_lo];
                if (tgt < 0) continue; // absorbed at the origin
                if (tgt >= m) tgt = m - 1;
                out[tgt] += w * rj;
            }
        }

        if (mode == KernelMode::images) {
            // subtract the image of each near-boundary source cell; paths
            // that touched the origin within the step are absorbed even if
            // the endpoint is positive. The image overlap only depends on
            // the diagonal q = source + target, up to the drift factor.
            double reach = d + 8.0 * s;
            int q_hi = static_cast<int>(std::ceil(2.0 * std::max(reach, 0.0) / h)) + 2;
            std::vector<double> img(static_cast<std::size_t>(q_hi + 1), 0.0);
            for (int q = 0; q <= q_hi; ++q) {
                double w = norm_cdf(((q + 1.5) * h - d) / s) - norm_cdf(((q + 0.5) * h - d) / s);
                img[q] = std::max(0.0, w);
            }
            for (int j = 0; j < m; ++j) {
                double rj = row[j];
                if (rj == 0.0) continue;
                double xc = g.cell_mid(j);
                if (xc > reach) break;
                double wfac = d == 0.0 ? 1.0 : std::exp(-2.0 * d * xc / (s * s));
                int tgt_hi_idx = std::min(m - 1, q_hi - j);
                for (int tgt = 0; tgt <= tgt_hi_idx; ++tgt)
                    out[tgt] -= wfac * img[tgt + j] * rj;
            }
            for (auto& o : out) o = std::max(0.0, o);
        }

        double mass_after = 0.0;
        for (double o : out) mass_after += o;
        mass_after *= h;
        absorbed[i] = std::max(0.0, mass_before - mass_after);
        field.absorbed_diffusion[i] += absorbed[i];
        field.rows[i].swap(out);
    }
    field.note_sup();
    return absorbed;
}

std::vector<double> xi(const DensityField& field, const ModelSpec& spec,
                       double t, const std::vector<double>& f_per_atom) {
    const int k = spec.k();
    std::vector<double> out(k, 0.0);
    for (int i = 0; i < spec.n_atoms(); ++i) {
        double f = f_per_atom[i];
        if (f < 0.0) {
            if (f < -1e-12) throw std::invalid_argument("cascade exposure input must be non-negative");
            f = 0.0;
        }
        double theta = theta_shift(spec, i, t, field.feedback_int[i], f);
        if (theta <= 0.0) continue;
        double mass = mass_below(field.rows[i], field.grid, theta);
        double w = spec.dist.atoms[i].p * mass;
        for (int l = 0; l < k; ++l) out[l] += w * spec.dist.atoms[i].u[l];
    }
    return out;
}

MfCascadeResult resolve_cascade_meanfield(const DensityField& field, const ModelSpec& spec,
                                          double t, const std::vector<double>& seed,
                                          const CascadeParams& params) {
    const int k = spec.k();
    const int na = spec.n_atoms();
    for (double s : seed)
        if (s < 0.0) throw std::invalid_argument("cascade seed must be non-negative");

    int m_max = params.m_max > 0
                    ? params.m_max
                    : 10 * na * static_cast<int>(std::ceil(std::log(1.0 / params.tol)));

    MfCascadeResult res;
    res.dl = seed;
    std::vector<double> f(na, 0.0);
    std::vector<double> next(k, 0.0);
    double prev_residual = -1.0;
    bool contracting = true;

    for (int m = 1; m <= m_max; ++m) {
        for (int i = 0; i < na; ++i) f[i] = spec.exposure_dot(i, res.dl);
        std::vector<double> response = xi(field, spec, t, f);
        double residual = 0.0;
        for (int l = 0; l < k; ++l) {
            next[l] = seed[l] + response[l];
            // iterates are monotone non-decreasing by construction
            if (next[l] < res.dl[l] - 1e-14)
                throw std::logic_error("cascade iterate decreased; monotonicity broken");
            residual = std::max(residual, std::abs(next[l] - res.dl[l]));
        }
        res.dl = next;
        res.rounds = m;
        res.residual = residual;
        if (residual < params.tol) { res.converged = true; break; }
        res.converged = false;
        if (prev_residual >= 0.0) contracting = residual < prev_residual * 0.9999;
        prev_residual = residual;
    }
    if (!res.converged && !contracting) res.exploded = true;

    // exact fixed-point residual of the returned increments
    for (int i = 0; i < na; ++i) f[i] = spec.exposure_dot(i, res.dl);
    std::vector<double> response = xi(field, spec, t, f);
    double fp_res = 0.0;
    for (int l = 0; l < k; ++l) fp_res = std::max(fp_res, std::abs(seed[l] + response[l] - res.dl[l]));
    res.residual = fp_res;

    res.per_atom_absorbed.assign(na, 0.0);
    for (int i = 0; i < na; ++i) {
        double theta = theta_shift(spec, i, t, field.feedback_int[i], f[i]);
        res.per_atom_absorbed[i] = mass_below(field.rows[i], field.grid, theta);
    }

    double seed_sum = 0.0, dl_sum = 0.0;
    for (int l = 0; l < k; ++l) { seed_sum += seed[l]; dl_sum += res.dl[l]; }
    if (seed_sum > 0.0)
        res.amplification = dl_sum / seed_sum;
    else
        res.amplification = dl_sum > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    res.flagged = res.amplification > params.jump_ratio || dl_sum > params.jump_mass;
    return res;
}

FeedbackOutcome apply_feedback(DensityField& field, const ModelSpec& spec,
                               const std::vector<double>& dl) {
    const int na = spec.n_atoms();
    const double t = field.t;
    FeedbackOutcome out;
    out.absorbed.assign(na, 0.0);

    std::vector<double> f(na, 0.0);
    for (int i = 0; i < na; ++i) f[i] = spec.exposure_dot(i, dl);
    std::vector<double> expected = xi(field, spec, t, f);

    for (int i = 0; i < na; ++i) {
        double theta = theta_shift(spec, i, t, field.feedback_int[i], f[i]);
        out.absorbed[i] = shift_left(field.rows[i], field.grid, theta);
        field.absorbed_feedback[i] += out.absorbed[i];
        field.feedback_int[i] += spec.g_meanfield(i, t) * f[i];
    }

    for (int l = 0; l < spec.k(); ++l) {
        double got = 0.0;
        for (int i = 0; i < na; ++i) got += spec.dist.atoms[i].p * spec.dist.atoms[i].u[l] * out.absorbed[i];
        out.residual = std::max(out.residual, std::abs(got - expected[l]));
    }
    field.note_sup();
    return out;
}

namespace {

MfRunResult run_field(DensityField field, const ModelSpec& spec, const SolverParams& params) {
    const int k = spec.k();
    const int na = spec.n_atoms();
    const double T = spec.horizon;
    if (spec.coef.rho > 0.0 && params.noise == NoiseMode::none)
        throw std::invalid_argument("rho > 0 requires a common-noise seed or path");
    if (params.noise == NoiseMode::path && params.b0_increments == nullptr)
        throw std::invalid_argument("path noise mode needs b0 increments");

    MfRunResult res;
    Rng noise(params.seed, 0);

    auto record = [&](bool flag, int rounds) {
        res.times.push_back(field.t);
        res.loss.push_back(field.loss);
        res.jump_flag.push_back(flag ? 1 : 0);
        res.rounds.push_back(rounds);
        std::vector<double> dm(na);
        for (int i = 0; i < na; ++i) dm[i] = 1.0 - field.mass(i);
        res.atom_defaulted.push_back(std::move(dm));
    };
    record(false, 0);

    auto want_snapshot = [&](double t0, double t1) {
        for (double ts : params.snapshot_times)
            if (ts > t0 && ts <= t1 + 1e-12) return true;
        return false;
    };
    if (!params.snapshot_times.empty() && want_snapshot(-1.0, 0.0))
        res.snapshots.emplace_back(0.0, field.rows);

    std::size_t step_idx = 0;
    while (field.t < T - 1e-12) {
        double t0 = field.t;
        double dt = std::min(params.dt, T - t0);
        double dB0 = 0.0;
        if (spec.coef.rho > 0.0) {
            if (params.noise == NoiseMode::path) {
                if (step_idx >= params.b0_increments->size())
                    throw std::invalid_argument("common-noise path shorter than the run");
                dB0 = (*params.b0_increments)[step_idx];
            } else {
                dB0 = std::sqrt(dt) * noise.normal();
            }
        }

        std::vector<double> adiff = transition_step(field, spec, dt, dB0, params.kernel);
        std::vector<double> seed(k, 0.0);
        for (int i = 0; i < na; ++i) {
            double w = spec.dist.atoms[i].p * adiff[i];
            for (int l = 0; l < k; ++l) seed[l] += w * spec.dist.atoms[i].u[l];
        }

        MfCascadeResult cas = resolve_cascade_meanfield(field, spec, t0, seed, params.cascade);
        FeedbackOutcome fb = apply_feedback(field, spec, cas.dl);
        res.feedback_residual = std::max(res.feedback_residual, fb.residual);

        for (int l = 0; l < k; ++l) {
            double w = seed[l];
            for (int i = 0; i < na; ++i) w += spec.dist.atoms[i].p * spec.dist.atoms[i].u[l] * fb.absorbed[i];
            field.loss[l] += w;
        }

        field.t = t0 + dt;
        ++step_idx;

        for (int i = 0; i < na; ++i) {
            double drift_acc = std::abs(field.mass(i) + field.absorbed_diffusion[i] + field.absorbed_feedback[i] - 1.0);
            res.mass_residual = std::max(res.mass_residual, drift_acc);
        }

        bool event = cas.flagged || cas.exploded;
        if (event) {
            JumpRecord rec{field.t, cas.dl, cas.rounds, cas.amplification, cas.flagged, cas.exploded};
            field.jump_log.push_back(rec);
            res.jump_log.push_back(rec);
            if (!res.t_star) res.t_star = field.t;
        }
        record(cas.flagged, cas.rounds);
        if (want_snapshot(t0, field.t)) res.snapshots.emplace_back(field.t, field.rows);
        if (event && params.strict) { res.halted = true; break; }
    }

    res.sup_slack = field.sup_slack;
    return res;
}

} // namespace

MfRunResult solve(const ModelSpec& spec, const SolverParams& params) {
    return run_field(make_field(spec, params.grid), spec, params);
}

MfRunResult solve_eps_approx(const ModelSpec& spec, double eps, const SolverParams& params) {
    const int na = spec.n_atoms();
    const int k = spec.k();
    double xs = std::numeric_limits<double>::infinity();
    for (const auto& d : spec.initial) xs = std::min(xs, d.x_star());
    if (eps <= 0.0 || eps >= xs)
        throw std::invalid_argument("eps must lie in (0, x_star)");

    DensityField field = make_field(spec, params.grid);
    const Grid& g = params.grid;

    // mass removed on (0, eps), counted as a loss at time zero
    std::vector<double> lambda(k, 0.0);
    for (int i = 0; i < na; ++i) {
        double sliver = spec.initial[i].cdf(eps);
        for (int l = 0; l < k; ++l) lambda[l] += spec.dist.atoms[i].p * spec.dist.atoms[i].u[l] * sliver;
    }

    for (int i = 0; i < na; ++i) {
        double sliver = spec.initial[i].cdf(eps);
        for (int j = 0; j < g.cells; ++j) {
            double lo = std::max(g.cell_lo(j), eps);
            field.rows[i][j] = lo >= g.cell_hi(j) ? 0.0 : spec.initial[i].mass_on(lo, g.cell_hi(j)) / g.h;
        }
        double lambda_v = spec.exposure_dot(i, lambda);
        double shift = 0.25 * eps + spec.coef.loss(spec.g_meanfield(i, 0.0) * lambda_v);
        double shifted_out = shift_left(field.rows[i], g, shift);
        field.feedback_int[i] = spec.g_meanfield(i, 0.0) * lambda_v;
        field.absorbed_feedback[i] = sliver + shifted_out;
        for (int l = 0; l < k; ++l)
            field.loss[l] += spec.dist.atoms[i].p * spec.dist.atoms[i].u[l] * shifted_out;
    }
    for (int l = 0; l < k; ++l) field.loss[l] += lambda[l];

    return run_field(std::move(field), spec, params);
}

double MfRunResult::loss_at(double t, int l) const {
    auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
    std::size_t idx = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return loss[idx][l];
}

double MfRunResult::atom_defaulted_at(double t, int atom) const {
    auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
    std::size_t idx = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return atom_defaulted[idx][atom];
}

EnvelopeReport regularity_envelope(const std::vector<double>& times,
                                   const std::vector<std::vector<double>>& loss,
                                   const std::vector<char>& jump_flag,
                                   double beta, double k_limit) {
    for (char f : jump_flag)
        if (f) throw std::invalid_argument("regularity envelope needs a jump-free loss segment");
    EnvelopeReport rep;
    if (times.size() < 3) return rep;
    const int k = static_cast<int>(loss.front().size());
    const double expo = 0.5 * (1.0 - beta);

    double l2_total = 0.0;
    std::vector<double> l2_running;
    for (std::size_t m = 1; m + 1 < times.size(); ++m) {
        double dt2 = times[m + 1] - times[m - 1];
        if (dt2 <= 0.0 || times[m] <= 0.0) continue;
        double weight = std::pow(times[m], expo);
        double dmax = 0.0;
        for (int l = 0; l < k; ++l) {
            double dl = (loss[m + 1][l] - loss[m - 1][l]) / dt2;
            dmax = std::max(dmax, dl);
            l2_total += dl * dl * 0.5 * dt2;
        }
        double e = dmax * weight;
        rep.k_fit = std::max(rep.k_fit, e);
        if (k_limit > 0.0 && e > k_limit) ++rep.violations;
        l2_running.push_back(l2_total);
    }

    // heuristic: a sharply accelerating running L2 norm of the derivative
    if (l2_running.size() >= 10) {
        std::size_t n = l2_running.size();
        double tail = l2_running[n - 1] - l2_running[n - 1 - n / 10];
        double mid = l2_running[n / 2] - l2_running[n / 2 - n / 10];
        rep.explosion_flag = mid > 0.0 && tail > 10.0 * mid;
    }
    return rep;
}

} // namespace cmv
