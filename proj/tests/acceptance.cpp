// Acceptance suite. Runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion; exits nonzero if any fail.
//
//   acceptance --cli <path-to-cmvsim> --src <repo root>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmv/config.hpp"
#include "cmv/density.hpp"
#include "cmv/experiments.hpp"
#include "cmv/model.hpp"
#include "cmv/particle.hpp"
#include "cmv/runio.hpp"

#include "../tests/support.hpp"

namespace fs = std::filesystem;
using namespace cmv;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_s() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string g_cli;
std::string g_src;
int g_failures = 0;

void report(int id, const std::string& name, const Outcome& out, double seconds, double budget_s) {
    bool time_ok = budget_s <= 0.0 || seconds < budget_s;
    bool pass = out.pass && time_ok;
    std::printf("criterion %2d %-34s %s  (%.1f s%s)%s%s\n", id, name.c_str(),
                pass ? "PASS" : "FAIL", seconds,
                budget_s > 0 ? (" / budget " + std::to_string((int)budget_s) + " s").c_str() : "",
                out.detail.empty() ? "" : "  ", out.detail.c_str());
    if (!pass) ++g_failures;
}

// ---------------------------------------------------------------------------
// criterion 1: discrete cascade vs hand iteration and brute force
// ---------------------------------------------------------------------------

Outcome criterion1() {
    Outcome out;

    ModelSpec spec = testsup::homogeneous(1.0, InitialDensity::uniform(0.0, 2.0));
    auto mk = [&](double x0, double x1) {
        ParticleState st = init_particles(spec, 2, 1, AssignmentMode::iid);
        st.x = {x0, x1};
        st.alive = {1, 1};
        st.tau.assign(2, std::numeric_limits<double>::infinity());
        st.feedback_int = {0.0, 0.0};
        st.t = 0.5;
        return st;
    };
    ParticleState full = mk(0.0, 0.4);
    CascadeOutcome a = resolve_cascade_discrete(full, spec, {0});
    if (a.dl[0] != 1.0 || a.defaulted.size() != 2) {
        out.detail = "full-default example mismatch";
        return out;
    }
    ParticleState part = mk(0.0, 0.6);
    CascadeOutcome b = resolve_cascade_discrete(part, spec, {0});
    if (b.dl[0] != 0.5 || b.defaulted.size() != 1) {
        out.detail = "partial-default example mismatch";
        return out;
    }

    Rng rng(90210, 0);
    int agreed = 0;
    for (int trial = 0; trial < 200; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform() * 5.0);
        int k = 1 + (rng.uniform() < 0.5 ? 1 : 0);
        ModelSpec ms;
        ms.dist.k = k;
        for (int a2 = 0; a2 < 2; ++a2) {
            TypeAtom atom;
            for (int l = 0; l < k; ++l) {
                atom.u.push_back(rng.uniform() * 2.0);
                atom.v.push_back(rng.uniform() * 2.0);
            }
            atom.p = 0.5;
            ms.dist.atoms.push_back(atom);
            ms.coef.g.push_back(FeedbackWeight::constant(0.5 + rng.uniform()));
            ms.coef.drift.push_back(TimeCoef::constant(0.0));
            ms.coef.vol.push_back(TimeCoef::constant(1.0));
            ms.initial.push_back(InitialDensity::uniform(0.0, 2.0));
        }
        ms.coef.vol_lo = 0.5;
        ms.coef.vol_hi = 2.0;
        switch (trial % 3) {
            case 0: ms.coef.loss = LossTransform::identity(); break;
            case 1: ms.coef.loss = LossTransform::log1p_scaled(0.5 + rng.uniform()); break;
            case 2: ms.coef.loss = LossTransform::capped_linear(0.5 + rng.uniform(), 0.2 + rng.uniform()); break;
        }
        ms.horizon = 1.0;

        ParticleState st = init_particles(ms, n, 31337 + trial, AssignmentMode::iid);
        st.t = 0.25;
        std::vector<int> crossers;
        for (int i = 0; i < n; ++i) {
            st.x[i] = rng.uniform() * 1.0 - 0.15;
            st.feedback_int[i] = rng.uniform() * 0.2;
            if (st.x[i] <= 0.0) crossers.push_back(i);
        }

        testsup::CascadeInstance inst;
        inst.k = k;
        inst.x = st.x;
        inst.alive.assign(n, 1);
        inst.feedback_int = st.feedback_int;
        inst.loss = &ms.coef.loss;
        for (int i = 0; i < n; ++i) {
            inst.u.push_back(ms.dist.atoms[st.atom[i]].u);
            inst.v.push_back(ms.dist.atoms[st.atom[i]].v);
            inst.g.push_back(st.g_particle(ms, i, st.t));
        }
        bool unique_minimal = false;
        std::set<int> expect = testsup::brute_force_cascade(inst, &unique_minimal);

        CascadeOutcome got = resolve_cascade_discrete(st, ms, crossers);
        std::set<int> got_set(got.defaulted.begin(), got.defaulted.end());
        if (!unique_minimal || got_set != expect) {
            out.detail = "brute-force mismatch at trial " + std::to_string(trial);
            return out;
        }
        ++agreed;
    }
    out.pass = agreed == 200;
    out.detail = "200/200 brute-force agreements";
    return out;
}

// ---------------------------------------------------------------------------
// criterion 2: mean-field cascade stability dichotomy
// criterion 3: fixed-point identity residuals (collected across solve loops)
// ---------------------------------------------------------------------------

struct SteppedRun {
    double max_amp = 0.0;
    bool any_flag = false;
    double first_flag_dl = 0.0;
    double first_flag_mass_before = 0.0;
    bool first_flag_immediate = false;
    double max_residual = 0.0;
    int cascades = 0;
};

SteppedRun step_through(const ModelSpec& spec, const SolverParams& params) {
    SteppedRun sr;
    DensityField field = make_field(spec, params.grid);
    const int k = spec.k();
    const int na = spec.n_atoms();
    int step = 0;
    while (field.t < spec.horizon - 1e-12) {
        double dt = std::min(params.dt, spec.horizon - field.t);
        double mass_before = 0.0;
        for (int i = 0; i < na; ++i)
            mass_before += spec.dist.atoms[i].p * spec.dist.atoms[i].u[0] * field.mass(i);
        std::vector<double> adiff = transition_step(field, spec, dt, 0.0, params.kernel);
        std::vector<double> seed(k, 0.0);
        for (int i = 0; i < na; ++i)
            for (int l = 0; l < k; ++l)
                seed[l] += spec.dist.atoms[i].p * spec.dist.atoms[i].u[l] * adiff[i];
        MfCascadeResult cas = resolve_cascade_meanfield(field, spec, field.t, seed, params.cascade);
        if (cas.converged) sr.max_residual = std::max(sr.max_residual, cas.residual);
        ++sr.cascades;
        double seed_sum = 0.0;
        for (double s : seed) seed_sum += s;
        if (seed_sum > 0.0) sr.max_amp = std::max(sr.max_amp, cas.amplification);
        if (cas.flagged && !sr.any_flag) {
            sr.any_flag = true;
            sr.first_flag_dl = 0.0;
            for (double d : cas.dl) sr.first_flag_dl += d;
            sr.first_flag_mass_before = mass_before;
            sr.first_flag_immediate = step == 0;
        }
        apply_feedback(field, spec, cas.dl);
        field.t += dt;
        ++step;
    }
    return sr;
}

double g_suite_max_residual = 0.0;
int g_suite_cascades = 0;

Outcome criterion2() {
    Outcome out;

    ModelSpec stable = testsup::homogeneous(1.0, InitialDensity::uniform(0.0, 2.0), 0.5);
    SolverParams sp;
    sp.grid = Grid::make(2e-3, 4.0);
    sp.dt = 1e-3;
    SteppedRun s = step_through(stable, sp);
    g_suite_max_residual = std::max(g_suite_max_residual, s.max_residual);
    g_suite_cascades += s.cascades;

    ModelSpec unstable = testsup::homogeneous(1.0, InitialDensity::uniform(0.0, 0.5), 0.1);
    SolverParams up;
    up.grid = Grid::make(1e-3, 1.5);
    up.dt = 1e-3;
    SteppedRun u = step_through(unstable, up);
    g_suite_max_residual = std::max(g_suite_max_residual, u.max_residual);
    g_suite_cascades += u.cascades;

    double cell2 = 2.0 * up.grid.h * 2.0; // two grid cells at the initial sup
    bool stable_ok = !s.any_flag && s.max_amp <= 2.0 + 1e-6;
    bool unstable_ok = u.any_flag && u.first_flag_immediate &&
                       std::abs(u.first_flag_dl - u.first_flag_mass_before) <= cell2;
    out.pass = stable_ok && unstable_ok;
    std::ostringstream os;
    os << "stable max dl/seed " << s.max_amp << ", unstable jump " << u.first_flag_dl
       << " vs mass " << u.first_flag_mass_before;
    out.detail = os.str();
    return out;
}

Outcome criterion3() {
    Outcome out;

    // two further regimes so the residual sweep covers log1p, multi-type and
    // the eps-amended system
    ModelSpec two;
    two.dist.k = 2;
    two.dist.atoms.push_back({{1.0, 0.2}, {0.6, 0.1}, 0.4, "core"});
    two.dist.atoms.push_back({{0.3, 0.8}, {0.2, 0.5}, 0.6, "periphery"});
    two.coef.loss = LossTransform::log1p_scaled(1.0);
    two.coef.g = {FeedbackWeight::constant(1.0), FeedbackWeight::exp_decay(1.0, 0.5)};
    two.coef.drift = {TimeCoef::constant(0.0), TimeCoef::constant(0.1)};
    two.coef.vol = {TimeCoef::constant(1.0), TimeCoef::constant(0.8)};
    two.coef.vol_lo = 0.25;
    two.coef.vol_hi = 4.0;
    two.initial = {InitialDensity::uniform(0.0, 2.0), InitialDensity::power_ramp(0.5, 1.5)};
    two.horizon = 0.4;

    SolverParams sp;
    sp.grid = Grid::make(4e-3, 4.0);
    sp.dt = 1e-3;
    SteppedRun r = step_through(two, sp);
    g_suite_max_residual = std::max(g_suite_max_residual, r.max_residual);
    g_suite_cascades += r.cascades;

    MfRunResult eps = solve_eps_approx(testsup::homogeneous(0.6, InitialDensity::uniform(0.0, 2.0), 0.3),
                                       0.05, sp);
    (void)eps;

    out.pass = g_suite_cascades > 500 && g_suite_max_residual < 1e-10;
    std::ostringstream os;
    os << "max residual " << g_suite_max_residual << " over " << g_suite_cascades << " cascades";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 4: first-passage validation
// ---------------------------------------------------------------------------

Outcome criterion4() {
    Outcome out;

    // level check on the validation-suite kernel (images)
    FpValidationParams ip;
    ip.kernel = KernelMode::images;
    FpValidationReport images = fp_validation(ip);
    double err_images = std::abs(images.absorbed.back() - images.exact.back());

    // order check on the default first-order kernel: the error must halve
    // (+-30%) under (h, dt) -> (h/2, dt/4)
    FpValidationParams tp = ip;
    tp.kernel = KernelMode::truncate;
    tp.times = {0.25};
    FpValidationReport t0 = fp_validation(tp);
    tp.h /= 2.0;
    tp.dt /= 4.0;
    FpValidationReport t1 = fp_validation(tp);
    double e0 = std::abs(t0.absorbed.back() - t0.exact.back());
    double e1 = std::abs(t1.absorbed.back() - t1.exact.back());
    double ratio = e1 / e0;

    bool level_ok = err_images < 1e-3;
    bool halving_ok = ratio >= 0.35 && ratio <= 0.65;
    out.pass = level_ok && halving_ok;
    std::ostringstream os;
    os << "images err " << err_images << "; truncate err " << e0 << " -> " << e1
       << " (ratio " << ratio << ")";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 5: smallness regime dichotomy over randomized specs
// ---------------------------------------------------------------------------

ModelSpec random_spec(Rng& rng, double b_target, bool concentrated) {
    ModelSpec spec;
    int k = 1 + (rng.uniform() < 0.4 ? 1 : 0);
    int na = 1 + static_cast<int>(rng.uniform() * (concentrated ? 2.0 : 3.0));
    spec.dist.k = k;
    std::vector<double> widths;
    double prem = 1.0;
    for (int a = 0; a < na; ++a) {
        TypeAtom atom;
        for (int l = 0; l < k; ++l) {
            atom.u.push_back(concentrated ? 0.5 + 0.5 * rng.uniform() : 0.3 + 0.9 * rng.uniform());
            atom.v.push_back(concentrated ? 0.8 + 0.7 * rng.uniform() : 0.7 + 0.6 * rng.uniform());
        }
        atom.p = a + 1 == na ? prem : prem * (0.3 + 0.4 * rng.uniform());
        prem -= atom.p;
        spec.dist.atoms.push_back(atom);
        spec.coef.g.push_back(FeedbackWeight::constant(concentrated ? 0.8 + 0.7 * rng.uniform()
                                                                    : 0.7 + 0.6 * rng.uniform()));
        spec.coef.drift.push_back(TimeCoef::constant(0.0));
        spec.coef.vol.push_back(TimeCoef::constant(1.0));
        widths.push_back(1.0 + rng.uniform());
        spec.initial.push_back(InitialDensity::uniform(0.0, widths.back()));
    }
    spec.coef.vol_lo = 0.25;
    spec.coef.vol_hi = 4.0;
    spec.coef.loss = concentrated || rng.uniform() < 0.5
                         ? LossTransform::identity()
                         : LossTransform::log1p_scaled(0.8 + 0.4 * rng.uniform());
    spec.horizon = concentrated ? 0.1 : 0.5;

    // rescale every width by a common factor so the bound hits the target
    double b_raw = check_smallness(spec).bound;
    double factor = b_raw / b_target; // widths shrink when the bound must grow
    for (int a = 0; a < na; ++a)
        spec.initial[a] = InitialDensity::uniform(0.0, widths[a] * factor);
    return spec;
}

Outcome criterion5() {
    Outcome out;
    Rng rng(555, 0);

    int small_flags = 0;
    double max_bound_small = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        double target = 0.3 + 0.55 * rng.uniform(); // < 0.85
        ModelSpec spec = random_spec(rng, target, false);
        double bound = check_smallness(spec).bound;
        max_bound_small = std::max(max_bound_small, bound);
        if (bound >= 0.9 || !validate_model(spec).ok()) {
            out.detail = "generator produced an out-of-regime spec";
            return out;
        }
        double xmax = 0.0;
        for (const auto& d : spec.initial) xmax = std::max(xmax, d.support_max());
        SolverParams sp;
        sp.grid = Grid::make(4e-3, xmax + 3.0);
        sp.dt = 5e-5;
        MfRunResult run = solve(spec, sp);
        for (const auto& rec : run.jump_log)
            if (rec.flagged) ++small_flags;
    }

    int big_with_flag = 0;
    for (int trial = 0; trial < 10; ++trial) {
        double target = 3.5 + 4.0 * rng.uniform();
        ModelSpec spec = random_spec(rng, target, true);
        double bound = check_smallness(spec).bound;
        if (bound <= 3.0 || !validate_model(spec).ok()) {
            out.detail = "generator missed the unstable regime";
            return out;
        }
        double xmax = 0.0;
        for (const auto& d : spec.initial) xmax = std::max(xmax, d.support_max());
        SolverParams sp;
        sp.grid = Grid::make(1e-3, xmax + 1.5);
        sp.dt = 1e-4;
        MfRunResult run = solve(spec, sp);
        bool flagged = false;
        for (const auto& rec : run.jump_log)
            if (rec.flagged) flagged = true;
        if (flagged) ++big_with_flag;
    }

    out.pass = small_flags == 0 && big_with_flag == 10;
    std::ostringstream os;
    os << "no jumps in 20/20 small-bound specs (max B " << max_bound_small << "); jumps in "
       << big_with_flag << "/10 large-bound specs";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 6: particle-to-mean-field convergence
// ---------------------------------------------------------------------------

Outcome criterion6() {
    Outcome out;
    ModelSpec spec = testsup::homogeneous(0.4, InitialDensity::uniform(0.0, 2.0), 1.0);
    ConvergenceParams p;
    p.n_ladder = {500, 2000, 8000};
    p.seeds = 20;
    p.master_seed = 1;
    p.particle_dt = 2e-3;
    p.solver.grid = Grid::make(2e-3, 6.0);
    p.solver.dt = 1e-3;
    p.solver.kernel = KernelMode::images;
    p.output_points = 50;
    p.threshold = 0.05;
    p.jobs = 2;
    ConvergenceReport rep = convergence_study(spec, p);
    bool strict = rep.valid && rep.median_err.size() == 3 &&
                  rep.median_err[1] < rep.median_err[0] && rep.median_err[2] < rep.median_err[1] &&
                  rep.median_err[2] < 0.05;
    out.pass = strict;
    std::ostringstream os;
    os << "medians " << rep.median_err[0] << " > " << rep.median_err[1] << " > " << rep.median_err[2];
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 7: eps-removal domination
// ---------------------------------------------------------------------------

Outcome criterion7() {
    Outcome out;
    ModelSpec spec = testsup::homogeneous(0.5, InitialDensity::uniform(0.0, 2.0), 0.5);
    DominationParams p;
    p.eps_ladder = {0.1, 0.05, 0.025};
    p.solver.grid = Grid::make(4e-3, 4.0);
    p.solver.dt = 2e-3;
    p.output_points = 50;
    p.jobs = 2;
    DominationReport rep = domination_study(spec, p);
    bool shrink = rep.envelope[2] < 0.75 * rep.envelope[0];
    out.pass = rep.domination_ok && rep.env_monotone && shrink;
    std::ostringstream os;
    os << "envelope " << rep.envelope[0] << " -> " << rep.envelope[1] << " -> " << rep.envelope[2]
       << ", worst gap " << rep.worst_gap;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 8: regularity envelope for a boundary-decaying start
// ---------------------------------------------------------------------------

double envelope_k_fit(double h, double dt) {
    ModelSpec spec = testsup::homogeneous(0.0, InitialDensity::power_ramp(0.5, 1.0), 0.12);
    spec.dist.atoms[0].v[0] = 0.0;
    SolverParams p;
    p.grid = Grid::make(h, 2.0);
    p.dt = dt;
    p.kernel = KernelMode::images;
    MfRunResult run = solve(spec, p);
    // slice to s <= 0.1
    std::vector<double> times;
    std::vector<std::vector<double>> loss;
    std::vector<char> flags;
    for (std::size_t m = 0; m < run.times.size() && run.times[m] <= 0.1 + 1e-12; ++m) {
        times.push_back(run.times[m]);
        loss.push_back(run.loss[m]);
        flags.push_back(run.jump_flag[m]);
    }
    return regularity_envelope(times, loss, flags, 0.5).k_fit;
}

Outcome criterion8() {
    Outcome out;
    double k_coarse = envelope_k_fit(1e-3, 2e-4);
    double k_fine = envelope_k_fit(5e-4, 1e-4);

    // independent reference: numerical derivative of the closed-form
    // absorbed mass for V0(x) = 1.5 sqrt(x) on (0, 1], weighted by s^(1/4)
    InitialDensity ramp = InitialDensity::power_ramp(0.5, 1.0);
    double k_ref = 0.0;
    for (double s : {0.002, 0.005, 0.01, 0.02, 0.05, 0.09}) {
        double ds = 1e-4 * s;
        double dl = (testsup::absorbed_density(ramp, 1.0, s + ds, 20000) -
                     testsup::absorbed_density(ramp, 1.0, s - ds, 20000)) / (2.0 * ds);
        k_ref = std::max(k_ref, dl * std::pow(s, 0.25));
    }

    bool stable = std::abs(k_fine - k_coarse) <= 0.2 * k_coarse;
    bool bounded = k_coarse > 0.0 && std::abs(k_coarse - k_ref) <= 0.25 * k_ref;
    out.pass = stable && bounded;
    std::ostringstream os;
    os << "K_fit " << k_coarse << " -> " << k_fine << " (closed-form reference " << k_ref << ")";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 9: physical-jump cross-check over randomized unstable starts
// ---------------------------------------------------------------------------

Outcome criterion9() {
    Outcome out;
    Rng rng(909, 0);
    int agreed = 0;
    for (int trial = 0; trial < 10; ++trial) {
        double b = 0.2 + 0.4 * rng.uniform();
        double alpha = (1.3 + 1.7 * rng.uniform()) * b; // alpha * sup > 1.3
        InitialDensity init =
            trial % 3 == 2
                ? InitialDensity::table({0.0, 0.5 * b, b}, {2.0 + rng.uniform(), 1.0, 0.2})
                : InitialDensity::uniform(0.0, b);
        if (trial % 3 == 2) alpha = (1.3 + 1.7 * rng.uniform()) / init.pdf(0.0);
        ModelSpec spec = testsup::homogeneous(alpha, init, 0.2);
        SolverParams sp;
        sp.grid = Grid::make(1e-3, std::max(1.5, 3.0 * b));
        sp.dt = 1e-3;
        CrosscheckReport rep = physical_jump_crosscheck(spec, sp);
        if (rep.applicable && rep.pass) ++agreed;
        else {
            std::ostringstream os;
            os << "trial " << trial << (rep.applicable ? " disagreed by " : " produced no jump ")
               << (rep.applicable ? std::to_string(rep.gap) : "");
            out.detail = os.str();
            return out;
        }
    }
    out.pass = agreed == 10;
    out.detail = "10/10 jumps matched the direct computation";
    return out;
}

// ---------------------------------------------------------------------------
// criterion 10: CLI determinism across worker counts
// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const std::string& out_dir) {
    std::string cmd = "\"" + g_cli + "\" --out \"" + out_dir + "\" " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool compare_run_dirs(const fs::path& a, const fs::path& b, std::string& why) {
    // every artifact except the manifest and the echoed config (whose jobs
    // field legitimately differs) must be byte-identical
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) {
        std::string n = e.path().filename().string();
        if (n == "manifest.json" || n == "effective_config.txt") continue;
        names.push_back(n);
    }
    if (names.empty()) {
        why = "no artifacts";
        return false;
    }
    for (const auto& n : names) {
        if (!fs::exists(b / n)) {
            why = n + " missing in second run";
            return false;
        }
        if (read_text_file((a / n).string()) != read_text_file((b / n).string())) {
            why = n + " differs";
            return false;
        }
    }
    return true;
}

fs::path sole_subdir(const fs::path& root) {
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) return e.path();
    throw std::runtime_error("no run directory under " + root.string());
}

Outcome criterion10() {
    Outcome out;
    if (g_cli.empty()) {
        out.detail = "no --cli path given";
        return out;
    }
    fs::path tmp = fs::current_path() / "acceptance_runs";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    struct Case { std::string name; std::string args; };
    std::string cfg = g_src + "/configs/";
    std::vector<Case> cases = {
        {"validate", "--config " + cfg + "homogeneous.toml --seed 7 validate"},
        {"check-smallness", "--config " + cfg + "homogeneous.toml --seed 7 check-smallness"},
        {"simulate-particles",
         "--config " + cfg + "homogeneous.toml --seed 7 --set particle.n=500 --set model.horizon=0.5 simulate-particles"},
        {"solve-meanfield",
         "--config " + cfg + "homogeneous.toml --seed 7 --set solver.dt=0.002 solve-meanfield"},
        {"converge",
         "--config " + cfg + "convergence.toml --seed 3 --set study.n_ladder=[100,400] --set study.seeds=4"
         " --set solver.h=0.005 --set solver.dt=0.0025 --set particle.dt=0.005 converge"},
        {"dominate", "--config " + cfg + "domination.toml --seed 5 dominate"},
        {"crosscheck-jump", "--config " + cfg + "crosscheck.toml --seed 5 crosscheck-jump"},
        {"risk", "--config " + cfg + "core_periphery.toml --seed 11 --set study.scenarios=40 risk"},
        {"fp-validate",
         "--config " + cfg + "fp_validate.toml --seed 1 --set study.fp_dt=4e-4 --set study.fp_h=0.004 fp-validate"},
    };

    for (const auto& c : cases) {
        fs::path da = tmp / (c.name + "-a");
        fs::path db = tmp / (c.name + "-b");
        fs::create_directories(da);
        fs::create_directories(db);
        int ra = run_cli(c.args + " --jobs 1", da.string());
        int rb = run_cli(c.args + " --jobs 4", db.string());
        if (ra < 0 || ra == 1 || ra == 64 || ra != rb) {
            out.detail = c.name + " exit codes " + std::to_string(ra) + "/" + std::to_string(rb);
            return out;
        }
        std::string why;
        if (!compare_run_dirs(sole_subdir(da), sole_subdir(db), why)) {
            out.detail = c.name + ": " + why;
            return out;
        }
    }
    out.pass = true;
    out.detail = std::to_string(cases.size()) + " subcommands byte-identical across --jobs 1/4";
    fs::remove_all(tmp);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        std::string a = argv[i];
        if (a == "--cli") g_cli = argv[i + 1];
        if (a == "--src") g_src = argv[i + 1];
    }
    if (g_src.empty()) g_src = ".";

    struct Entry {
        int id;
        const char* name;
        Outcome (*fn)();
        double budget_s;
    };
    std::vector<Entry> entries = {
        {1, "cascade oracles (exact)", criterion1, 10},
        {2, "mean-field stability dichotomy", criterion2, 5},
        {3, "cascade fixed-point identity", criterion3, 0},
        {4, "first-passage validation", criterion4, 30},
        {5, "smallness regime dichotomy", criterion5, 120},
        {6, "particle-to-mean-field convergence", criterion6, 600},
        {7, "eps-domination", criterion7, 60},
        {8, "regularity envelope", criterion8, 60},
        {9, "physical-jump cross-check", criterion9, 60},
        {10, "CLI determinism", criterion10, 0},
    };

    for (const auto& e : entries) {
        double t0 = now_s();
        Outcome out;
        try {
            out = e.fn();
        } catch (const std::exception& ex) {
            out.pass = false;
            out.detail = std::string("exception: ") + ex.what();
        }
        report(e.id, e.name, out, now_s() - t0, e.budget_s);
    }

    if (g_failures == 0) std::printf("acceptance: all criteria passed\n");
    else std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
