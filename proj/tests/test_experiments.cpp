#include "doctest.h"

#include <cmath>

#include "cmv/experiments.hpp"
#include "support.hpp"

using namespace cmv;

TEST_CASE("convergence study: ladder of one reports insufficient ladder") {
    ModelSpec spec = testsup::homogeneous(0.4, InitialDensity::uniform(0.0, 2.0), 0.25);
    ConvergenceParams p;
    p.n_ladder = {200};
    p.seeds = 3;
    p.particle_dt = 5e-3;
    p.solver.grid = Grid::make(5e-3, 4.0);
    p.solver.dt = 2.5e-3;
    p.solver.kernel = KernelMode::images;
    p.output_points = 20;
    ConvergenceReport rep = convergence_study(spec, p);
    CHECK(rep.verdict == "insufficient ladder");
    CHECK_FALSE(rep.pass);
    CHECK(rep.median_err.size() == 1);
}

TEST_CASE("convergence study: decoupled errors shrink like n^{-1/2}") {
    ModelSpec spec = testsup::homogeneous(0.0, InitialDensity::uniform(0.0, 2.0), 0.5);
    spec.dist.atoms[0].v[0] = 0.0;
    ConvergenceParams p;
    p.n_ladder = {500, 2000, 8000};
    p.seeds = 15;
    p.particle_dt = 5e-3;
    p.master_seed = 3;
    p.solver.grid = Grid::make(2e-3, 4.5);
    p.solver.dt = 1e-3;
    p.solver.kernel = KernelMode::images;
    p.output_points = 25;
    p.jobs = 2;
    ConvergenceReport rep = convergence_study(spec, p);
    REQUIRE(rep.valid);
    CHECK(rep.pass);
    // pure empirical-CDF error: comfortably small at the top of the ladder
    CHECK(rep.median_err.back() < 0.02);
    // log-log slope across the 16x ladder should sit near -1/2
    double slope = std::log(rep.median_err.back() / rep.median_err.front()) /
                   std::log(static_cast<double>(p.n_ladder.back()) / p.n_ladder.front());
    CHECK(slope > -0.65);
    CHECK(slope < -0.35);

    std::vector<int> bad = {500, 500};
    p.n_ladder = bad;
    CHECK_THROWS(convergence_study(spec, p));
}

TEST_CASE("convergence study is a pure function of its inputs") {
    ModelSpec spec = testsup::homogeneous(0.4, InitialDensity::uniform(0.0, 2.0), 0.25);
    ConvergenceParams p;
    p.n_ladder = {100, 400};
    p.seeds = 4;
    p.particle_dt = 5e-3;
    p.solver.grid = Grid::make(5e-3, 4.0);
    p.solver.dt = 2.5e-3;
    p.output_points = 10;
    ConvergenceReport a = convergence_study(spec, p);
    p.jobs = 2;
    ConvergenceReport b = convergence_study(spec, p);
    CHECK(a.per_seed_err == b.per_seed_err);
    CHECK(a.median_err == b.median_err);
}

TEST_CASE("domination study on a stable homogeneous spec") {
    ModelSpec spec = testsup::homogeneous(0.5, InitialDensity::uniform(0.0, 2.0), 0.4);
    DominationParams p;
    p.eps_ladder = {0.1, 0.05, 0.025};
    p.solver.grid = Grid::make(4e-3, 4.0);
    p.solver.dt = 2e-3;
    p.output_points = 25;
    p.jobs = 2;
    DominationReport rep = domination_study(spec, p);
    CHECK(rep.domination_ok);
    CHECK(rep.env_monotone);
    CHECK(rep.pass);
    CHECK(rep.envelope.front() > rep.envelope.back());
    CHECK(rep.t0 == doctest::Approx(0.4));
}

TEST_CASE("domination study: single-entry ladder is insufficient") {
    ModelSpec spec = testsup::homogeneous(0.5, InitialDensity::uniform(0.0, 2.0), 0.2);
    DominationParams p;
    p.eps_ladder = {0.1};
    p.solver.grid = Grid::make(5e-3, 4.0);
    p.solver.dt = 2e-3;
    DominationReport rep = domination_study(spec, p);
    CHECK(rep.verdict == "insufficient ladder");
}

TEST_CASE("physical jump cross-check on the worked stable/unstable pair") {
    SolverParams sp;
    sp.grid = Grid::make(1e-3, 1.5);
    sp.dt = 1e-3;

    // density 0.5 on [0,2]: no jump, not applicable
    ModelSpec stable = testsup::homogeneous(1.0, InitialDensity::uniform(0.0, 2.0), 0.2);
    sp.grid = Grid::make(2e-3, 4.0);
    CrosscheckReport rep = physical_jump_crosscheck(stable, sp);
    CHECK_FALSE(rep.applicable);

    // density 2 on [0,0.5]: the whole state collapses and both computations agree
    ModelSpec unstable = testsup::homogeneous(1.0, InitialDensity::uniform(0.0, 0.5), 0.2);
    sp.grid = Grid::make(1e-3, 1.5);
    rep = physical_jump_crosscheck(unstable, sp);
    REQUIRE(rep.applicable);
    CHECK(rep.pass);
    CHECK(rep.direct_jump_mass == doctest::Approx(1.0).epsilon(2e-2));

    // alpha = 0 never jumps
    ModelSpec zero = testsup::homogeneous(0.0, InitialDensity::uniform(0.0, 0.5), 0.1);
    rep = physical_jump_crosscheck(zero, sp);
    CHECK_FALSE(rep.applicable);
}

namespace {

ModelSpec core_periphery(double rho) {
    ModelSpec spec;
    spec.dist.k = 1;
    spec.dist.atoms.push_back({{1.0}, {0.8}, 0.3, "core"});
    spec.dist.atoms.push_back({{0.4}, {0.5}, 0.7, "periphery"});
    spec.coef.g = {FeedbackWeight::constant(1.0), FeedbackWeight::constant(1.0)};
    spec.coef.drift = {TimeCoef::constant(0.0), TimeCoef::constant(0.0)};
    spec.coef.vol = {TimeCoef::constant(1.0), TimeCoef::constant(1.0)};
    spec.coef.vol_lo = 0.25;
    spec.coef.vol_hi = 4.0;
    spec.coef.rho = rho;
    spec.initial = {InitialDensity::uniform(0.0, 2.0), InitialDensity::uniform(0.2, 2.2)};
    spec.horizon = 0.5;
    return spec;
}

} // namespace

TEST_CASE("risk study: rho = 0 degenerates to a deterministic table") {
    RiskParams p;
    p.scenarios = 40;
    p.q = 0.9;
    p.solver.grid = Grid::make(5e-3, 4.5);
    p.solver.dt = 2e-3;
    p.jobs = 2;
    RiskReport rep = risk_study(core_periphery(0.0), p);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.ok);
    // all scenarios identical: conditional equals unconditional
    CHECK(rep.rows[0].var_cond == doctest::Approx(rep.rows[0].var_uncond));
    CHECK(rep.rows[0].es_cond == doctest::Approx(rep.rows[0].es_uncond));
    double v0 = rep.periphery_loss.front();
    for (double v : rep.periphery_loss) CHECK(v == doctest::Approx(v0));
}

TEST_CASE("risk study: ES dominates VaR and conditioning selects the tail") {
    RiskParams p;
    p.scenarios = 60;
    p.q = 0.9;
    p.solver.grid = Grid::make(5e-3, 4.5);
    p.solver.dt = 2e-3;
    p.jobs = 2;
    RiskReport rep = risk_study(core_periphery(0.5), p);
    CHECK(rep.conditional_size == 6);
    CHECK(rep.ok);
    for (const auto& r : rep.rows) {
        CHECK(r.es_uncond >= r.var_uncond);
        CHECK(r.es_cond >= r.var_cond);
    }
    // common noise makes scenarios genuinely different
    double lo = *std::min_element(rep.periphery_loss.begin(), rep.periphery_loss.end());
    double hi = *std::max_element(rep.periphery_loss.begin(), rep.periphery_loss.end());
    CHECK(hi > lo);

    CHECK_THROWS(risk_study(core_periphery(0.5), [&] {
        RiskParams bad = p;
        bad.scenarios = 5; // fewer than 1/(1-q)
        return bad;
    }()));
}

TEST_CASE("risk study: trivial partition is rejected") {
    RiskParams p;
    p.scenarios = 40;
    p.solver.grid = Grid::make(5e-3, 4.5);
    p.solver.dt = 2e-3;
    ModelSpec all_core = core_periphery(0.0);
    all_core.dist.atoms[1].label = "core";
    CHECK_THROWS(risk_study(all_core, p));
}

TEST_CASE("paired common-noise convergence study") {
    ModelSpec spec = testsup::homogeneous(0.3, InitialDensity::uniform(0.0, 2.0), 0.5, 0.5);
    ConvergenceParams p;
    p.n_ladder = {200, 1600};
    p.seeds = 6;
    p.master_seed = 12;
    p.particle_dt = 2.5e-3;
    p.solver.grid = Grid::make(4e-3, 4.5);
    p.solver.dt = 2.5e-3; // must match the particle step for shared paths
    p.output_points = 20;
    p.jobs = 2;
    ConvergenceReport rep = convergence_study(spec, p);
    REQUIRE(rep.valid);
    CHECK(rep.median_err.back() < rep.median_err.front());
    CHECK(rep.median_err.back() < 0.1);

    p.solver.dt = 1e-3; // mismatched steps cannot share a path
    CHECK_THROWS(convergence_study(spec, p));
}

TEST_CASE("eps jump ladder extrapolates toward the base jump") {
    ModelSpec spec = testsup::homogeneous(1.0, InitialDensity::uniform(0.0, 0.5), 0.1);
    SolverParams sp;
    sp.grid = Grid::make(1e-3, 1.5);
    sp.dt = 1e-3;
    MfRunResult base = solve(spec, sp);
    REQUIRE_FALSE(base.jump_log.empty());
    double base_jump = 0.0;
    for (double d : base.jump_log.front().dl) base_jump += d;

    JumpLadderReport rep = eps_jump_diagnostic(spec, sp, 0.08, 4);
    CHECK(rep.all_jumped);
    REQUIRE(rep.jump.size() == 4);
    CHECK(std::abs(rep.extrapolated - base_jump) < 0.05);
    // ladder values approach the base jump
    CHECK(std::abs(rep.jump.back() - base_jump) <= std::abs(rep.jump.front() - base_jump) + 1e-12);
}

TEST_CASE("risk study: unexposed periphery equals the fully decoupled run") {
    // periphery with v = 0 never feels the contagion, so its per-scenario
    // losses must match a comparison run whose core has no impact either
    ModelSpec exposed = core_periphery(0.5);
    exposed.dist.atoms[1].v = {0.0};
    ModelSpec decoupled = exposed;
    decoupled.dist.atoms[0].u = {0.0};
    decoupled.dist.atoms[1].u = {0.0};

    RiskParams p;
    p.scenarios = 20;
    p.q = 0.8;
    p.solver.grid = Grid::make(5e-3, 4.5);
    p.solver.dt = 2e-3;
    p.jobs = 2;
    RiskReport a = risk_study(exposed, p);
    RiskReport b = risk_study(decoupled, p);
    for (int s = 0; s < p.scenarios; ++s)
        CHECK(a.periphery_loss[s] == doctest::Approx(b.periphery_loss[s]).epsilon(1e-12));
}

TEST_CASE("fp validation smoke run") {
    FpValidationParams p;
    p.h = 4e-3;
    p.dt = 4e-4;
    p.x_max = 3.0;
    p.times = {0.1, 0.25};
    FpValidationReport rep = fp_validation(p);
    REQUIRE(rep.times.size() == 2);
    CHECK(rep.exact.back() == doctest::Approx(0.0455).epsilon(2e-2));
    CHECK(rep.max_abs_err < 5e-4);
    // t -> 0 and far starts
    FpValidationParams far = p;
    far.x0 = 2.9 - 0.5;
    far.times = {0.01};
    FpValidationReport frep = fp_validation(far);
    CHECK(frep.absorbed[0] < 1e-8);
}

TEST_CASE("parallel_for_index covers every index exactly once") {
    std::vector<int> hits(257, 0);
    parallel_for_index(4, 257, [&](int i) { hits[i]++; });
    for (int h : hits) CHECK(h == 1);
}
