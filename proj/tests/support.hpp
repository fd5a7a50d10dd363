#pragma once

// Shared test fixtures and independent oracles. Everything here is
// deliberately written from scratch against the definitions, not by
// calling the library code under test.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cmv/model.hpp"
#include "cmv/particle.hpp"

namespace testsup {

/// Homogeneous spec: k = 1, single atom (u = 1, v = alpha), identity F,
/// constant g = 1, b = 0, sigma = 1.
inline cmv::ModelSpec homogeneous(double alpha, cmv::InitialDensity init, double horizon = 1.0,
                                  double rho = 0.0) {
    cmv::ModelSpec spec;
    spec.dist.k = 1;
    spec.dist.atoms.push_back({{1.0}, {alpha}, 1.0, "core"});
    spec.coef.g = {cmv::FeedbackWeight::constant(1.0)};
    spec.coef.drift = {cmv::TimeCoef::constant(0.0)};
    spec.coef.vol = {cmv::TimeCoef::constant(1.0)};
    spec.coef.vol_lo = 0.25;
    spec.coef.vol_hi = 4.0;
    spec.coef.rho = rho;
    spec.initial = {std::move(init)};
    spec.horizon = horizon;
    return spec;
}

/// P(min over [0,t] <= 0) for Brownian motion with diffusion sigma from x0.
inline double absorbed_point(double x0, double sigma, double t) {
    if (t <= 0.0) return 0.0;
    return std::erfc(x0 / (sigma * std::sqrt(2.0 * t)));
}

/// Same with constant drift mu.
inline double absorbed_point_drift(double x0, double mu, double sigma, double t) {
    if (t <= 0.0) return 0.0;
    auto ncdf = [](double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); };
    double s = sigma * std::sqrt(t);
    return ncdf((-x0 - mu * t) / s) + std::exp(-2.0 * mu * x0 / (sigma * sigma)) * ncdf((-x0 + mu * t) / s);
}

/// Absorbed probability by t for an initial density, by quadrature over
/// the reflection-principle closed form.
inline double absorbed_density(const cmv::InitialDensity& d, double sigma, double t, int nq = 4000) {
    double lo = d.support_min(), hi = d.support_max();
    double s = 0.0;
    for (int i = 0; i < nq; ++i) {
        double x0 = lo + (hi - lo) * (i + 0.5) / nq;
        s += d.pdf(x0) * absorbed_point(x0, sigma, t);
    }
    return s * (hi - lo) / nq;
}

/// Asymptotic Kolmogorov-Smirnov p-value for statistic d at sample size n.
inline double ks_pvalue(double d, std::size_t n) {
    double lambda = (std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(static_cast<double>(n))) * d;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j)
        p += 2.0 * (j % 2 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

/// KS statistic of samples against a cdf.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    std::size_t n = xs.size();
    for (std::size_t i = 0; i < n; ++i) {
        double f = cdf(xs[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return d;
}

/// A frozen cascade instance for the brute-force clearing oracle.
struct CascadeInstance {
    int k = 1;
    std::vector<double> x;                   // positions at t-
    std::vector<char> alive;
    std::vector<std::vector<double>> u, v;   // per particle
    std::vector<double> feedback_int;        // I_j
    std::vector<double> g;                   // g_j(t)
    const cmv::LossTransform* loss = nullptr;
};

/// Membership map: D -> set of particles forced under by D (self excluded).
inline std::set<int> cascade_map(const CascadeInstance& inst, const std::set<int>& d) {
    int n = static_cast<int>(inst.x.size());
    std::vector<double> dl(inst.k, 0.0);
    for (int j : d)
        for (int l = 0; l < inst.k; ++l) dl[l] += inst.u[j][l];
    for (int l = 0; l < inst.k; ++l) dl[l] /= n;

    std::set<int> out;
    for (int j = 0; j < n; ++j) {
        if (!inst.alive[j]) continue;
        if (inst.x[j] <= 0.0) { out.insert(j); continue; }
        double f = 0.0;
        for (int l = 0; l < inst.k; ++l) {
            double own = d.count(j) ? inst.u[j][l] / n : 0.0;
            f += inst.v[j][l] * (dl[l] - own);
        }
        double theta = (*inst.loss)(inst.feedback_int[j] + inst.g[j] * f) - (*inst.loss)(inst.feedback_int[j]);
        if (inst.x[j] - theta <= 0.0) out.insert(j);
    }
    return out;
}

/// Exhaustive clearing oracle for n <= ~16: enumerates every subset of the
/// alive particles, keeps the consistent (fixed-point) ones and returns the
/// smallest - the greatest clearing solution. Asserts it is contained in
/// every other fixed point.
inline std::set<int> brute_force_cascade(const CascadeInstance& inst, bool* unique_minimal = nullptr) {
    int n = static_cast<int>(inst.x.size());
    std::vector<int> candidates;
    for (int j = 0; j < n; ++j)
        if (inst.alive[j]) candidates.push_back(j);
    int m = static_cast<int>(candidates.size());

    std::vector<std::set<int>> fixed_points;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        std::set<int> d;
        for (int b = 0; b < m; ++b)
            if (mask & (1u << b)) d.insert(candidates[b]);
        if (cascade_map(inst, d) == d) fixed_points.push_back(d);
    }
    std::set<int> best;
    bool have = false;
    for (const auto& fp : fixed_points) {
        if (!have || fp.size() < best.size()) { best = fp; have = true; }
    }
    if (unique_minimal) {
        *unique_minimal = true;
        for (const auto& fp : fixed_points)
            if (!std::includes(fp.begin(), fp.end(), best.begin(), best.end())) *unique_minimal = false;
    }
    return best;
}

} // namespace testsup
