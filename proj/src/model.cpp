#include "cmv/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cmv {

namespace {

double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return std::sqrt(s);
}

} // namespace

std::vector<double> TypeDistribution::mean_u() const {
    std::vector<double> m(k, 0.0);
    for (const auto& a : atoms)
        for (int l = 0; l < k; ++l) m[l] += a.p * a.u[l];
    return m;
}

std::vector<double> TypeDistribution::mean_v() const {
    std::vector<double> m(k, 0.0);
    for (const auto& a : atoms)
        for (int l = 0; l < k; ++l) m[l] += a.p * a.v[l];
    return m;
}

double ModelSpec::exposure_dot(int atom, const std::vector<double>& x) const {
    const auto& v = dist.atoms[atom].v;
    double s = 0.0;
    for (int l = 0; l < dist.k; ++l) s += v[l] * x[l];
    return s;
}

double ModelSpec::g_meanfield(int atom, double t) const {
    double base = coef.g[atom].at(t);
    if (coef.hook.c == 0.0) return base;
    return base * coef.hook.at(dist.mean_u(), dist.mean_v());
}

std::string ValidationReport::to_string() const {
    if (violations.empty()) return "valid\n";
    std::ostringstream os;
    for (const auto& v : violations) {
        if (v.atom >= 0) os << "atom " << v.atom << ": ";
        os << v.what << " (value " << v.value << ")\n";
    }
    return os.str();
}

ValidationReport validate_model(const ModelSpec& spec) {
    ValidationReport rep;
    auto flag = [&](int atom, const std::string& what, double value) {
        rep.violations.push_back({atom, what, value});
    };

    const auto& atoms = spec.dist.atoms;
    const int k = spec.dist.k;
    const int na = spec.n_atoms();

    if (k <= 0) flag(-1, "contagion dimension k must be positive", k);
    if (na == 0) flag(-1, "type distribution has no atoms", 0);
    if (spec.horizon <= 0.0) flag(-1, "horizon must be positive", spec.horizon);

    double psum = 0.0;
    for (int i = 0; i < na; ++i) {
        const auto& a = atoms[i];
        if (static_cast<int>(a.u.size()) != k) flag(i, "impact vector has wrong dimension", static_cast<double>(a.u.size()));
        if (static_cast<int>(a.v.size()) != k) flag(i, "exposure vector has wrong dimension", static_cast<double>(a.v.size()));
        if (a.p <= 0.0 || a.p > 1.0) flag(i, "probability weight must lie in (0,1]", a.p);
        psum += a.p;
        if (static_cast<int>(a.u.size()) == k && norm2(a.u) > spec.dist.support_bound)
            flag(i, "|u| exceeds declared support bound", norm2(a.u));
        if (static_cast<int>(a.v.size()) == k && norm2(a.v) > spec.dist.support_bound)
            flag(i, "|v| exceeds declared support bound", norm2(a.v));
    }
    if (na > 0 && std::abs(psum - 1.0) > 1e-12) flag(-1, "probability weights do not sum to 1", psum);

    // Cross non-negativity: u_i . v_j >= 0 for every atom pair.
    for (int i = 0; i < na; ++i) {
        for (int j = 0; j < na; ++j) {
            if (static_cast<int>(atoms[i].u.size()) != k || static_cast<int>(atoms[j].v.size()) != k) continue;
            double dot = 0.0;
            for (int l = 0; l < k; ++l) dot += atoms[i].u[l] * atoms[j].v[l];
            if (dot < 0.0) {
                flag(i, "impact/exposure cross product u_" + std::to_string(i) + " . v_" + std::to_string(j) + " is negative", dot);
            }
        }
    }

    // Per-atom coefficient and initial-density vectors must cover every atom.
    if (static_cast<int>(spec.coef.g.size()) != na) flag(-1, "feedback weight preset count does not match atoms", static_cast<double>(spec.coef.g.size()));
    if (static_cast<int>(spec.coef.drift.size()) != na) flag(-1, "drift preset count does not match atoms", static_cast<double>(spec.coef.drift.size()));
    if (static_cast<int>(spec.coef.vol.size()) != na) flag(-1, "volatility preset count does not match atoms", static_cast<double>(spec.coef.vol.size()));
    if (static_cast<int>(spec.initial.size()) != na) flag(-1, "initial density count does not match atoms", static_cast<double>(spec.initial.size()));
    if (!rep.ok()) return rep;

    if (spec.coef.rho < 0.0 || spec.coef.rho >= 1.0) flag(-1, "common-noise correlation must lie in [0,1)", spec.coef.rho);
    if (spec.coef.vol_lo <= 0.0) flag(-1, "declared volatility lower bound must be positive", spec.coef.vol_lo);
    if (spec.coef.vol_hi < spec.coef.vol_lo) flag(-1, "declared volatility bounds are inverted", spec.coef.vol_hi);

    // F on a sample grid: F(0) = 0, non-negative, non-decreasing, and the
    // recorded Lipschitz constant dominates sampled difference quotients.
    {
        const auto& F = spec.coef.loss;
        if (F(0.0) != 0.0) flag(-1, "loss transform violates F(0) = 0", F(0.0));
        const int npts = 10000;
        const double xmax = 10.0;
        double prev = F(0.0);
        for (int i = 1; i <= npts; ++i) {
            double x = xmax * i / npts;
            double y = F(x);
            if (y < 0.0) { flag(-1, "loss transform takes a negative value", y); break; }
            if (y < prev - 1e-14) { flag(-1, "loss transform is decreasing", y - prev); break; }
            if (y - prev > F.lipschitz() * (xmax / npts) * (1.0 + 1e-9)) {
                flag(-1, "loss transform exceeds recorded Lipschitz constant", (y - prev) / (xmax / npts));
                break;
            }
            prev = y;
        }
    }

    const int tpts = 256;
    for (int i = 0; i < na; ++i) {
        // g: non-negative and non-increasing on [0, T]
        double prev = spec.coef.g[i].at(0.0);
        for (int m = 0; m <= tpts; ++m) {
            double t = spec.horizon * m / tpts;
            double gt = spec.coef.g[i].at(t);
            if (gt < 0.0) { flag(i, "feedback weight g is negative", gt); break; }
            if (gt > prev + 1e-14) { flag(i, "feedback weight g is increasing", gt - prev); break; }
            prev = gt;
        }
        // sigma within declared bounds on [0, T]
        for (int m = 0; m <= tpts; ++m) {
            double t = spec.horizon * m / tpts;
            double s = spec.coef.vol[i].at(t);
            if (s < spec.coef.vol_lo - 1e-14 || s > spec.coef.vol_hi + 1e-14) {
                flag(i, "volatility leaves declared bounds", s);
                break;
            }
        }
    }

    // Initial densities: unit mass (numerical quadrature cross-check of the
    // closed forms) and the declared boundary decay when one is claimed.
    for (int i = 0; i < na; ++i) {
        const auto& d = spec.initial[i];
        const int q = 4000;
        double lo = d.support_min(), hi = d.support_max();
        double mass = 0.0;
        for (int m = 0; m < q; ++m) {
            double x0 = lo + (hi - lo) * m / q;
            double x1 = lo + (hi - lo) * (m + 1) / q;
            mass += 0.5 * (d.pdf(x0) + d.pdf(x1)) * (x1 - x0);
        }
        // the trapezoid check is only a sanity net; the exact mass is cdf-based
        if (std::abs(d.cdf(d.support_max()) - 1.0) > 1e-10) flag(i, "initial density mass differs from 1", d.cdf(d.support_max()));
        if (std::abs(mass - 1.0) > 1e-3) flag(i, "initial density quadrature mass differs from 1", mass);
        if (d.beta() > 0.0) {
            double c1 = d.c1(), xs = d.x_star();
            for (int m = 1; m <= 64; ++m) {
                double x = xs * m / 64.0;
                if (d.pdf(x) > c1 * std::pow(x, d.beta()) * (1.0 + 1e-9)) {
                    flag(i, "initial density violates declared boundary decay", d.pdf(x));
                    break;
                }
            }
        }
    }

    return rep;
}

SmallnessReport check_smallness(const ModelSpec& spec) {
    SmallnessReport rep;
    const int k = spec.dist.k;
    const int na = spec.n_atoms();

    // inner sum over atoms: p * g(0) * u_l * ||V0||_inf, per contagion index
    std::vector<double> inner(k, 0.0);
    for (int i = 0; i < na; ++i) {
        double w = spec.dist.atoms[i].p * spec.g_meanfield(i, 0.0) * spec.initial[i].sup_norm();
        for (int l = 0; l < k; ++l) inner[l] += w * spec.dist.atoms[i].u[l];
    }

    double lip = spec.coef.loss.lipschitz();
    rep.bound = 0.0;
    rep.per_atom_margin.resize(na, 1.0);
    for (int i = 0; i < na; ++i) {
        double bv = 0.0;
        for (int l = 0; l < k; ++l) bv += spec.dist.atoms[i].v[l] * inner[l];
        bv *= lip;
        rep.per_atom_margin[i] = 1.0 - bv;
        rep.bound = std::max(rep.bound, bv);
    }
    rep.passes = rep.bound < 1.0;
    return rep;
}

TypeDistribution from_multitype_graph(const std::vector<double>& p,
                                      const std::vector<double>& node_scale,
                                      const std::vector<std::vector<double>>& mu) {
    const int k = static_cast<int>(p.size());
    if (k == 0) throw std::invalid_argument("empty node set");
    if (static_cast<int>(node_scale.size()) != k || static_cast<int>(mu.size()) != k)
        throw std::invalid_argument("graph inputs must all have k entries");

    double psum = 0.0;
    for (double pi : p) {
        if (pi <= 0.0) throw std::invalid_argument("node proportions must be positive");
        psum += pi;
    }
    if (std::abs(psum - 1.0) > 1e-12) throw std::invalid_argument("node proportions must sum to 1");

    for (int i = 0; i < k; ++i) {
        if (node_scale[i] < 0.0) throw std::invalid_argument("node scales must be non-negative");
        if (static_cast<int>(mu[i].size()) != k) throw std::invalid_argument("kernel row has wrong length");
        double rsum = 0.0;
        for (double m : mu[i]) {
            if (m < 0.0) throw std::invalid_argument("kernel entries must be non-negative");
            rsum += m;
        }
        if (std::abs(rsum - 1.0) > 1e-12) throw std::invalid_argument("kernel rows must sum to 1");
    }

    TypeDistribution dist;
    dist.k = k;
    double bound = 0.0;
    for (int i = 0; i < k; ++i) {
        TypeAtom a;
        a.u.assign(k, 0.0);
        a.u[i] = 1.0;
        a.v.resize(k);
        for (int j = 0; j < k; ++j) a.v[j] = node_scale[i] * mu[i][j] / p[j];
        a.p = p[i];
        bound = std::max(bound, std::max(norm2(a.u), norm2(a.v)));
        dist.atoms.push_back(std::move(a));
    }
    dist.support_bound = std::max(1.0, 2.0 * bound);
    return dist;
}

double sample_initial(const InitialDensity& density, Rng& rng) {
    return density.inv_cdf(rng.uniform());
}

Grid Grid::make(double h, double x_max) {
    if (h <= 0.0 || x_max <= h) throw std::invalid_argument("grid needs 0 < h < x_max");
    Grid g;
    g.h = h;
    g.cells = static_cast<int>(std::lround(x_max / h));
    if (g.cells < 2) throw std::invalid_argument("grid has fewer than 2 cells");
    return g;
}

std::vector<double> discretize_initial(const InitialDensity& density, const Grid& grid) {
    double tail = 1.0 - density.cdf(grid.x_max());
    if (tail > 0.01) {
        std::ostringstream os;
        os << "grid truncates " << tail << " of the initial mass; enlarge x_max";
        throw std::invalid_argument(os.str());
    }
    std::vector<double> row(grid.cells, 0.0);
    for (int j = 0; j < grid.cells; ++j)
        row[j] = density.mass_on(grid.cell_lo(j), grid.cell_hi(j)) / grid.h;
    return row;
}

} // namespace cmv
