#pragma once

#include <string>
#include <vector>

#include "cmv/coefficients.hpp"
#include "cmv/initial_density.hpp"
#include "cmv/rng.hpp"

namespace cmv {

/// One type in the (finitely supported) type distribution. u weights the
/// particle's contribution to each of the k contagion processes, v its
/// exposure to them; p is the probability mass of the type.
struct TypeAtom {
    std::vector<double> u;
    std::vector<double> v;
    double p = 0.0;
    std::string label;
};

struct TypeDistribution {
    std::vector<TypeAtom> atoms;
    int k = 0;
    double support_bound = 100.0; // declared bound on |u|, |v|

    std::vector<double> mean_u() const;
    std::vector<double> mean_v() const;
    int size() const { return static_cast<int>(atoms.size()); }
};

/// Full model definition. Coefficient and initial-density vectors are
/// indexed by atom. Immutable once validated; safe to share across workers.
struct ModelSpec {
    TypeDistribution dist;
    CoefficientSet coef;
    std::vector<InitialDensity> initial;
    double horizon = 1.0;

    int k() const { return dist.k; }
    int n_atoms() const { return dist.size(); }
    /// Sum_l v[l] * x[l] for atom i.
    double exposure_dot(int atom, const std::vector<double>& x) const;
    /// g for atom i at time t, including the empirical-mean hook evaluated
    /// at the distribution means (the mean-field convention).
    double g_meanfield(int atom, double t) const;
};

struct Violation {
    int atom = -1; // -1 when not tied to a single atom
    std::string what;
    double value = 0.0;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

/// Checks every model invariant: cross non-negativity of u.v, probability
/// normalization, coefficient monotonicity/bounds on a sample grid, initial
/// density normalization and declared boundary decay. Violations are data,
/// not errors: a syntactically well-formed spec always yields a report.
ValidationReport validate_model(const ModelSpec& spec);

struct SmallnessReport {
    double bound = 0.0;                  // B; uniqueness regime iff B < 1
    bool passes = false;
    std::vector<double> per_atom_margin; // 1 - B_v per exposure atom
};

/// Contraction bound for the uniqueness / no-jump regime:
///   B = max over exposure atoms v of
///       ||F||_Lip * sum_l v_l * sum_atoms p * g(0) * u_l * ||V0||_inf.
/// When every cross product u.v vanishes the bound is 0 and the check
/// passes unconditionally.
SmallnessReport check_smallness(const ModelSpec& spec);

/// Translates a k-node weighted directed graph (node weights p, scales C,
/// row-stochastic kernel mu) into a type distribution: atom i has u = e_i
/// and v_j = C_i * mu_ij / p_j. The weighted exposure identity
/// sum_j v_ij p_j = C_i holds by construction.
TypeDistribution from_multitype_graph(const std::vector<double>& p,
                                      const std::vector<double>& node_scale,
                                      const std::vector<std::vector<double>>& mu);

/// Inverse-CDF draw from an initial density; support is (0, infinity).
double sample_initial(const InitialDensity& density, Rng& rng);

/// Uniform cell grid on (0, x_max]: cell j covers (j*h, (j+1)*h].
struct Grid {
    double h = 0.0;
    int cells = 0;

    static Grid make(double h, double x_max);
    double x_max() const { return h * cells; }
    double cell_lo(int j) const { return h * j; }
    double cell_hi(int j) const { return h * (j + 1); }
    double cell_mid(int j) const { return h * (j + 0.5); }
};

/// Cell-averaged discretization. Rejects grids that truncate more than 1%
/// of the mass; the retained mass equals cdf(x_max) exactly.
std::vector<double> discretize_initial(const InitialDensity& density, const Grid& grid);

} // namespace cmv
