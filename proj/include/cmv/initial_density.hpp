#pragma once

#include <string>
#include <vector>

namespace cmv {

/// Initial position density on (0, infinity). Presets keep the mass,
/// sup-norm, mean and boundary behaviour available in closed form:
///   uniform[a,b]       constant density on [a,b]
///   power_ramp         (beta+1) x^beta / cap^(beta+1) on (0, cap]
///   table              piecewise-linear, renormalized to unit mass
class InitialDensity {
public:
    enum class Kind { uniform, power_ramp, table };

    static InitialDensity uniform(double a, double b);
    static InitialDensity power_ramp(double beta, double cap);
    // Piecewise-linear density through (xs[i], vs[i]); renormalized.
    // An optional boundary exponent may be declared for the decay check.
    static InitialDensity table(std::vector<double> xs, std::vector<double> vs, double beta = 0.0);

    double pdf(double x) const;
    double cdf(double x) const;

    /// Inverse CDF; q in [0,1]. Values that would land at or below 0 are
    /// nudged to machine epsilon since the state space is (0, infinity).
    double inv_cdf(double q) const;

    /// Exact integral of the density over [lo, hi].
    double mass_on(double lo, double hi) const;

    double sup_norm() const;
    double mean() const;
    double support_min() const;
    double support_max() const;

    /// Boundary decay declaration: pdf(x) <= c1 * x^beta on (0, x_star].
    /// beta == 0 means no decay is claimed (e.g. uniform starting at 0).
    double beta() const { return beta_; }
    double c1() const;
    double x_star() const;

    Kind kind() const { return kind_; }
    std::string name() const;

private:
    InitialDensity() = default;
    Kind kind_ = Kind::uniform;
    double a_ = 0.0, b_ = 1.0;     // uniform bounds or (beta, cap)
    double beta_ = 0.0;
    std::vector<double> xs_, vs_;  // table nodes
    std::vector<double> cum_;      // table cumulative mass at nodes
};

} // namespace cmv
