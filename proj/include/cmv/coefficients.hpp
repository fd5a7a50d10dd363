#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmv {

/// Loss transform F applied to each particle's accumulated feedback.
/// A closed preset family: monotonicity and the Lipschitz constant are
/// known exactly, not estimated.
class LossTransform {
public:
    enum class Kind { identity, log1p, capped_linear };

    static LossTransform identity() { return LossTransform(Kind::identity, 1.0, 0.0); }

    // F(x) = scale * log(1 + x), Lipschitz constant = scale.
    static LossTransform log1p_scaled(double scale) {
        if (scale <= 0.0) throw std::invalid_argument("log1p loss transform needs scale > 0");
        return LossTransform(Kind::log1p, scale, 0.0);
    }

    // F(x) = min(slope * x, cap), Lipschitz constant = slope.
    static LossTransform capped_linear(double slope, double cap) {
        if (slope <= 0.0 || cap <= 0.0) throw std::invalid_argument("capped linear loss transform needs slope, cap > 0");
        return LossTransform(Kind::capped_linear, slope, cap);
    }

    double operator()(double x) const {
        switch (kind_) {
            case Kind::identity: return x;
            case Kind::log1p: return a_ * std::log1p(x);
            case Kind::capped_linear: return std::min(a_ * x, b_);
        }
        return x;
    }

    double lipschitz() const { return a_; }
    Kind kind() const { return kind_; }
    double scale() const { return a_; }
    double cap() const { return b_; }

    std::string name() const {
        switch (kind_) {
            case Kind::identity: return "identity";
            case Kind::log1p: return "log1p";
            case Kind::capped_linear: return "capped_linear";
        }
        return "?";
    }

private:
    LossTransform(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
    Kind kind_;
    double a_; // scale / slope
    double b_; // cap
};

/// Feedback weight g(t): non-negative and non-increasing on [0, T].
class FeedbackWeight {
public:
    enum class Kind { constant, linear_decay, exp_decay };

    static FeedbackWeight constant(double c) { return FeedbackWeight(Kind::constant, c, 0.0); }

    // c * (T - t) / T, clamped at 0 past the horizon.
    static FeedbackWeight linear_decay(double c, double horizon) {
        if (horizon <= 0.0) throw std::invalid_argument("linear decay needs horizon > 0");
        return FeedbackWeight(Kind::linear_decay, c, horizon);
    }

    // c * exp(-lambda * t)
    static FeedbackWeight exp_decay(double c, double lambda) {
        return FeedbackWeight(Kind::exp_decay, c, lambda);
    }

    double at(double t) const {
        switch (kind_) {
            case Kind::constant: return c_;
            case Kind::linear_decay: return c_ * std::max(0.0, (p_ - t) / p_);
            case Kind::exp_decay: return c_ * std::exp(-p_ * t);
        }
        return c_;
    }

    double at_zero() const { return c_; }
    Kind kind() const { return kind_; }
    double level() const { return c_; }
    double param() const { return p_; }

private:
    FeedbackWeight(Kind k, double c, double p) : kind_(k), c_(c), p_(p) {}
    Kind kind_;
    double c_;
    double p_; // horizon or decay rate
};

/// Drift or volatility coefficient: constant or affine in t.
class TimeCoef {
public:
    static TimeCoef constant(double c) { return TimeCoef(c, 0.0); }
    static TimeCoef affine(double c0, double slope) { return TimeCoef(c0, slope); }

    double at(double t) const { return c0_ + slope_ * t; }
    double c0() const { return c0_; }
    double slope() const { return slope_; }
    bool is_constant() const { return slope_ == 0.0; }

private:
    TimeCoef(double c0, double slope) : c0_(c0), slope_(slope) {}
    double c0_;
    double slope_;
};

/// Optional multiplicative adjustment s(ubar, vbar) applied to g in the
/// finite particle system (ubar, vbar are the leave-one-out empirical means)
/// and with the distribution means in the mean-field solver. Default is 1.
struct EmpiricalMeanHook {
    double c = 0.0;

    double at(const std::vector<double>& ubar, const std::vector<double>& vbar) const {
        if (c == 0.0) return 1.0;
        double dot = 0.0;
        for (std::size_t l = 0; l < ubar.size(); ++l) dot += ubar[l] * vbar[l];
        return 1.0 + c * dot;
    }
};

/// Model coefficients: one loss transform, per-atom g / b / sigma presets,
/// the common-noise correlation and the declared volatility bounds.
struct CoefficientSet {
    LossTransform loss = LossTransform::identity();
    std::vector<FeedbackWeight> g;
    std::vector<TimeCoef> drift;
    std::vector<TimeCoef> vol;
    double vol_lo = 0.0;
    double vol_hi = 0.0;
    double rho = 0.0;
    EmpiricalMeanHook hook;
};

} // namespace cmv
