#include "cmv/initial_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cmv {

InitialDensity InitialDensity::uniform(double a, double b) {
    if (a < 0.0 || b <= a) throw std::invalid_argument("uniform density needs 0 <= a < b");
    InitialDensity d;
    d.kind_ = Kind::uniform;
    d.a_ = a;
    d.b_ = b;
    d.beta_ = 0.0; // no boundary decay claimed when a == 0
    return d;
}

InitialDensity InitialDensity::power_ramp(double beta, double cap) {
    if (beta <= 0.0 || cap <= 0.0) throw std::invalid_argument("power ramp needs beta > 0 and cap > 0");
    InitialDensity d;
    d.kind_ = Kind::power_ramp;
    d.a_ = beta;
    d.b_ = cap;
    d.beta_ = beta;
    return d;
}

InitialDensity InitialDensity::table(std::vector<double> xs, std::vector<double> vs, double beta) {
    if (xs.size() < 2 || xs.size() != vs.size()) throw std::invalid_argument("table density needs matching xs/vs, at least 2 nodes");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (vs[i] < 0.0) throw std::invalid_argument("table density values must be non-negative");
        if (i > 0 && xs[i] <= xs[i - 1]) throw std::invalid_argument("table density xs must be strictly increasing");
    }
    if (xs.front() < 0.0) throw std::invalid_argument("table density support must lie in [0, infinity)");
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        mass += 0.5 * (vs[i] + vs[i + 1]) * (xs[i + 1] - xs[i]);
    if (mass <= 0.0) throw std::invalid_argument("table density has zero mass");
    InitialDensity d;
    d.kind_ = Kind::table;
    d.beta_ = beta;
    d.xs_ = std::move(xs);
    d.vs_ = std::move(vs);
    for (auto& v : d.vs_) v /= mass;
    d.cum_.resize(d.xs_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < d.xs_.size(); ++i)
        d.cum_[i + 1] = d.cum_[i] + 0.5 * (d.vs_[i] + d.vs_[i + 1]) * (d.xs_[i + 1] - d.xs_[i]);
    return d;
}

double InitialDensity::pdf(double x) const {
    switch (kind_) {
        case Kind::uniform:
            return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
        case Kind::power_ramp:
            return (x > 0.0 && x <= b_) ? (a_ + 1.0) * std::pow(x, a_) / std::pow(b_, a_ + 1.0) : 0.0;
        case Kind::table: {
            if (x <= xs_.front() || x >= xs_.back()) {
                if (x == xs_.front()) return vs_.front();
                if (x == xs_.back()) return vs_.back();
                return 0.0;
            }
            auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
            return vs_[i] + w * (vs_[i + 1] - vs_[i]);
        }
    }
    return 0.0;
}

double InitialDensity::cdf(double x) const {
    switch (kind_) {
        case Kind::uniform:
            if (x <= a_) return 0.0;
            if (x >= b_) return 1.0;
            return (x - a_) / (b_ - a_);
        case Kind::power_ramp:
            if (x <= 0.0) return 0.0;
            if (x >= b_) return 1.0;
            return std::pow(x / b_, a_ + 1.0);
        case Kind::table: {
            if (x <= xs_.front()) return 0.0;
            if (x >= xs_.back()) return 1.0;
            auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            double dx = x - xs_[i];
            double slope = (vs_[i + 1] - vs_[i]) / (xs_[i + 1] - xs_[i]);
            return cum_[i] + vs_[i] * dx + 0.5 * slope * dx * dx;
        }
    }
    return 0.0;
}

double InitialDensity::inv_cdf(double q) const {
    q = std::clamp(q, 0.0, 1.0);
    double x = 0.0;
    switch (kind_) {
        case Kind::uniform:
            x = a_ + q * (b_ - a_);
            break;
        case Kind::power_ramp:
            x = b_ * std::pow(q, 1.0 / (a_ + 1.0));
            break;
        case Kind::table: {
            if (q >= 1.0) { x = xs_.back(); break; }
            auto it = std::upper_bound(cum_.begin(), cum_.end(), q);
            std::size_t i = it == cum_.begin() ? 0 : static_cast<std::size_t>(it - cum_.begin()) - 1;
            if (i + 1 >= xs_.size()) { x = xs_.back(); break; }
            double m = q - cum_[i];
            double h = xs_[i + 1] - xs_[i];
            double slope = (vs_[i + 1] - vs_[i]) / h;
            if (std::abs(slope) < 1e-300) {
                x = vs_[i] > 0.0 ? xs_[i] + m / vs_[i] : xs_[i + 1];
            } else {
                // solve 0.5*slope*dx^2 + v0*dx - m = 0 for dx in [0, h]
                double disc = vs_[i] * vs_[i] + 2.0 * slope * m;
                double dx = disc > 0.0 ? (-vs_[i] + std::sqrt(disc)) / slope : 0.0;
                x = xs_[i] + std::clamp(dx, 0.0, h);
            }
            break;
        }
    }
    if (x <= 0.0) return std::numeric_limits<double>::epsilon();
    return x;
}

double InitialDensity::mass_on(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    return cdf(hi) - cdf(lo);
}

double InitialDensity::sup_norm() const {
    switch (kind_) {
        case Kind::uniform: return 1.0 / (b_ - a_);
        case Kind::power_ramp: return (a_ + 1.0) / b_;
        case Kind::table: return *std::max_element(vs_.begin(), vs_.end());
    }
    return 0.0;
}

double InitialDensity::mean() const {
    switch (kind_) {
        case Kind::uniform: return 0.5 * (a_ + b_);
        case Kind::power_ramp: return b_ * (a_ + 1.0) / (a_ + 2.0);
        case Kind::table: {
            double m = 0.0;
            for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
                double h = xs_[i + 1] - xs_[i];
                double slope = (vs_[i + 1] - vs_[i]) / h;
                // integral of x*(v0 + slope*(x-x0)) over the segment
                double x0 = xs_[i], x1 = xs_[i + 1];
                double c = vs_[i] - slope * x0;
                m += c * 0.5 * (x1 * x1 - x0 * x0) + slope * (x1 * x1 * x1 - x0 * x0 * x0) / 3.0;
            }
            return m;
        }
    }
    return 0.0;
}

double InitialDensity::support_min() const {
    switch (kind_) {
        case Kind::uniform: return a_;
        case Kind::power_ramp: return 0.0;
        case Kind::table: return xs_.front();
    }
    return 0.0;
}

double InitialDensity::support_max() const {
    switch (kind_) {
        case Kind::uniform: return b_;
        case Kind::power_ramp: return b_;
        case Kind::table: return xs_.back();
    }
    return 0.0;
}

double InitialDensity::c1() const {
    switch (kind_) {
        case Kind::uniform: return a_ > 0.0 ? sup_norm() / std::pow(a_, beta_) : 0.0;
        case Kind::power_ramp: return (a_ + 1.0) / std::pow(b_, a_ + 1.0);
        case Kind::table: {
            if (beta_ <= 0.0) return 0.0;
            double c = 0.0;
            double hi = x_star();
            for (std::size_t i = 0; i < xs_.size(); ++i)
                if (xs_[i] > 0.0 && xs_[i] <= hi) c = std::max(c, vs_[i] / std::pow(xs_[i], beta_));
            return c;
        }
    }
    return 0.0;
}

double InitialDensity::x_star() const {
    switch (kind_) {
        case Kind::uniform: return a_ > 0.0 ? a_ : 0.5 * b_;
        case Kind::power_ramp: return b_;
        case Kind::table: return 0.5 * xs_.back();
    }
    return 0.0;
}

std::string InitialDensity::name() const {
    switch (kind_) {
        case Kind::uniform: return "uniform";
        case Kind::power_ramp: return "power_ramp";
        case Kind::table: return "table";
    }
    return "?";
}

} // namespace cmv
