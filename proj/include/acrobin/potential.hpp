#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "acrobin/errors.hpp"

namespace acrobin {

using ScalarFn = std::function<double(double)>;

/// Dense real polynomial, coefficients in increasing degree.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) c_.push_back(0.0);
    }

    double operator()(double x) const {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial({0.0});
        std::vector<double> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
        return Polynomial(std::move(d));
    }

    /// Coefficients of p(x0 + t) in powers of t (repeated synthetic division).
    Polynomial shifted(double x0) const {
        std::vector<double> a = c_;
        const std::size_t n = a.size();
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = n - 1; j > k; --j) a[j - 1] += x0 * a[j];
        return Polynomial(std::move(a));
    }

    const std::vector<double>& coefficients() const { return c_; }

private:
    std::vector<double> c_{0.0};
};

/// Double-well potential f with wells at -1 and +1.
///
/// `gap(u)` returns f(u) - f(-1). Closed-form catalog entries evaluate it
/// without cancellation near the wells, which the optimal-profile solver
/// relies on once |theta_0 -+ 1| drops below sqrt(machine epsilon).
struct Potential {
    std::string name;
    ScalarFn f;
    ScalarFn df;
    ScalarFn d2f;
    ScalarFn d3f;
    ScalarFn gap;
    double sign_radius{1.0};
    std::vector<double> coefficients;  // empty for custom callables

    double well_low() const { return -1.0; }
    double well_high() const { return 1.0; }

    /// f from polynomial coefficients (increasing degree).
    static Potential polynomial(std::vector<double> coeffs, double sign_radius = 1.0,
                                std::string name = "polynomial") {
        const Polynomial p(coeffs);
        const Polynomial p1 = p.derivative();
        const Polynomial p2 = p1.derivative();
        const Polynomial p3 = p2.derivative();
        // Taylor coefficients around each well with the constant term dropped,
        // so f(u) - f(w) is evaluated as a sum of small terms near u = w.
        auto local = [&](double w) {
            auto c = p.shifted(w).coefficients();
            c[0] = 0.0;
            return Polynomial(std::move(c));
        };
        const Polynomial at_low = local(-1.0);
        const Polynomial at_high = local(1.0);
        const double jump = p(1.0) - p(-1.0);

        Potential out;
        out.name = std::move(name);
        out.f = p;
        out.df = p1;
        out.d2f = p2;
        out.d3f = p3;
        out.gap = [at_low, at_high, jump](double u) {
            return u < 0.0 ? at_low(u + 1.0) : at_high(u - 1.0) + jump;
        };
        out.sign_radius = sign_radius;
        out.coefficients = std::move(coeffs);
        return out;
    }

    /// scale * (1 - u^2)^2; scale = 1/2 is the standard quartic with profile tanh.
    static Potential quartic(double scale = 0.5, double sign_radius = 1.0) {
        return polynomial({scale, 0.0, -2.0 * scale, 0.0, scale}, sign_radius,
                          scale == 0.5 ? "quartic" : "quartic(" + std::to_string(scale) + ")");
    }

    /// (1/2)(1 - u^2)^2 (1 + b u)^2: equal wells, not even for b != 0.
    /// For |b| < 1 the extra double zero sits at -1/b, so R0 = max(1, 1/|b|).
    static Potential skewed(double b) {
        const double sign_radius = b == 0.0 ? 1.0 : std::max(1.0, 1.0 / std::abs(b));
        // (1 - u^2)(1 + b u) = 1 + b u - u^2 - b u^3
        const std::vector<double> g{1.0, b, -1.0, -b};
        std::vector<double> sq(7, 0.0);
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j) sq[i + j] += 0.5 * g[i] * g[j];
        return polynomial(std::move(sq), sign_radius, "skewed(" + std::to_string(b) + ")");
    }

    /// Arbitrary callables. `gap` defaults to f(u) - f(-1).
    static Potential custom(std::string name, ScalarFn f, ScalarFn df, ScalarFn d2f, ScalarFn d3f,
                            double sign_radius, ScalarFn gap = {}) {
        Potential out;
        out.name = std::move(name);
        if (!gap) {
            const double f_low = f(-1.0);
            gap = [f, f_low](double u) { return f(u) - f_low; };
        }
        out.f = std::move(f);
        out.df = std::move(df);
        out.d2f = std::move(d2f);
        out.d3f = std::move(d3f);
        out.gap = std::move(gap);
        out.sign_radius = sign_radius;
        return out;
    }
};

struct PotentialCheck {
    std::string condition;
    bool passed{true};
    double worst_violation{0.0};
    double worst_at{0.0};
};

struct PotentialReport {
    std::vector<PotentialCheck> checks;
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    const PotentialCheck& operator[](std::string_view name) const {
        for (const auto& c : checks)
            if (c.condition == name) return c;
        throw domain_error("no potential check named " + std::string(name));
    }
};

namespace detail {
inline double checked(const ScalarFn& fn, double u, const char* what) {
    const double v = fn(u);
    if (!std::isfinite(v)) throw evaluation_error(std::string("non-finite ") + what, u);
    return v;
}
}  // namespace detail

/// Samples the double-well conditions on [-R0-2, R0+2].
inline PotentialReport validate_potential(const Potential& p, int n_samples = 2001,
                                          double tol = 1e-12) {
    if (n_samples < 100) throw domain_error("validate_potential needs at least 100 samples");
    const double R0 = p.sign_radius;
    if (!(R0 >= 1.0)) throw domain_error("sign radius R0 must be >= 1");

    PotentialCheck crit{"wells_critical"}, convex{"wells_convex"}, depth{"equal_depth"},
        barrier{"barrier"}, sign{"sign_condition"};
    auto note = [](PotentialCheck& c, double violation, double at) {
        if (violation > c.worst_violation) {
            c.worst_violation = violation;
            c.worst_at = at;
        }
    };

    for (double w : {-1.0, 1.0}) {
        note(crit, std::abs(detail::checked(p.df, w, "f'")), w);
        note(convex, std::max(0.0, -detail::checked(p.d2f, w, "f''")), w);
        if (p.d2f(w) <= 0.0) convex.passed = false;
    }
    crit.passed = crit.worst_violation <= tol;
    const double f_low = detail::checked(p.f, -1.0, "f");
    const double f_high = detail::checked(p.f, 1.0, "f");
    note(depth, std::abs(f_low - f_high), 1.0);
    depth.passed = depth.worst_violation <= tol;

    const double lo = -R0 - 2.0, hi = R0 + 2.0;
    for (int k = 0; k < n_samples; ++k) {
        const double u = lo + (hi - lo) * k / (n_samples - 1);
        const double fu = detail::checked(p.f, u, "f");
        const double dfu = detail::checked(p.df, u, "f'");
        detail::checked(p.d2f, u, "f''");
        detail::checked(p.d3f, u, "f'''");
        if (std::abs(u) < 1.0) {
            // f(u) > f(1) strictly
            const double margin = fu - f_high;
            if (margin <= 0.0) {
                barrier.passed = false;
                note(barrier, -margin + tol, u);
            }
        }
        if (std::abs(u) >= R0) {
            const double s = u * dfu;
            if (s < -tol) {
                sign.passed = false;
                note(sign, -s, u);
            }
        }
    }
    return PotentialReport{{crit, convex, depth, barrier, sign}};
}

/// c_f = int_{-1}^{1} sqrt(2 (f(r) - f(-1))) dr, the interface energy per unit length.
inline double surface_constant(const Potential& p, double quad_tol = 1e-10) {
    auto integrand = [&](double r) {
        const double g = p.gap(r);
        if (g < -1e-12) throw invalid_potential("negative radicand f(r) - f(-1) = " + std::to_string(g) +
                                                " at r = " + std::to_string(r));
        return std::sqrt(2.0 * std::max(g, 0.0));
    };
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, -1.0, 1.0, 30, quad_tol / 2.0, &err);
    if (!(err <= quad_tol)) throw numerical_error("surface constant quadrature error " + std::to_string(err));
    if (!(value > 0.0)) throw invalid_potential("surface constant is not positive");
    return value;
}

enum class BumpShape {
    exponential,  ///< exp(-1/(1-x^2)), C-infinity
    polynomial,   ///< (1-x^2)^4, C^3; alternate shape for sensitivity probes
};

/// Boundary contact energy sigma_alpha = cos(alpha) * sigma_hat.
///
/// sigma_hat' = -c_f * B with B a normalized bump supported in [-w, w],
/// w = 1 - support_margin, so sigma_hat(-1) - sigma_hat(1) = c_f and
/// cos(alpha) = (sigma_alpha(-1) - sigma_alpha(1)) / c_f holds by construction.
/// sigma_hat(-1) = c_f / 2.
class BoundaryEnergy {
public:
    /// Inert energy (alpha = pi/2); placeholder for default-constructed records.
    BoundaryEnergy() : BoundaryEnergy(std::numbers::pi / 2, 0.0, 0.1, BumpShape::exponential) {}

    BoundaryEnergy(double alpha, double c_f, double support_margin, BumpShape shape)
        : alpha_(alpha), c_f_(c_f), margin_(support_margin), width_(1.0 - support_margin), shape_(shape) {
        const double c = std::cos(alpha);
        // std::cos(pi/2) is 6e-17; snap so that alpha = pi/2 is exactly inert.
        cos_alpha_ = std::abs(c) < 1e-15 ? 0.0 : c;
        build_table();
    }

    double alpha() const { return alpha_; }
    double cos_alpha() const { return cos_alpha_; }
    double surface_constant() const { return c_f_; }
    double support_margin() const { return margin_; }
    double support_width() const { return width_; }
    BumpShape shape() const { return shape_; }

    /// Normalized bump B and its first two derivatives.
    double bump(double u) const { return scale_ * raw(u / width_); }
    double bump_d1(double u) const { return scale_ * raw_d1(u / width_) / width_; }
    double bump_d2(double u) const { return scale_ * raw_d2(u / width_) / (width_ * width_); }

    double sigma_hat(double u) const { return 0.5 * c_f_ - c_f_ * cumulative(u); }
    double dsigma_hat(double u) const { return -c_f_ * bump(u); }
    double d2sigma_hat(double u) const { return -c_f_ * bump_d1(u); }
    double d3sigma_hat(double u) const { return -c_f_ * bump_d2(u); }

    double sigma(double u) const { return cos_alpha_ * sigma_hat(u); }
    double dsigma(double u) const { return cos_alpha_ * dsigma_hat(u); }
    double d2sigma(double u) const { return cos_alpha_ * d2sigma_hat(u); }
    double d3sigma(double u) const { return cos_alpha_ * d3sigma_hat(u); }

    /// int_{-w}^{u} B, in [0, 1].
    double cumulative(double u) const {
        if (u <= -width_) return 0.0;
        if (u >= width_) return 1.0;
        const double pos = (u + width_) / cell_;
        const auto k = std::min(static_cast<std::size_t>(pos), cum_.size() - 2);
        const double a = -width_ + cell_ * static_cast<double>(k);
        return cum_[k] + boost::math::quadrature::gauss<double, 10>::integrate(
                             [this](double x) { return bump(x); }, a, u);
    }

private:
    static constexpr std::size_t kCells = 2048;

    double raw(double x) const {
        if (std::abs(x) >= 1.0) return 0.0;
        const double q = 1.0 - x * x;
        if (shape_ == BumpShape::polynomial) return q * q * q * q;
        return std::exp(-1.0 / q);
    }
    double raw_d1(double x) const {
        if (std::abs(x) >= 1.0) return 0.0;
        const double q = 1.0 - x * x;
        if (shape_ == BumpShape::polynomial) return -8.0 * x * q * q * q;
        return std::exp(-1.0 / q) * (-2.0 * x / (q * q));
    }
    double raw_d2(double x) const {
        if (std::abs(x) >= 1.0) return 0.0;
        const double q = 1.0 - x * x;
        if (shape_ == BumpShape::polynomial) return -8.0 * q * q * q + 48.0 * x * x * q * q;
        const double g1 = -2.0 * x / (q * q);
        const double g2 = -2.0 / (q * q) - 8.0 * x * x / (q * q * q);
        return std::exp(-1.0 / q) * (g1 * g1 + g2);
    }

    void build_table() {
        cell_ = 2.0 * width_ / static_cast<double>(kCells);
        cum_.assign(kCells + 1, 0.0);
        scale_ = 1.0;
        for (std::size_t k = 0; k < kCells; ++k) {
            const double a = -width_ + cell_ * static_cast<double>(k);
            cum_[k + 1] = cum_[k] + boost::math::quadrature::gauss<double, 10>::integrate(
                                        [this](double x) { return bump(x); }, a, a + cell_);
        }
        const double total = cum_.back();
        scale_ = 1.0 / total;
        for (auto& v : cum_) v /= total;
        cum_.back() = 1.0;
    }

    double alpha_;
    double cos_alpha_{0.0};
    double c_f_;
    double margin_;
    double width_;
    BumpShape shape_;
    double scale_{1.0};
    double cell_{0.0};
    std::vector<double> cum_;
};

/// Builds sigma_alpha for the potential; c_f from surface_constant.
inline BoundaryEnergy build_sigma(const Potential& p, double alpha, double support_margin = 0.1,
                                  BumpShape shape = BumpShape::exponential, double quad_tol = 1e-10) {
    if (!(alpha > 0.0 && alpha < std::numbers::pi))
        throw domain_error("contact angle alpha must lie in (0, pi), got " + std::to_string(alpha));
    if (!(support_margin > 0.0 && support_margin < 1.0))
        throw domain_error("support margin must lie in (0, 1)");
    return BoundaryEnergy(alpha, surface_constant(p, quad_tol), support_margin, shape);
}

}  // namespace acrobin
