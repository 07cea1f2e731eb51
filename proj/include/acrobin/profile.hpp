#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/math/quadrature/gauss.hpp>

#include "acrobin/errors.hpp"
#include "acrobin/potential.hpp"

namespace acrobin {

/// Least-squares fit of log|y| = log C - beta * x.
struct DecayFit {
    double rate{0.0};       ///< beta
    double amplitude{0.0};  ///< C
    double residual{0.0};   ///< rms of the log-linear fit
    std::size_t samples{0};
};

/// Fits exponential decay to tail samples; x is the distance from the origin.
/// Samples at or below the underflow floor are dropped before fitting.
inline DecayFit fit_decay(std::span<const double> x, std::span<const double> magnitude) {
    if (x.size() != magnitude.size()) throw domain_error("fit_decay: size mismatch");
    constexpr double floor = 64.0 * std::numeric_limits<double>::min();
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double m = std::abs(magnitude[k]);
        if (std::isfinite(m) && m > floor) {
            xs.push_back(x[k]);
            ys.push_back(std::log(m));
        }
    }
    if (xs.size() < 20)
        throw numerical_error("fit_decay: fewer than 20 tail samples above the underflow floor");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    if (!(sxx > 0.0)) throw numerical_error("fit_decay: degenerate abscissae");
    const double slope = sxy / sxx;
    DecayFit fit;
    fit.rate = -slope;
    fit.amplitude = std::exp(my - slope * mx);
    fit.samples = xs.size();
    double ss = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double e = ys[k] - (my + slope * (xs[k] - mx));
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    if (!(fit.rate > 1e-12)) throw numerical_error("fit_decay: tail does not decay (rate " + std::to_string(fit.rate) + ")");
    return fit;
}

/// Sampled optimal profile theta_0 on a uniform symmetric grid over [-L, L].
struct Profile {
    Potential potential;
    double L{10.0};
    int N{4000};
    double h{0.0};
    std::vector<double> z;
    std::vector<double> theta;
    std::vector<double> dtheta;
    std::vector<double> d2theta;
    DecayFit left;   ///< fit of theta + 1 for z -> -inf
    DecayFit right;  ///< fit of 1 - theta for z -> +inf
    double rate_bound{0.0};  ///< sqrt(min f''(+-1))

    std::size_t center() const { return static_cast<std::size_t>(N / 2); }

    /// Cubic Hermite interpolation from (theta, theta'); exponential tails beyond L.
    double value(double x) const {
        if (x >= L) return 1.0 - (1.0 - theta.back()) * std::exp(-tail_rate(+1) * (x - L));
        if (x <= -L) return -1.0 + (theta.front() + 1.0) * std::exp(-tail_rate(-1) * (-L - x));
        const auto [k, t] = locate(x);
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * theta[k] + (t3 - 2 * t2 + t) * h * dtheta[k] +
               (-2 * t3 + 3 * t2) * theta[k + 1] + (t3 - t2) * h * dtheta[k + 1];
    }

    /// theta_0' (Hermite interpolation from (theta', theta'')).
    double derivative(double x) const {
        if (x >= L) return tail_rate(+1) * (1.0 - theta.back()) * std::exp(-tail_rate(+1) * (x - L));
        if (x <= -L) return tail_rate(-1) * (theta.front() + 1.0) * std::exp(-tail_rate(-1) * (-L - x));
        const auto [k, t] = locate(x);
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * dtheta[k] + (t3 - 2 * t2 + t) * h * d2theta[k] +
               (-2 * t3 + 3 * t2) * dtheta[k + 1] + (t3 - t2) * h * d2theta[k + 1];
    }

    /// theta_0'' = f'(theta_0).
    double second_derivative(double x) const { return potential.df(value(x)); }

private:
    double tail_rate(int side) const { return std::sqrt(potential.d2f(side > 0 ? 1.0 : -1.0)); }
    std::pair<std::size_t, double> locate(double x) const {
        const double pos = (x + L) / h;
        auto k = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
        k = std::min(k, z.size() - 2);
        return {k, pos - static_cast<double>(k)};
    }
};

namespace detail {

/// theta' as a function of theta: sqrt(2 (f(theta) - f(-1))).
inline double profile_slope(const Potential& p, double u) {
    const double g = p.gap(u);
    if (!(g > 0.0))
        throw invalid_potential("radicand f(u) - f(-1) <= 0 inside (-1, 1) at u = " + std::to_string(u));
    return std::sqrt(2.0 * g);
}

/// Next node of the separable form dz = du / theta'(u): the u with
/// int_{u_prev}^{u} du / theta'(u) = dz (dz signed).
inline double march_profile(const Potential& p, double u_prev, double dz) {
    auto inv = [&](double u) { return 1.0 / profile_slope(p, u); };
    double u = u_prev + dz * profile_slope(p, u_prev);
    const double bound = dz > 0 ? 1.0 : -1.0;
    for (int it = 0; it < 60; ++it) {
        if ((dz > 0 && u >= bound) || (dz < 0 && u <= bound)) u = 0.5 * (u_prev + bound);
        const double g = boost::math::quadrature::gauss<double, 20>::integrate(inv, u_prev, u) - dz;
        const double step = g * profile_slope(p, u);
        u -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(bound - u)) break;
    }
    return u;
}

inline double trapezoid(std::span<const double> y, double h) {
    if (y.size() < 2) return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t k = 1; k + 1 < y.size(); ++k) s += y[k];
    return s * h;
}

}  // namespace detail

/// Optimal profile: -theta'' + f'(theta) = 0, theta(0) = 0, theta(+-inf) = +-1.
///
/// Integrates the separable first-order form node by node outward from u = 0;
/// each node is the root of a Gauss-Legendre quadrature of 1/theta'(u), so the
/// sampled values are accurate to rounding even deep in the tails.
inline Profile solve_optimal_profile(const Potential& p, double L = 10.0, int N = 4000) {
    if (!(L >= 5.0)) throw domain_error("profile half-length L must be >= 5");
    if (N < 200) throw domain_error("profile needs N >= 200 intervals");
    if (N % 2 != 0) ++N;

    Profile prof;
    prof.potential = p;
    prof.L = L;
    prof.N = N;
    prof.h = 2.0 * L / N;
    const std::size_t n = static_cast<std::size_t>(N) + 1, c = static_cast<std::size_t>(N / 2);
    prof.z.resize(n);
    prof.theta.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) prof.z[k] = -L + prof.h * static_cast<double>(k);
    prof.z[c] = 0.0;
    for (std::size_t k = c + 1; k < n; ++k) prof.theta[k] = detail::march_profile(p, prof.theta[k - 1], prof.h);
    for (std::size_t k = c; k-- > 0;) prof.theta[k] = detail::march_profile(p, prof.theta[k + 1], -prof.h);

    prof.dtheta.resize(n);
    prof.d2theta.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        prof.dtheta[k] = detail::profile_slope(p, prof.theta[k]);
        prof.d2theta[k] = p.df(prof.theta[k]);
    }
    prof.rate_bound = std::sqrt(std::min(p.d2f(-1.0), p.d2f(1.0)));

    // outer half of each tail
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < n; ++k)
        if (prof.z[k] >= 0.5 * L) {
            xs.push_back(prof.z[k]);
            ys.push_back(1.0 - prof.theta[k]);
        }
    prof.right = fit_decay(xs, ys);
    xs.clear();
    ys.clear();
    for (std::size_t k = 0; k < n; ++k)
        if (prof.z[k] <= -0.5 * L) {
            xs.push_back(-prof.z[k]);
            ys.push_back(prof.theta[k] + 1.0);
        }
    prof.left = fit_decay(xs, ys);
    return prof;
}

struct ProfileDiagnostics {
    double ode_residual{0.0};         ///< max |-theta'' + f'(theta)|, 6th-order differences of theta samples
    double slope_residual{0.0};       ///< max |theta' - sqrt(2(f(theta)-f(-1)))|, 6th-order differences
    double anchor{0.0};               ///< theta(0)
    bool monotone{true};
    double energy{0.0};               ///< int (theta')^2
};

/// Residuals of the sampled profile measured from theta samples alone.
inline ProfileDiagnostics diagnose(const Profile& prof) {
    ProfileDiagnostics d;
    const auto& th = prof.theta;
    const double h = prof.h;
    const std::size_t n = th.size();
    for (std::size_t k = 3; k + 3 < n; ++k) {
        const double d2 = (2.0 * (th[k - 3] + th[k + 3]) - 27.0 * (th[k - 2] + th[k + 2]) +
                           270.0 * (th[k - 1] + th[k + 1]) - 490.0 * th[k]) / (180.0 * h * h);
        const double d1 = (-(th[k - 3]) + 9.0 * th[k - 2] - 45.0 * th[k - 1] + 45.0 * th[k + 1] -
                           9.0 * th[k + 2] + th[k + 3]) / (60.0 * h);
        d.ode_residual = std::max(d.ode_residual, std::abs(-d2 + prof.potential.df(th[k])));
        d.slope_residual = std::max(d.slope_residual, std::abs(d1 - std::sqrt(2.0 * prof.potential.gap(th[k]))));
    }
    for (std::size_t k = 1; k + 1 < n; ++k)
        if (!(th[k] > th[k - 1]) || !(prof.dtheta[k] > 0.0)) d.monotone = false;
    d.anchor = th[prof.center()];
    std::vector<double> sq(n);
    for (std::size_t k = 0; k < n; ++k) sq[k] = prof.dtheta[k] * prof.dtheta[k];
    d.energy = detail::trapezoid(sq, h);
    return d;
}

/// Data rejected because int A theta_0' != 0.
struct CompatibilityRejection {
    double integral{0.0};
    double tolerance{0.0};
};

struct LinearizedSolution {
    std::vector<double> w;
    double projection{0.0};  ///< coefficient of theta_0' removed from A before solving
    double multiplier{0.0};  ///< kernel multiplier of the bordered system
    double residual{0.0};    ///< max discrete ODE residual against the projected data
};

using LinearizedResult = std::variant<LinearizedSolution, CompatibilityRejection>;

/// Solves -w'' + f''(theta_0) w = A on the profile grid with w(0) = 0.
///
/// Robin closures w'(+-L) = -+ sqrt(f''(+-1)) w(+-L) impose decay. The discrete
/// operator is nearly singular along theta_0', so the system is bordered by
/// theta_0' with the anchor w(0) = 0 as the extra row.
inline LinearizedResult solve_linearized_ode(const Profile& prof, std::span<const double> A) {
    const std::size_t n = prof.theta.size();
    if (A.size() != n) throw domain_error("solve_linearized_ode: data size does not match profile grid");
    double amax = 0.0;
    for (double a : A) amax = std::max(amax, std::abs(a));
    if (std::abs(A.front()) > 1e-6 * amax || std::abs(A.back()) > 1e-6 * amax)
        throw domain_error("solve_linearized_ode: data does not decay at the grid ends");

    const double h = prof.h;
    std::vector<double> prod(n), a2(n), t2(n);
    for (std::size_t k = 0; k < n; ++k) {
        prod[k] = A[k] * prof.dtheta[k];
        a2[k] = A[k] * A[k];
        t2[k] = prof.dtheta[k] * prof.dtheta[k];
    }
    const double integral = detail::trapezoid(prod, h);
    const double normA = std::sqrt(detail::trapezoid(a2, h));
    const double normT2 = detail::trapezoid(t2, h);
    const double tol = 1e-8 * normA * std::sqrt(normT2);
    if (std::abs(integral) > tol) return CompatibilityRejection{integral, tol};

    LinearizedSolution sol;
    sol.projection = integral / normT2;
    std::vector<double> rhs(n);
    for (std::size_t k = 0; k < n; ++k) rhs[k] = A[k] - sol.projection * prof.dtheta[k];

    const auto& pot = prof.potential;
    const double kl = std::sqrt(pot.d2f(-1.0)), kr = std::sqrt(pot.d2f(1.0));
    const double ih2 = 1.0 / (h * h);
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    trips.reserve(3 * n + 2 * n);
    const auto m = static_cast<Eigen::Index>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double q = pot.d2f(prof.theta[k]);
        if (k == 0) {
            // ghost w_{-1} = w_1 - 2 h kl w_0
            trips.emplace_back(i, i, (2.0 + 2.0 * h * kl) * ih2 + q);
            trips.emplace_back(i, i + 1, -2.0 * ih2);
        } else if (k == n - 1) {
            trips.emplace_back(i, i, (2.0 + 2.0 * h * kr) * ih2 + q);
            trips.emplace_back(i, i - 1, -2.0 * ih2);
        } else {
            trips.emplace_back(i, i, 2.0 * ih2 + q);
            trips.emplace_back(i, i - 1, -ih2);
            trips.emplace_back(i, i + 1, -ih2);
        }
        trips.emplace_back(i, m, prof.dtheta[k]);
    }
    trips.emplace_back(m, static_cast<Eigen::Index>(prof.center()), 1.0);
    Eigen::SparseMatrix<double> K(m + 1, m + 1);
    K.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) throw numerical_error("linearized ODE: singular bordered system");
    Eigen::VectorXd b(m + 1);
    for (std::size_t k = 0; k < n; ++k) b[static_cast<Eigen::Index>(k)] = rhs[k];
    b[m] = 0.0;
    const Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw numerical_error("linearized ODE: solve failed");

    sol.w.assign(x.data(), x.data() + n);
    sol.multiplier = x[m];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double r = -(sol.w[k - 1] - 2.0 * sol.w[k] + sol.w[k + 1]) * ih2 +
                         pot.d2f(prof.theta[k]) * sol.w[k] - rhs[k];
        sol.residual = std::max(sol.residual, std::abs(r));
    }
    return sol;
}

}  // namespace acrobin
