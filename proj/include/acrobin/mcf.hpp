#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "acrobin/errors.hpp"
#include "acrobin/geometry.hpp"

namespace acrobin {

struct CurveGeometry {
    std::vector<double> H;  ///< curvature with V = H n (negative for a counterclockwise circle)
    std::vector<Vec2> n;    ///< unit normal rot_{-90}(tau)
    std::vector<Vec2> tau;
};

/// Menger curvature of (a, b, c) signed against the -90 degree normal.
inline double menger_curvature(Vec2 a, Vec2 b, Vec2 c) {
    const double la = norm(b - a), lb = norm(c - b), lc = norm(c - a);
    const double den = la * lb * lc;
    if (den == 0.0) return 0.0;
    return -2.0 * cross(b - a, c - b) / den;
}

inline CurveGeometry curvature_and_normal(const FrontCurve& c) {
    const auto& X = c.nodes;
    const std::size_t n = X.size();
    if (n < 3) throw topology_error("curvature_and_normal needs at least 3 nodes");
    CurveGeometry g;
    g.H.resize(n);
    g.n.resize(n);
    g.tau.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t a = k == 0 ? 0 : k - 1, b = k + 1 == n ? n - 1 : k + 1;
        g.tau[k] = unit(X[b] - X[a]);
        g.n[k] = rot_minus90(g.tau[k]);
        const std::size_t m = std::clamp<std::size_t>(k, 1, n - 2);  // one-sided triple at the ends
        g.H[k] = menger_curvature(X[m - 1], X[m], X[m + 1]);
    }
    return g;
}

namespace detail {

/// Unit tangent (pointing from the first to the last node) at an endpoint
/// placed at p: derivative of the quadratic through p and the next two nodes.
/// Three-node curves use the end segment.
inline Vec2 end_tangent(const Polyline& X, int end, Vec2 p) {
    const std::size_t n = X.size();
    const Vec2 a = end == 0 ? X[1] : X[n - 2];
    if (n < 4) return end == 0 ? unit(a - p) : unit(p - a);
    const Vec2 b = end == 0 ? X[2] : X[n - 3];
    const double h0 = norm(a - p), h1 = norm(b - a);
    const Vec2 d = p * (-(2 * h0 + h1) / (h0 * (h0 + h1))) + a * ((h0 + h1) / (h0 * h1)) - b * (h0 / (h1 * (h0 + h1)));
    return end == 0 ? unit(d) : unit(d * -1.0);
}

}  // namespace detail

/// Contact angle acos(N_dOmega . n) at the first (end = 0) or last (end = 1)
/// node, n from the one-sided second-order tangent.
inline double contact_angle(const FrontCurve& c, int end) {
    const auto& X = c.nodes;
    const Vec2 p = end == 0 ? X.front() : X.back();
    const Vec2 tau = detail::end_tangent(X, end, p);
    const Vec2 N = c.domain->normal(c.domain->project(p));
    return std::acos(std::clamp(dot(N, rot_minus90(tau)), -1.0, 1.0));
}

/// Length minus cos(alpha) times the boundary arc on the side n points to
/// (counterclockwise from the first to the last endpoint).
inline double front_energy(const FrontCurve& c) {
    const auto& d = *c.domain;
    const double wetted = d.arclength(d.project(c.nodes.front()), d.project(c.nodes.back()));
    return c.length() - std::cos(c.alpha) * wetted;
}

struct MCFOptions {
    double angle_tol{1e-6};     ///< accepted contact-angle error after a step (rad)
    double collapse_length{0.0};  ///< collapse when the length drops below this
    int endpoint_iterations{20};  ///< max smoothing/slide sweeps per step
    double endpoint_rtol{1e-4};   ///< sweeps end when the ends move less than this times the first move
    double endpoint_tol{1e-14};   ///< or less than this
};

struct MCFStep {
    FrontCurve curve;
    bool collapsed{false};
};

namespace detail {

/// Solves (I - dt D_ss) X = rhs with X_0, X_N fixed; D_ss the three-point
/// second difference on the spacings of the current nodes.
inline Polyline implicit_smoothing(const Polyline& X, double dt) {
    const std::size_t n = X.size();
    std::vector<double> h(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) h[k] = norm(X[k + 1] - X[k]);
    std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double w = 2.0 / (h[k - 1] + h[k]);
        lo[k] = -dt * w / h[k - 1];
        up[k] = -dt * w / h[k];
        di[k] = 1.0 - lo[k] - up[k];
    }
    Polyline out(X);
    // Thomas algorithm, both coordinates at once
    std::vector<double> cp(n, 0.0);
    std::vector<Vec2> dp(n);
    cp[0] = up[0] / di[0];
    dp[0] = X[0] / di[0];
    for (std::size_t k = 1; k < n; ++k) {
        const double m = di[k] - lo[k] * cp[k - 1];
        cp[k] = up[k] / m;
        dp[k] = (X[k] - dp[k - 1] * lo[k]) / m;
    }
    out[n - 1] = dp[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) out[k] = dp[k] - out[k + 1] * cp[k];
    out.front() = X.front();
    out.back() = X.back();
    return out;
}

/// Slides one endpoint along the boundary until acos(N . n_end) = alpha.
inline void enforce_angle(FrontCurve& c, int end, double angle_tol) {
    const auto& d = *c.domain;
    auto& X = c.nodes;
    const double ca = std::cos(c.alpha);
    auto g = [&](double t) {
        const Vec2 p = d.point(t);
        const Vec2 tau = end_tangent(X, end, p);
        return dot(d.normal(t), rot_minus90(tau)) - ca;
    };
    const double t0 = d.project(end == 0 ? X.front() : X.back());
    const double g0 = g(t0);
    if (std::abs(g0) <= 1e-15) {
        (end == 0 ? X.front() : X.back()) = d.point(t0);
        return;
    }
    double a = t0, b = t0;
    bool found = false;
    for (double delta = 1e-6; delta <= std::numbers::pi / 2; delta *= 2.0) {
        if ((g(t0 + delta) > 0) != (g0 > 0)) {
            a = t0;
            b = t0 + delta;
            found = true;
            break;
        }
        if ((g(t0 - delta) > 0) != (g0 > 0)) {
            a = t0 - delta;
            b = t0;
            found = true;
            break;
        }
    }
    if (!found)
        throw numerical_error("contact-angle root not bracketed at endpoint " + std::to_string(end) +
                              " (t = " + std::to_string(c.t) + ", g = " + std::to_string(g0) + ")");
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(
        g, a, b, [](double x, double y) { return std::abs(x - y) <= 1e-14; }, iters);
    const double t = 0.5 * (root.first + root.second);
    (end == 0 ? X.front() : X.back()) = d.point(t);
    const double err = std::abs(contact_angle(c, end) - c.alpha);
    if (!(err <= angle_tol))
        throw numerical_error("contact-angle enforcement missed by " + std::to_string(err) + " rad at endpoint " +
                              std::to_string(end));
}

}  // namespace detail

/// One step of curve shortening with contact angle: implicit smoothing with
/// Dirichlet ends, arclength redistribution, endpoint slides along the
/// boundary; repeated with the slid ends as Dirichlet data until the ends
/// settle, so the ends are implicit in time too.
inline MCFStep step_mcf(const FrontCurve& c, double dt, const MCFOptions& opt = {}) {
    if (!(dt > 0.0)) throw domain_error("step_mcf: dt must be positive");
    if (c.nodes.size() < 3) throw topology_error("step_mcf needs at least 3 nodes");
    if (!c.domain) throw domain_error("step_mcf: front has no domain");
    MCFStep out;
    out.curve = c;
    out.curve.t = c.t + dt;
    auto& X = out.curve.nodes;
    const int N = static_cast<int>(X.size()) - 1;
    Polyline rhs = c.nodes;
    double first = 0.0;
    for (int it = 0; it < std::max(1, opt.endpoint_iterations); ++it) {
        X = detail::implicit_smoothing(rhs, dt);
        detail::enforce_angle(out.curve, 0, opt.angle_tol);
        detail::enforce_angle(out.curve, 1, opt.angle_tol);
        const double moved = std::max(norm(X.front() - rhs.front()), norm(X.back() - rhs.back()));
        rhs.front() = X.front();
        rhs.back() = X.back();
        if (it == 0) first = moved;
        if (moved <= opt.endpoint_tol || (it > 0 && moved <= opt.endpoint_rtol * first)) break;
    }
    // sweeps run on the raw nodes; redistribute once
    X = resample_arclength(X, N);
    detail::enforce_angle(out.curve, 0, opt.angle_tol);
    detail::enforce_angle(out.curve, 1, opt.angle_tol);
    out.collapsed = out.curve.length() < opt.collapse_length;
    return out;
}

struct MCFTrajectory {
    std::vector<FrontCurve> snapshots;
    std::vector<double> times;   ///< per step (entry 0: initial)
    std::vector<double> energy;  ///< front_energy per step
    std::vector<double> length;
    bool collapsed{false};
};

/// Repeated step_mcf; dt is adjusted down so that T is hit exactly.
/// Snapshots at every stride-th step and at T.
inline MCFTrajectory run_mcf(const FrontCurve& c0, double T, double dt, int stride = 1, MCFOptions opt = {}) {
    if (!(T >= 0.0) || !(dt > 0.0) || stride < 1) throw domain_error("run_mcf: need T >= 0, dt > 0, stride >= 1");
    if (!c0.domain) throw domain_error("run_mcf: front has no domain");
    for (const Vec2 p : {c0.nodes.front(), c0.nodes.back()})
        if (norm(c0.domain->point(c0.domain->project(p)) - p) > 1e-10)
            throw domain_error("run_mcf: endpoints must lie on the boundary");
    if (opt.collapse_length == 0.0) opt.collapse_length = 5.0 * c0.length() / static_cast<double>(c0.size() - 1);

    MCFTrajectory tr;
    tr.snapshots.push_back(c0);
    tr.times.push_back(c0.t);
    tr.energy.push_back(front_energy(c0));
    tr.length.push_back(c0.length());
    if (T == 0.0) return tr;
    const long steps = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
    const double h = T / static_cast<double>(steps);
    FrontCurve cur = c0;
    for (long k = 1; k <= steps; ++k) {
        MCFStep st;
        try {
            st = step_mcf(cur, h, opt);
        } catch (const numerical_error& e) {
            throw numerical_error(std::string(e.what()) + " [mcf step at t = " + std::to_string(cur.t) + "]");
        }
        cur = std::move(st.curve);
        cur.t = c0.t + h * static_cast<double>(k);
        tr.times.push_back(cur.t);
        tr.energy.push_back(front_energy(cur));
        tr.length.push_back(cur.length());
        if (st.collapsed) {
            tr.collapsed = true;
            tr.snapshots.push_back(cur);
            break;
        }
        if (k % stride == 0 || k == steps) tr.snapshots.push_back(cur);
    }
    return tr;
}

}  // namespace acrobin
