#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "acrobin/errors.hpp"

namespace acrobin {

struct Vec2 {
    double x{0.0};
    double y{0.0};

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double a) const { return {a * x, a * y}; }
    Vec2 operator/(double a) const { return {x / a, y / a}; }
    bool operator==(const Vec2&) const = default;
};

inline Vec2 operator*(double a, Vec2 v) { return v * a; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit(Vec2 a) { return a / norm(a); }
/// Rotation by -90 degrees, [[0, 1], [-1, 0]] v: the curve normal convention.
inline Vec2 rot_minus90(Vec2 t) { return {t.y, -t.x}; }

using Polyline = std::vector<Vec2>;

/// Smooth closed boundary gamma(t), t in [0, 2 pi), counterclockwise.
/// Catalog: circle (unit disk by default) and axis-aligned ellipse.
class SmoothDomain {
public:
    enum class Kind { circle, ellipse };

    static SmoothDomain unit_disk() { return circle(1.0); }
    static SmoothDomain circle(double radius) {
        if (!(radius > 0.0)) throw domain_error("circle radius must be positive");
        return SmoothDomain(Kind::circle, radius, radius);
    }
    static SmoothDomain ellipse(double a, double b) {
        if (!(a > 0.0 && b > 0.0)) throw domain_error("ellipse semi-axes must be positive");
        return SmoothDomain(Kind::ellipse, a, b);
    }

    Kind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    std::string name() const {
        return kind_ == Kind::circle ? "circle(" + std::to_string(a_) + ")"
                                     : "ellipse(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
    }

    Vec2 point(double t) const { return {a_ * std::cos(t), b_ * std::sin(t)}; }
    Vec2 tangent(double t) const { return {-a_ * std::sin(t), b_ * std::cos(t)}; }  // d gamma / dt
    Vec2 normal(double t) const { return unit(rot_minus90(tangent(t))); }           // outward
    double curvature(double t) const {
        const double s = std::sin(t), c = std::cos(t);
        return a_ * b_ / std::pow(a_ * a_ * s * s + b_ * b_ * c * c, 1.5);
    }
    double speed(double t) const { return norm(tangent(t)); }

    /// Level function (x/a)^2 + (y/b)^2 - 1: negative inside.
    double level(Vec2 x) const { return (x.x / a_) * (x.x / a_) + (x.y / b_) * (x.y / b_) - 1.0; }
    bool inside(Vec2 x) const { return level(x) < 0.0; }

    /// Parameter of the closest boundary point to x, in [0, 2 pi).
    double project(Vec2 x) const {
        if (kind_ == Kind::circle) return wrap(std::atan2(x.y, x.x));
        double best = 0.0, dbest = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 64; ++k) {
            const double t = 2.0 * std::numbers::pi * k / 64.0;
            const double d = norm(point(t) - x);
            if (d < dbest) {
                dbest = d;
                best = t;
            }
        }
        double t = best;
        for (int it = 0; it < 50; ++it) {
            const Vec2 d = point(t) - x, d1 = tangent(t), d2{-a_ * std::cos(t), -b_ * std::sin(t)};
            const double g = dot(d, d1), dg = dot(d1, d1) + dot(d, d2);
            const double step = g / (dg > 0.0 ? dg : dot(d1, d1));
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        return wrap(t);
    }

    /// Boundary arclength from t0 to t1 moving counterclockwise.
    double arclength(double t0, double t1) const {
        double span = wrap(t1) - wrap(t0);
        if (span < 0.0) span += 2.0 * std::numbers::pi;
        if (kind_ == Kind::circle) return a_ * span;
        const double w0 = wrap(t0);
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [this](double t) { return speed(t); }, w0, w0 + span, 10, 1e-13);
    }
    double perimeter() const { return kind_ == Kind::circle ? 2.0 * std::numbers::pi * a_ : full(); }

    static double wrap(double t) {
        const double two_pi = 2.0 * std::numbers::pi;
        t = std::fmod(t, two_pi);
        return t < 0.0 ? t + two_pi : t;
    }

private:
    SmoothDomain(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
    double full() const {
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [this](double t) { return speed(t); }, 0.0, 2.0 * std::numbers::pi, 10, 1e-13);
    }

    Kind kind_;
    double a_, b_;
};

/// Discrete front: polyline X_0..X_N with endpoints on the domain boundary.
struct FrontCurve {
    Polyline nodes;
    double t{0.0};
    double alpha{std::numbers::pi / 2};
    std::shared_ptr<const SmoothDomain> domain;

    std::size_t size() const { return nodes.size(); }
    double length() const {
        double L = 0.0;
        for (std::size_t k = 1; k < nodes.size(); ++k) L += norm(nodes[k] - nodes[k - 1]);
        return L;
    }
    double min_spacing() const {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < nodes.size(); ++k) m = std::min(m, norm(nodes[k] - nodes[k - 1]));
        return m;
    }
    double max_spacing() const {
        double m = 0.0;
        for (std::size_t k = 1; k < nodes.size(); ++k) m = std::max(m, norm(nodes[k] - nodes[k - 1]));
        return m;
    }
};

/// Straight segment from a to b sampled with N intervals.
inline FrontCurve segment_front(Vec2 a, Vec2 b, int N, double alpha, std::shared_ptr<const SmoothDomain> dom) {
    if (N < 2) throw domain_error("front needs at least 3 nodes");
    FrontCurve c;
    c.alpha = alpha;
    c.domain = std::move(dom);
    c.nodes.resize(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k <= N; ++k) c.nodes[k] = a + (b - a) * (static_cast<double>(k) / N);
    c.nodes.front() = a;
    c.nodes.back() = b;
    return c;
}

/// Vertical chord x = x0 of the unit disk, oriented upward, so n = (1, 0).
/// It meets the circle at angle acos(x0), and is stationary for alpha = acos(x0).
inline FrontCurve vertical_chord(double x0, int N, double alpha) {
    if (!(std::abs(x0) < 1.0)) throw domain_error("chord must cut the unit disk");
    const double y = std::sqrt(1.0 - x0 * x0);
    return segment_front({x0, -y}, {x0, y}, N, alpha, std::make_shared<SmoothDomain>(SmoothDomain::unit_disk()));
}

struct ChartSample {
    double r{0.0};     ///< signed distance, positive on the side n points to
    double s{0.0};     ///< curve parameter in [-1, 1], unit speed near the ends, extended past them
    int side{0};       ///< sign of r (0 on the curve)
    Vec2 foot;         ///< closest point (on the extended end lines beyond the endpoints)
    Vec2 normal;       ///< unit normal used for the sign
    double z_plus{0.0};
    double z_minus{0.0};
    bool in_tube{true};
    bool tie{false};   ///< equidistant feet detected; smallest s chosen
};

/// z_alpha^+- = -r cos(alpha) + (1 -+ s) sin(alpha).
inline std::pair<double, double> trapeze_coords(double r, double s, double alpha) {
    const double c = std::cos(alpha), sn = std::sin(alpha);
    return {-r * c + (1.0 - s) * sn, -r * c + (1.0 + s) * sn};
}

namespace detail {

struct SegmentHit {
    double dist;
    double arc;  ///< arclength position of the foot (may be < 0 or > length at the ends)
    Vec2 foot;
    Vec2 normal;
    double r;
};

/// Arclength position a in [0, L] to the curve parameter s in [-1, 1]:
/// unit speed within 1/2 of each endpoint, affine in between (affine
/// throughout when L <= 1). Extends linearly past the ends.
inline double arc_to_s(double a, double L) {
    if (L <= 1.0) return 2.0 * a / L - 1.0;
    if (a <= 0.5) return -1.0 + a;
    if (a >= L - 0.5) return 1.0 - (L - a);
    return -0.5 + (a - 0.5) / (L - 1.0);
}

inline std::vector<double> cumulative_length(const Polyline& p) {
    std::vector<double> acc(p.size(), 0.0);
    for (std::size_t k = 1; k < p.size(); ++k) acc[k] = acc[k - 1] + norm(p[k] - p[k - 1]);
    return acc;
}

}  // namespace detail

/// Closest point of x on the polyline; the first and last segments extend
/// along their tangent lines beyond the endpoints. Sign convention n = rot_{-90}(tau).
inline ChartSample project_to_curve(const FrontCurve& curve, Vec2 x, double tube_radius = 0.4) {
    const auto& p = curve.nodes;
    if (p.size() < 3) throw topology_error("project_to_curve needs at least 3 nodes");
    const auto acc = detail::cumulative_length(p);
    const double L = acc.back();
    const std::size_t nseg = p.size() - 1;

    // vertex normals: averaged inside, segment normal at the ends
    std::vector<Vec2> vn(p.size());
    for (std::size_t v = 0; v < p.size(); ++v)
        vn[v] = unit(rot_minus90(p[std::min(v + 1, p.size() - 1)] - p[v > 0 ? v - 1 : 0]));
    vn.front() = unit(rot_minus90(p[1] - p[0]));
    vn.back() = unit(rot_minus90(p.back() - p[p.size() - 2]));

    std::vector<detail::SegmentHit> hits;
    hits.reserve(nseg);
    auto add = [&](std::size_t k, double t, Vec2 nrm) {  // t in units of the segment
        const Vec2 foot = p[k] + (p[k + 1] - p[k]) * t;
        const Vec2 off = x - foot;
        const double dist = norm(off);
        const Vec2 un = unit(nrm);
        const double r = dot(off, un) >= 0.0 ? dist : -dist;
        hits.push_back({dist, acc[k] + t * (acc[k + 1] - acc[k]), foot, un, r});
    };
    // foot P(t) on segment k with x - P(t) parallel to the interpolated normal
    for (std::size_t k = 0; k < nseg; ++k) {
        const Vec2 a = p[k], d = p[k + 1] - p[k];
        if (norm(d) == 0.0) continue;
        const Vec2 w = x - a, na = vn[k], m = vn[k + 1] - vn[k];
        const double c0 = cross(w, na), c1 = cross(w, m) - cross(d, na), c2 = -cross(d, m);
        double roots[2];
        int nr = 0;
        if (std::abs(c2) < 1e-14 * (std::abs(c1) + std::abs(c0))) {
            if (c1 != 0.0) roots[nr++] = -c0 / c1;
        } else {
            const double disc = c1 * c1 - 4.0 * c2 * c0;
            if (disc >= 0.0) {
                const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
                roots[nr++] = q / c2;
                if (q != 0.0) roots[nr++] = c0 / q;
            }
        }
        for (int i = 0; i < nr; ++i) {
            const double t = roots[i];
            if (t >= 0.0 && t <= 1.0) add(k, t, na + m * t);
        }
        // tangent-line extensions past the endpoints (constant normal there)
        if (k == 0 || k == nseg - 1) {
            const double t = dot(w, d) / dot(d, d);
            if (k == 0 && t < 0.0) add(k, t, na);
            if (k == nseg - 1 && t > 1.0) add(k, t, vn[k + 1]);
        }
    }
    if (hits.empty()) {
        // outside the sweep of the normal field: clamped nearest point
        for (std::size_t k = 0; k < nseg; ++k) {
            const Vec2 d = p[k + 1] - p[k];
            if (norm(d) == 0.0) continue;
            const double t = std::clamp(dot(x - p[k], d) / dot(d, d), 0.0, 1.0);
            add(k, t, vn[k] + (vn[k + 1] - vn[k]) * t);
        }
    }
    if (hits.empty()) throw topology_error("project_to_curve: degenerate polyline");

    const double dmin = std::min_element(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
                            return a.dist < b.dist;
                        })->dist;
    const double spacing = L / static_cast<double>(nseg);
    // runs of consecutive near-minimal hits; more than one run means equidistant feet
    ChartSample out;
    auto best = hits.end();
    bool in_run = false;
    int runs = 0;
    for (auto it = hits.begin(); it != hits.end(); ++it) {
        const bool near = it->dist - dmin < spacing / 10.0;
        if (near && !in_run) ++runs;
        in_run = near;
        if (near && runs == 1 && (best == hits.end() || it->dist < best->dist)) best = it;
    }
    out.tie = runs > 1;
    out.r = best->r;
    out.s = detail::arc_to_s(best->arc, L);
    out.side = out.r > 0.0 ? 1 : (out.r < 0.0 ? -1 : 0);
    out.foot = best->foot;
    out.normal = best->normal;
    std::tie(out.z_plus, out.z_minus) = trapeze_coords(out.r, out.s, curve.alpha);
    out.in_tube = std::abs(out.r) <= tube_radius;
    return out;
}

/// Proper intersection of segments [a, b] and [c, d] (shared endpoints excluded by the caller).
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    auto on = [](Vec2 p, Vec2 q, Vec2 r) {  // r on segment pq, collinear
        return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
               r.y <= std::max(p.y, q.y);
    };
    return (d1 == 0 && on(a, b, c)) || (d2 == 0 && on(a, b, d)) || (d3 == 0 && on(c, d, a)) ||
           (d4 == 0 && on(c, d, b));
}

inline bool self_intersects(const Polyline& p) {
    const std::size_t n = p.size();
    if (n < 4) return false;
    // bin segments on a uniform grid about one mean segment length wide; only
    // segments sharing a cell are tested
    double xmin = p[0].x, xmax = p[0].x, ymin = p[0].y, ymax = p[0].y, len = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        xmin = std::min(xmin, p[k].x);
        xmax = std::max(xmax, p[k].x);
        ymin = std::min(ymin, p[k].y);
        ymax = std::max(ymax, p[k].y);
        if (k > 0) len += norm(p[k] - p[k - 1]);
    }
    const double cell = std::max(len / static_cast<double>(n - 1), 1e-300);
    const auto nx = static_cast<std::size_t>(std::min(4096.0, std::floor((xmax - xmin) / cell) + 1));
    const auto ny = static_cast<std::size_t>(std::min(4096.0, std::floor((ymax - ymin) / cell) + 1));
    const double cx = (xmax - xmin) / static_cast<double>(nx) + 1e-300, cy = (ymax - ymin) / static_cast<double>(ny) + 1e-300;
    auto ix = [&](double x) { return std::min(nx - 1, static_cast<std::size_t>((x - xmin) / cx)); };
    auto iy = [&](double y) { return std::min(ny - 1, static_cast<std::size_t>((y - ymin) / cy)); };
    std::unordered_map<std::size_t, std::vector<std::size_t>> bins;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t x0 = ix(std::min(p[i].x, p[i + 1].x)), x1 = ix(std::max(p[i].x, p[i + 1].x));
        const std::size_t y0 = iy(std::min(p[i].y, p[i + 1].y)), y1 = iy(std::max(p[i].y, p[i + 1].y));
        for (std::size_t a = x0; a <= x1; ++a)
            for (std::size_t b = y0; b <= y1; ++b) {
                auto& bin = bins[a * ny + b];
                for (std::size_t j : bin)
                    if (i > j + 1 && segments_intersect(p[i], p[i + 1], p[j], p[j + 1])) return true;
                bin.push_back(i);
            }
    }
    return false;
}

namespace detail {

/// C1 piecewise-cubic Hermite interpolant through the nodes, chord-length
/// parametrized, tangents from the three-point quadratic.
class HermiteCurve {
public:
    explicit HermiteCurve(const Polyline& p) : p_(p), h_(p.size() - 1), d_(p.size()) {
        const std::size_t n = p.size();
        for (std::size_t k = 0; k + 1 < n; ++k) h_[k] = norm(p[k + 1] - p[k]);
        if (n == 2) {
            d_[0] = d_[1] = (p[1] - p[0]) / h_[0];
        } else {
            for (std::size_t k = 1; k + 1 < n; ++k) {
                const double a = h_[k - 1], b = h_[k];
                d_[k] = (p[k + 1] - p[k]) * (a / (b * (a + b))) + (p[k] - p[k - 1]) * (b / (a * (a + b)));
            }
            const double a = h_[0], b = h_[1];
            d_[0] = (p[1] - p[0]) * ((2 * a + b) / (a * (a + b))) - (p[2] - p[1]) * (a / (b * (a + b)));
            const double c = h_[n - 2], e = h_[n - 3];
            d_[n - 1] = (p[n - 1] - p[n - 2]) * ((2 * c + e) / (c * (c + e))) - (p[n - 2] - p[n - 3]) * (c / (e * (c + e)));
        }
        len_.resize(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) len_[k] = length(k, 1.0);
    }
    std::size_t segments() const { return h_.size(); }
    double segment_length(std::size_t k) const { return len_[k]; }
    Vec2 point(std::size_t k, double u) const {
        const double u2 = u * u, u3 = u2 * u, h = h_[k];
        return p_[k] * (2 * u3 - 3 * u2 + 1) + d_[k] * (h * (u3 - 2 * u2 + u)) + p_[k + 1] * (-2 * u3 + 3 * u2) +
               d_[k + 1] * (h * (u3 - u2));
    }
    double speed(std::size_t k, double u) const {  // |dP/du|
        const double u2 = u * u, h = h_[k];
        return norm(p_[k] * (6 * u2 - 6 * u) + d_[k] * (h * (3 * u2 - 4 * u + 1)) + p_[k + 1] * (-6 * u2 + 6 * u) +
                    d_[k + 1] * (h * (3 * u2 - 2 * u)));
    }
    double length(std::size_t k, double u) const {
        return boost::math::quadrature::gauss<double, 10>::integrate([&](double v) { return speed(k, v); }, 0.0, u);
    }
    /// u in [0, 1] with length(k, u) = target
    double invert(std::size_t k, double target) const {
        double lo = 0.0, hi = 1.0, u = target / len_[k];
        for (int it = 0; it < 60; ++it) {
            const double F = length(k, u) - target;
            if (std::abs(F) < 1e-15 * len_[k]) break;
            (F > 0 ? hi : lo) = u;
            const double sp = speed(k, u);
            double next = sp > 0.0 ? u - F / sp : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            u = next;
        }
        return u;
    }

private:
    const Polyline& p_;
    std::vector<double> h_;
    std::vector<Vec2> d_;
    std::vector<double> len_;
};

}  // namespace detail

/// N + 1 nodes at equal arclength along the cubic interpolant of the nodes;
/// endpoints kept exactly.
inline Polyline resample_arclength(const Polyline& p, int N) {
    if (p.size() < 2) throw topology_error("resample_arclength needs at least 2 nodes");
    if (N < 2) throw domain_error("resample_arclength needs N >= 2");
    if (self_intersects(p)) throw topology_error("resample_arclength: polyline self-intersects");
    for (std::size_t k = 1; k < p.size(); ++k)
        if (norm(p[k] - p[k - 1]) == 0.0) throw topology_error("resample_arclength: repeated node");
    const detail::HermiteCurve spline(p);
    std::vector<double> acc(spline.segments() + 1, 0.0);
    for (std::size_t k = 0; k < spline.segments(); ++k) acc[k + 1] = acc[k] + spline.segment_length(k);
    const double L = acc.back();
    Polyline out(static_cast<std::size_t>(N) + 1);
    out.front() = p.front();
    out.back() = p.back();
    std::size_t seg = 0;
    for (int k = 1; k < N; ++k) {
        const double target = L * static_cast<double>(k) / N;
        while (seg + 2 < acc.size() && acc[seg + 1] < target) ++seg;
        out[k] = spline.point(seg, spline.invert(seg, target - acc[seg]));
    }
    return out;
}

inline FrontCurve resample_arclength(const FrontCurve& c, int N) {
    FrontCurve out = c;
    out.nodes = resample_arclength(c.nodes, N);
    return out;
}

/// Smooth cutoff: 1 for |t| <= 1, 0 for |t| >= 2, C-infinity in between.
inline double smooth_cutoff(double t) {
    const double a = std::abs(t);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
    const double x = 2.0 - a;
    return psi(x) / (psi(x) + psi(1.0 - x));
}

}  // namespace acrobin
