#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "acrobin/acsolver.hpp"
#include "acrobin/errors.hpp"
#include "acrobin/geometry.hpp"
#include "acrobin/mcf.hpp"
#include "acrobin/parallel.hpp"
#include "acrobin/profile.hpp"

namespace acrobin {

/// Signed distance to the front at every node (r > 0 on the side n points to).
inline std::vector<double> signed_distance(const PolarGrid& g, const FrontCurve& front) {
    std::vector<double> r(g.size());
    r[0] = project_to_curve(front, {0.0, 0.0}, 1e300).r;
    parallel_for(1, static_cast<std::size_t>(g.n_r) + 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            for (int j = 0; j < g.n_phi; ++j)
                r[g.index(static_cast<int>(i), j)] = project_to_curve(front, g.node(static_cast<int>(i), j), 1e300).r;
    }, 4);
    return r;
}

/// u0 = eta(r/delta0) theta_0(r/eps) + (1 - eta(r/delta0)) sign(r), eta = 1 on
/// |r| <= delta0 and 0 beyond 2 delta0.
inline Field2D well_prepared_initial(double eps, const FrontCurve& front, const PolarGrid& g,
                                     std::shared_ptr<const Potential> p, std::shared_ptr<const BoundaryEnergy> s,
                                     const Profile& theta0, double delta0 = 0.1) {
    if (!(delta0 > 0.0)) throw domain_error("well_prepared_initial: delta0 must be positive");
    if (front.size() < 3) throw domain_error("well_prepared_initial: front needs at least 3 nodes");
    Field2D u = make_field(g, eps, std::move(p), std::move(s), [](double, double) { return 0.0; });
    const auto r = signed_distance(g, front);
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double eta = smooth_cutoff(r[k] / delta0);
        const double sgn = r[k] > 0.0 ? 1.0 : (r[k] < 0.0 ? -1.0 : 0.0);
        u.u[k] = eta == 0.0 ? sgn : eta * theta0.value(r[k] / eps) + (1.0 - eta) * sgn;
    }
    u.t = front.t;
    return u;
}

struct ZeroSet {
    Polyline longest;
    std::vector<Polyline> others;
    bool empty() const { return longest.empty(); }
};

namespace detail {

inline std::uint64_t edge_key(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace detail

/// Marching squares for u = 0 on the polar cells (centre fan of triangles,
/// quadrilaterals between rings), crossings by linear interpolation along
/// straight Cartesian edges. Nodes with u = 0 count as positive. Saddles are
/// split by the cell mean.
inline ZeroSet extract_zero_set(const Field2D& f) {
    const auto& g = f.grid;
    const auto& u = f.u;
    const int np = g.n_phi;
    auto pos = [&](std::size_t k) { return k == 0 ? Vec2{0.0, 0.0} : f.position(k); };
    auto plus = [&](std::size_t k) { return u[k] >= 0.0; };
    std::map<std::uint64_t, Vec2> point;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> segs;
    auto cross = [&](std::size_t a, std::size_t b) {
        const auto key = detail::edge_key(a, b);
        if (!point.count(key)) {
            const double t = u[a] / (u[a] - u[b]);
            point[key] = pos(a) + t * (pos(b) - pos(a));
        }
        return key;
    };
    // polygon with vertices in cyclic order; 3 or 4 nodes
    auto cell = [&](const std::vector<std::size_t>& v) {
        std::vector<std::uint64_t> hits;
        const std::size_t m = v.size();
        for (std::size_t e = 0; e < m; ++e) {
            const std::size_t a = v[e], b = v[(e + 1) % m];
            if (plus(a) != plus(b)) hits.push_back(cross(a, b));
        }
        if (hits.size() == 2) {
            segs.emplace_back(hits[0], hits[1]);
        } else if (hits.size() == 4) {
            double mean = 0.0;
            for (auto k : v) mean += u[k];
            // hits[e] sits on edge e; pair around the vertex whose sign differs from the mean
            const bool join_first = plus(v[0]) != (mean >= 0.0);
            if (join_first) {
                segs.emplace_back(hits[3], hits[0]);
                segs.emplace_back(hits[1], hits[2]);
            } else {
                segs.emplace_back(hits[0], hits[1]);
                segs.emplace_back(hits[2], hits[3]);
            }
        }
    };
    for (int j = 0; j < np; ++j) cell({0, g.index(1, j), g.index(1, (j + 1) % np)});
    for (int i = 1; i < g.n_r; ++i)
        for (int j = 0; j < np; ++j) {
            const int jn = (j + 1) % np;
            cell({g.index(i, j), g.index(i + 1, j), g.index(i + 1, jn), g.index(i, jn)});
        }

    // join segments into polylines through shared edge crossings
    std::map<std::uint64_t, std::vector<std::size_t>> at;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        at[segs[s].first].push_back(s);
        at[segs[s].second].push_back(s);
    }
    std::vector<char> used(segs.size(), 0);
    auto walk = [&](std::uint64_t start, std::size_t first) {
        std::vector<std::uint64_t> keys{start};
        std::uint64_t cur = start;
        std::size_t s = first;
        while (!used[s]) {
            used[s] = 1;
            cur = segs[s].first == cur ? segs[s].second : segs[s].first;
            keys.push_back(cur);
            std::size_t next = segs.size();
            for (auto c : at[cur])
                if (!used[c]) next = c;
            if (next == segs.size()) break;
            s = next;
        }
        Polyline line;
        for (auto k : keys) line.push_back(point[k]);
        return line;
    };
    std::vector<Polyline> lines;
    // open chains first (ends have a single segment), then closed loops
    for (const auto& [key, list] : at)
        if (list.size() == 1 && !used[list[0]]) lines.push_back(walk(key, list[0]));
    for (std::size_t s = 0; s < segs.size(); ++s)
        if (!used[s]) lines.push_back(walk(segs[s].first, s));

    ZeroSet out;
    if (lines.empty()) return out;
    auto length = [](const Polyline& p) {
        double L = 0.0;
        for (std::size_t k = 1; k < p.size(); ++k) L += norm(p[k] - p[k - 1]);
        return L;
    };
    std::size_t best = 0;
    for (std::size_t k = 1; k < lines.size(); ++k)
        if (length(lines[k]) > length(lines[best])) best = k;
    out.longest = std::move(lines[best]);
    for (std::size_t k = 0; k < lines.size(); ++k)
        if (k != best) out.others.push_back(std::move(lines[k]));
    return out;
}

namespace detail {

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    const double L2 = dot(d, d);
    const double t = L2 > 0.0 ? std::clamp(dot(p - a, d) / L2, 0.0, 1.0) : 0.0;
    return norm(p - (a + t * d));
}

inline double point_polyline_distance(Vec2 p, const Polyline& b) {
    if (b.size() == 1) return norm(p - b[0]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < b.size(); ++k) best = std::min(best, point_segment_distance(p, b[k - 1], b[k]));
    return best;
}

/// sup over the polyline a of the distance to b. Along a segment of a the
/// distance to each segment of b is convex, so on [t0, t1] the supremum is
/// at most min_j max(d_j(t0), d_j(t1)); bisection closes the gap.
inline double directed_hausdorff(const Polyline& a, const Polyline& b, double tol) {
    double best = 0.0;
    for (Vec2 p : a) best = std::max(best, point_polyline_distance(p, b));
    if (a.size() < 2) return best;
    auto dist_j = [&](Vec2 p, std::vector<double>& d) {
        d.resize(b.size() > 1 ? b.size() - 1 : 1);
        if (b.size() == 1) d[0] = norm(p - b[0]);
        else
            for (std::size_t k = 1; k < b.size(); ++k) d[k - 1] = point_segment_distance(p, b[k - 1], b[k]);
    };
    struct Item {
        Vec2 p0, p1;
        std::vector<double> d0, d1;
        int depth;
    };
    for (std::size_t k = 1; k < a.size(); ++k) {
        std::vector<Item> stack;
        Item first{a[k - 1], a[k], {}, {}, 0};
        dist_j(first.p0, first.d0);
        dist_j(first.p1, first.d1);
        stack.push_back(std::move(first));
        while (!stack.empty()) {
            Item it = std::move(stack.back());
            stack.pop_back();
            double ub = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < it.d0.size(); ++j) ub = std::min(ub, std::max(it.d0[j], it.d1[j]));
            if (ub <= best + tol || it.depth > 60) continue;
            const Vec2 mid = 0.5 * (it.p0 + it.p1);
            std::vector<double> dm;
            dist_j(mid, dm);
            best = std::max(best, *std::min_element(dm.begin(), dm.end()));
            stack.push_back({it.p0, mid, it.d0, dm, it.depth + 1});
            stack.push_back({mid, it.p1, std::move(dm), std::move(it.d1), it.depth + 1});
        }
    }
    return best;
}

}  // namespace detail

/// Symmetric Hausdorff distance between polylines (segments, not just nodes),
/// to absolute accuracy tol.
inline double hausdorff(const Polyline& a, const Polyline& b, double tol = 1e-12) {
    if (a.empty() || b.empty()) throw domain_error("hausdorff: empty polyline");
    return std::max(detail::directed_hausdorff(a, b, tol), detail::directed_hausdorff(b, a, tol));
}

/// L^2 norm of u - theta_0(r/eps) over the nodes with |r| < delta0 (cell areas).
inline double profile_error(const Field2D& u, const FrontCurve& front, const Profile& theta0, double delta0 = 0.1) {
    const auto& g = u.grid;
    std::vector<double> ring(static_cast<std::size_t>(g.n_r) + 1, 0.0);
    auto term = [&](std::size_t k, Vec2 x, double area) {
        const auto q = project_to_curve(front, x, delta0);
        if (!(std::abs(q.r) < delta0)) return 0.0;
        const double e = u.u[k] - theta0.value(q.r / u.eps);
        return area * e * e;
    };
    ring[0] = term(0, {0.0, 0.0}, g.center_area());
    parallel_for(1, static_cast<std::size_t>(g.n_r) + 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double acc = 0.0;
            for (int j = 0; j < g.n_phi; ++j) {
                const std::size_t k = g.index(static_cast<int>(i), j);
                acc += term(k, g.node(static_cast<int>(i), j), g.area(static_cast<int>(i)));
            }
            ring[i] = acc;
        }
    }, 4);
    double sum = 0.0;
    for (double v : ring) sum += v;
    return std::sqrt(sum);
}

struct RateFit {
    double p{std::numeric_limits<double>::quiet_NaN()};  ///< slope of log(d) against log(eps)
    double intercept{0.0};
    double residual{0.0};  ///< rms of the log fit
    double stderr_p{0.0};  ///< standard error of the slope (0 for two points or an exact fit)
    std::size_t points{0};
};

/// Least squares log(d) = intercept + p log(eps) over the entries with d > 0.
inline RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& d) {
    if (eps.size() != d.size()) throw domain_error("fit_rate: size mismatch");
    std::vector<double> x, y;
    for (std::size_t k = 0; k < eps.size(); ++k)
        if (eps[k] > 0.0 && d[k] > 0.0 && std::isfinite(d[k])) {
            x.push_back(std::log(eps[k]));
            y.push_back(std::log(d[k]));
        }
    RateFit f;
    f.points = x.size();
    if (x.size() < 2) return f;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (sxx <= 0.0) return f;
    f.p = sxy / sxx;
    f.intercept = my - f.p * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = y[k] - (f.intercept + f.p * x[k]);
        ss += e * e;
    }
    f.residual = std::sqrt(ss / n);
    if (x.size() > 2) f.stderr_p = std::sqrt(ss / (n - 2.0) / sxx);
    return f;
}

struct ConvergenceConfig {
    std::vector<double> eps{0.08, 0.04, 0.02};
    double alpha{std::numbers::pi / 2};
    FrontCurve front;                 ///< Gamma_0
    double T{0.05};
    int snapshots{10};                ///< uniform in [0, T], both ends included
    double dt_factor{0.1};            ///< AC time step dt = dt_factor eps^2 (times eps/eps_max if dt_linear)
    bool dt_linear{true};             ///< shrink dt/eps^2 with eps so the splitting error is O(eps)
    double radial_per_eps{10.24};     ///< PolarGrid::for_eps parameters
    double angular_per_eps{4.0};
    double delta0{0.1};
    int mcf_nodes{200};
    double mcf_dt_factor{0.25};       ///< MCF time step = factor * spacing^2
    double support_margin{0.1};
    BumpShape shape{BumpShape::exponential};
    std::shared_ptr<const Potential> potential;  ///< default quartic
};

struct EpsilonResult {
    double eps{0.0};
    bool ok{false};
    std::string error;
    int n_r{0}, n_phi{0};
    double dt{0.0};
    long steps{0};
    std::vector<double> times;
    std::vector<double> distance;       ///< Hausdorff(zero set, MCF front) per snapshot
    std::vector<double> profile_l2;     ///< per snapshot
    std::vector<double> tube_excursion; ///< sup over the zero set of the distance to the front
    double sup_distance{0.0};
    double sup_profile_l2{0.0};
    double terminal_energy{0.0};
    bool in_tube{true};                 ///< zero set within 2 delta0 of the front at every snapshot
};

struct ConvergenceReport {
    ConvergenceConfig config;
    std::vector<EpsilonResult> runs;  ///< in config order (eps decreasing)
    RateFit distance_fit;
    RateFit profile_fit;
    bool fit_ok{false};  ///< at least three successful eps
    bool monotone{false};  ///< sup distance strictly decreasing along the successful runs
    bool profile_monotone{false};
};

namespace detail {

inline EpsilonResult run_one_eps(const ConvergenceConfig& cfg, double eps, const Profile& theta0,
                                 const std::vector<FrontCurve>& fronts, const std::vector<double>& times) {
    EpsilonResult res;
    res.eps = eps;
    try {
        const auto grid = PolarGrid::for_eps(eps, cfg.radial_per_eps, cfg.angular_per_eps);
        res.n_r = grid.n_r;
        res.n_phi = grid.n_phi;
        auto sigma = std::make_shared<BoundaryEnergy>(cfg.alpha, surface_constant(*cfg.potential), cfg.support_margin,
                                                      cfg.shape);
        Field2D u = well_prepared_initial(eps, cfg.front, grid, cfg.potential, sigma, theta0, cfg.delta0);
        res.dt = cfg.dt_factor * eps * eps;
        if (cfg.dt_linear) res.dt *= eps / cfg.eps.front();
        double energy_now = energy(u);
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (k > 0) {
                const auto tr = run_ac(u, times[k] - times[k - 1], res.dt, 1 << 30);
                res.steps += static_cast<long>(tr.times.size()) - 1;
                u = tr.snapshots.back();
                u.t = times[k];
                energy_now = tr.energy.back();
            }
            const auto zs = extract_zero_set(u);
            res.times.push_back(times[k]);
            if (zs.empty()) throw numerical_error("zero set vanished at t = " + std::to_string(times[k]));
            res.distance.push_back(hausdorff(zs.longest, fronts[k].nodes));
            const double out = detail::directed_hausdorff(zs.longest, fronts[k].nodes, 1e-12);
            res.tube_excursion.push_back(out);
            if (out > 2.0 * cfg.delta0) res.in_tube = false;
            res.profile_l2.push_back(profile_error(u, fronts[k], theta0, cfg.delta0));
        }
        res.sup_distance = *std::max_element(res.distance.begin(), res.distance.end());
        res.sup_profile_l2 = *std::max_element(res.profile_l2.begin(), res.profile_l2.end());
        res.terminal_energy = energy_now;
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

}  // namespace detail

/// AC from well-prepared data against front-tracked MCF for each eps, compared
/// at uniform snapshot times. Runs for different eps execute concurrently
/// when more than one thread is allowed; the result does not depend on it.
inline ConvergenceReport convergence_study(ConvergenceConfig cfg) {
    if (cfg.eps.size() < 3) throw domain_error("convergence_study: need at least 3 eps values");
    for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
        if (!(cfg.eps[k] > 0.0)) throw domain_error("convergence_study: eps must be positive");
        if (k > 0 && !(cfg.eps[k] < cfg.eps[k - 1])) throw domain_error("convergence_study: eps must be strictly decreasing");
    }
    if (!(cfg.T > 0.0) || cfg.snapshots < 2) throw domain_error("convergence_study: need T > 0 and >= 2 snapshots");
    if (cfg.front.size() < 3 || !cfg.front.domain) throw domain_error("convergence_study: initial front missing");
    if (!cfg.potential) cfg.potential = std::make_shared<Potential>(Potential::quartic());
    cfg.front.alpha = cfg.alpha;

    std::vector<double> times;
    for (int k = 0; k < cfg.snapshots; ++k) times.push_back(cfg.T * k / (cfg.snapshots - 1));

    // the sharp-interface reference, shared by all eps
    FrontCurve front = cfg.front;
    front.nodes = resample_arclength(front.nodes, cfg.mcf_nodes);
    const double spacing = front.length() / (cfg.mcf_nodes - 1);
    const double mcf_dt = cfg.mcf_dt_factor * spacing * spacing;
    std::vector<FrontCurve> fronts{front};
    for (std::size_t k = 1; k < times.size(); ++k) {
        const auto tr = run_mcf(fronts.back(), times[k] - times[k - 1], mcf_dt, 1 << 30);
        if (tr.collapsed) throw numerical_error("convergence_study: MCF front collapsed before T");
        fronts.push_back(tr.snapshots.back());
        fronts.back().t = times[k];
    }

    const Profile theta0 = solve_optimal_profile(*cfg.potential);
    ConvergenceReport rep;
    rep.runs.resize(cfg.eps.size());
    if (threads() > 1) {
        std::vector<std::future<EpsilonResult>> jobs;
        for (double eps : cfg.eps)
            jobs.push_back(std::async(std::launch::async, [&, eps] { return detail::run_one_eps(cfg, eps, theta0, fronts, times); }));
        for (std::size_t k = 0; k < jobs.size(); ++k) rep.runs[k] = jobs[k].get();
    } else {
        for (std::size_t k = 0; k < cfg.eps.size(); ++k) rep.runs[k] = detail::run_one_eps(cfg, cfg.eps[k], theta0, fronts, times);
    }
    rep.config = std::move(cfg);

    std::vector<double> e, d, pl;
    for (const auto& r : rep.runs)
        if (r.ok) {
            e.push_back(r.eps);
            d.push_back(r.sup_distance);
            pl.push_back(r.sup_profile_l2);
        }
    rep.fit_ok = e.size() >= 3;
    if (rep.fit_ok) {
        rep.distance_fit = fit_rate(e, d);
        rep.profile_fit = fit_rate(e, pl);
    }
    rep.monotone = rep.fit_ok;
    rep.profile_monotone = rep.fit_ok;
    for (std::size_t k = 1; k < d.size(); ++k) {
        if (!(d[k] < d[k - 1])) rep.monotone = false;
        if (!(pl[k] <= pl[k - 1])) rep.profile_monotone = false;
    }
    return rep;
}

/// Gamma_0 for the experiments: the vertical chord x = x0 bent by
/// x = x0 + amplitude cos^2(pi y / (2 y_max)); ends and contact angles unchanged.
inline FrontCurve perturbed_chord(double x0, double amplitude, int N, double alpha) {
    if (!(std::abs(x0) < 1.0)) throw domain_error("perturbed_chord: chord must cut the unit disk");
    if (N < 3) throw domain_error("perturbed_chord: need at least 3 nodes");
    FrontCurve c = vertical_chord(x0, N, alpha);
    const double ym = std::sqrt(1.0 - x0 * x0);
    for (auto& p : c.nodes) {
        const double w = std::cos(0.5 * std::numbers::pi * p.y / ym);
        p.x = x0 + amplitude * w * w;
    }
    return c;
}

}  // namespace acrobin
