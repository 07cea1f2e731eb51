#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "acrobin/errors.hpp"
#include "acrobin/parallel.hpp"
#include "acrobin/potential.hpp"
#include "acrobin/profile.hpp"

namespace acrobin {

/// Uniform node grid on [-L_R, L_R] x [0, L_H]. Storage is row-major in H:
/// node (i, j) lives at j * n_R + i.
struct HalfPlaneGrid {
    double L_R{10.0};
    double L_H{10.0};
    int n_R{401};  ///< odd, so that R = 0 is a node
    int n_H{201};

    double h_R() const { return 2.0 * L_R / (n_R - 1); }
    double h_H() const { return L_H / (n_H - 1); }
    double R(int i) const { return i == (n_R - 1) / 2 ? 0.0 : -L_R + h_R() * i; }
    double H(int j) const { return h_H() * j; }
    std::size_t size() const { return static_cast<std::size_t>(n_R) * static_cast<std::size_t>(n_H); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_R) + static_cast<std::size_t>(i);
    }

    /// Grid with spacing close to h in both directions.
    static HalfPlaneGrid with_spacing(double L_R, double L_H, double h) {
        HalfPlaneGrid g;
        g.L_R = L_R;
        g.L_H = L_H;
        g.n_R = 2 * static_cast<int>(std::lround(L_R / h)) + 1;
        g.n_H = static_cast<int>(std::lround(L_H / h)) + 1;
        return g;
    }
};

struct HalfPlaneOptions {
    HalfPlaneGrid grid;
    double newton_tol{1e-10};
    int max_newton{40};
    double beta{0.8};   ///< weight e^{beta |R| + gamma H} for the weighted norms
    double gamma{0.8};
};

struct HalfPlaneField {
    HalfPlaneGrid grid;
    Potential potential;
    BoundaryEnergy sigma;
    double alpha{std::numbers::pi / 2};
    double cos_alpha{0.0};
    std::array<std::array<double, 2>, 2> A{};
    std::vector<double> v;
    std::vector<double> theta_h;      ///< discrete 1D profile on the R nodes (far-field data)
    std::vector<double> theta_slope;  ///< theta_0' at the R nodes
    double interior_residual{0.0};
    double boundary_residual{0.0};
    double weighted_residual{0.0};
    double weighted_deviation{0.0};  ///< max |v - theta_h| e^{beta|R| + gamma H}
    double beta{0.8};
    double gamma{0.8};
    int newton_steps{0};
    std::vector<double> updates;    ///< max-norm Newton updates
    std::vector<double> residuals;  ///< max-norm residual after each step (entry 0: initial)

    double operator()(int i, int j) const { return v[grid.index(i, j)]; }
};

namespace detail {

/// Finite-difference stencil of -div(A grad .) with the ghost row at H = -h_H.
struct HalfPlaneStencil {
    int nR, nH;
    double c, hR, hH;

    HalfPlaneStencil(const HalfPlaneGrid& g, double cos_alpha)
        : nR(g.n_R), nH(g.n_H), c(cos_alpha), hR(g.h_R()), hH(g.h_H()) {}

    bool unknown(int i, int j) const { return i >= 1 && i <= nR - 2 && j >= 0 && j <= nH - 2; }
    bool side(int i) const { return i == 0 || i == nR - 1; }
    Eigen::Index column(int i, int j) const { return static_cast<Eigen::Index>(j) * (nR - 2) + (i - 1); }
    Eigen::Index unknowns() const { return static_cast<Eigen::Index>(nR - 2) * (nH - 1); }
    std::size_t at(int i, int j) const { return static_cast<std::size_t>(j) * nR + i; }

    /// visit(p, q, coef) over the 9-point stencil; q may be -1 (ghost).
    template <class Visit>
    void stencil(int i, int j, Visit&& visit) const {
        const double r2 = 1.0 / (hR * hR), h2 = 1.0 / (hH * hH), m = c / (2.0 * hR * hH);
        visit(i, j, 2.0 * r2 + 2.0 * h2);
        visit(i - 1, j, -r2);
        visit(i + 1, j, -r2);
        visit(i, j - 1, -h2);
        visit(i, j + 1, -h2);
        if (c != 0.0) {
            visit(i + 1, j + 1, m);
            visit(i - 1, j - 1, m);
            visit(i + 1, j - 1, -m);
            visit(i - 1, j + 1, -m);
        }
    }
};

/// Discrete profile on the R nodes: -D2 theta + f'(theta) + lambda theta_0' = 0,
/// theta(0) = 0, end values theta_0(+-L_R). The multiplier absorbs the
/// exponentially small mismatch of pinning both ends and the centre.
inline std::vector<double> discrete_profile(const Profile& prof, const HalfPlaneGrid& g) {
    const int n = g.n_R, c = (n - 1) / 2, m = n - 2;
    const double h = g.h_R(), ih2 = 1.0 / (h * h);
    const auto& p = prof.potential;
    std::vector<double> th(n), phi(n);
    for (int i = 0; i < n; ++i) {
        th[i] = prof.value(g.R(i));
        phi[i] = prof.derivative(g.R(i));
    }
    th[c] = 0.0;
    double lambda = 0.0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    for (int it = 0; it < 30; ++it) {
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd F(m + 1);
        for (int i = 1; i <= m; ++i) {
            const Eigen::Index r = i - 1;
            F[r] = -(th[i - 1] - 2.0 * th[i] + th[i + 1]) * ih2 + p.df(th[i]) + lambda * phi[i];
            trips.emplace_back(r, r, 2.0 * ih2 + p.d2f(th[i]));
            if (i > 1) trips.emplace_back(r, r - 1, -ih2);
            if (i < m) trips.emplace_back(r, r + 1, -ih2);
            trips.emplace_back(r, m, phi[i]);
        }
        F[m] = th[c];
        trips.emplace_back(m, c - 1, 1.0);
        Eigen::SparseMatrix<double> J(m + 1, m + 1);
        J.setFromTriplets(trips.begin(), trips.end());
        lu.compute(J);
        if (lu.info() != Eigen::Success) throw numerical_error("discrete profile: singular bordered system");
        const Eigen::VectorXd d = lu.solve(F);
        double step = 0.0;
        for (int i = 1; i <= m; ++i) {
            th[i] -= d[i - 1];
            step = std::max(step, std::abs(d[i - 1]));
        }
        lambda -= d[m];
        if (step <= 1e-15) break;
        if (it == 29) throw convergence_error("discrete profile: Newton did not converge", step);
    }
    th[c] = 0.0;
    return th;
}

inline double trapezoid_2d(const HalfPlaneGrid& g, std::span<const double> y) {
    std::vector<double> rows(g.n_H);
    for (int j = 0; j < g.n_H; ++j) rows[j] = trapezoid(y.subspan(g.index(0, j), g.n_R), g.h_R());
    return trapezoid(rows, g.h_H());
}

/// d/dR by central differences, second-order one-sided at the ends.
inline void diff_R(std::span<const double> row, double h, std::span<double> out) {
    const std::size_t n = row.size();
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (row[i + 1] - row[i - 1]) / (2.0 * h);
    out[0] = (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * h);
    out[n - 1] = (3.0 * row[n - 1] - 4.0 * row[n - 2] + row[n - 3]) / (2.0 * h);
}

/// Nodal d_R v and d_H v; at H = 0 d_H v comes from the boundary condition.
inline void field_gradient(const HalfPlaneField& fld, std::vector<double>& vR, std::vector<double>& vH) {
    const auto& g = fld.grid;
    const double hR = g.h_R(), hH = g.h_H();
    vR.assign(g.size(), 0.0);
    vH.assign(g.size(), 0.0);
    const std::span<const double> v(fld.v);
    for (int j = 0; j < g.n_H; ++j)
        diff_R(v.subspan(g.index(0, j), g.n_R), hR, std::span<double>(vR).subspan(g.index(0, j), g.n_R));
    const int top = g.n_H - 1;
    for (int i = 0; i < g.n_R; ++i) {
        vH[g.index(i, 0)] = fld.cos_alpha * vR[g.index(i, 0)] + fld.sigma.dsigma(fld(i, 0));
        for (int j = 1; j < top; ++j) vH[g.index(i, j)] = (fld(i, j + 1) - fld(i, j - 1)) / (2.0 * hH);
        vH[g.index(i, top)] = (3.0 * fld(i, top) - 4.0 * fld(i, top - 1) + fld(i, top - 2)) / (2.0 * hH);
    }
}

inline double weight(const HalfPlaneGrid& g, int i, int j, double beta, double gamma) {
    return std::exp(beta * std::abs(g.R(i)) + gamma * g.H(j));
}

}  // namespace detail

/// Discrete residual of the nonlinear problem at the unknown nodes, evaluated
/// for arbitrary values (Dirichlet data read from the values themselves).
/// Returned vector is indexed like the grid; Dirichlet nodes hold 0.
inline std::vector<double> halfplane_residual(const HalfPlaneGrid& g, const Potential& p, const BoundaryEnergy& s,
                                              std::span<const double> v) {
    if (v.size() != g.size()) throw domain_error("halfplane_residual: value count does not match grid");
    const detail::HalfPlaneStencil st(g, s.cos_alpha());
    std::vector<double> F(g.size(), 0.0);
    auto ghost = [&](int p_) {
        double val = v[st.at(p_, 1)];
        if (!st.side(p_))
            val -= 2.0 * st.hH *
                   (st.c * (v[st.at(p_ + 1, 0)] - v[st.at(p_ - 1, 0)]) / (2.0 * st.hR) + s.dsigma(v[st.at(p_, 0)]));
        return val;
    };
    parallel_for(0, static_cast<std::size_t>(g.n_H - 1), [&](std::size_t lo, std::size_t hi) {
        for (int j = static_cast<int>(lo); j < static_cast<int>(hi); ++j)
            for (int i = 1; i <= g.n_R - 2; ++i) {
                double acc = p.df(v[st.at(i, j)]);
                st.stencil(i, j, [&](int a, int b, double coef) { acc += coef * (b < 0 ? ghost(a) : v[st.at(a, b)]); });
                F[st.at(i, j)] = acc;
            }
    });
    return F;
}

namespace detail {

/// Jacobian of halfplane_residual at v restricted to the unknowns. With
/// lagged = true the sigma'' contribution is left out (its entries are kept
/// as explicit zeros so the sparsity pattern does not change).
inline Eigen::SparseMatrix<double> halfplane_jacobian(const HalfPlaneGrid& g, const Potential& p,
                                                      const BoundaryEnergy& s, std::span<const double> v,
                                                      bool lagged) {
    const HalfPlaneStencil st(g, s.cos_alpha());
    const int rows = g.n_H - 1;
    std::vector<std::vector<Eigen::Triplet<double>>> parts(static_cast<std::size_t>(rows));
    parallel_for(0, static_cast<std::size_t>(rows), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t jj = lo; jj < hi; ++jj) {
            const int j = static_cast<int>(jj);
            auto& trips = parts[jj];
            trips.reserve(static_cast<std::size_t>(g.n_R) * (j == 0 ? 20 : 9));
            for (int i = 1; i <= g.n_R - 2; ++i) {
                const Eigen::Index row = st.column(i, j);
                auto add = [&](int a, int b, double val) {
                    if (st.unknown(a, b)) trips.emplace_back(row, st.column(a, b), val);
                };
                add(i, j, p.d2f(v[st.at(i, j)]));
                st.stencil(i, j, [&](int a, int b, double coef) {
                    if (b >= 0) {
                        add(a, b, coef);
                        return;
                    }
                    add(a, 1, coef);
                    if (st.side(a)) return;
                    const double k = coef * st.c * st.hH / st.hR;
                    add(a + 1, 0, -k);
                    add(a - 1, 0, k);
                    add(a, 0, lagged ? 0.0 : -coef * 2.0 * st.hH * s.d2sigma(v[st.at(a, 0)]));
                });
            }
        }
    });
    std::vector<Eigen::Triplet<double>> all;
    for (auto& part : parts) all.insert(all.end(), part.begin(), part.end());
    Eigen::SparseMatrix<double> J(st.unknowns(), st.unknowns());
    J.setFromTriplets(all.begin(), all.end());
    J.makeCompressed();
    return J;
}

inline std::array<double, 3> residual_norms(const HalfPlaneGrid& g, std::span<const double> F, double beta,
                                            double gamma) {
    double interior = 0.0, boundary = 0.0, weighted = 0.0;
    for (int j = 0; j <= g.n_H - 2; ++j)
        for (int i = 1; i <= g.n_R - 2; ++i) {
            const double r = std::abs(F[g.index(i, j)]);
            double& slot = j == 0 ? boundary : interior;
            slot = std::max(slot, r);
            weighted = std::max(weighted, r * weight(g, i, j, beta, gamma));
        }
    return {interior, boundary, weighted};
}

inline double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double a : x) m = std::max(m, std::abs(a));
    return m;
}

}  // namespace detail

/// Damped Newton for -div(A_alpha grad v) + f'(v) = 0 on the truncated
/// half-plane, v_H = cos(alpha) v_R + sigma_alpha'(v) at H = 0 (ghost row),
/// Dirichlet far-field data theta_h(R) on the other three sides.
inline HalfPlaneField solve_nonlinear_halfplane(const Potential& p, const BoundaryEnergy& s,
                                                const HalfPlaneOptions& opt = {}) {
    const auto& g = opt.grid;
    const double alpha = s.alpha();
    if (std::abs(alpha - std::numbers::pi / 2) > 0.35 + 1e-12)
        throw domain_error("half-plane solver needs |alpha - pi/2| <= 0.35 rad, got alpha = " + std::to_string(alpha));
    if (g.n_R < 11 || g.n_R % 2 == 0 || g.n_H < 5) throw domain_error("half-plane grid needs odd n_R >= 11, n_H >= 5");
    const double kmax = std::sqrt(std::max(p.d2f(-1.0), p.d2f(1.0)));
    const double kmin = std::sqrt(std::min(p.d2f(-1.0), p.d2f(1.0)));
    if (std::max(g.h_R(), g.h_H()) * kmax > 1.0) throw domain_error("half-plane grid too coarse for the profile width");
    if (g.h_R() / g.h_H() > 4.0 || g.h_H() / g.h_R() > 4.0)
        throw domain_error("half-plane grid aspect ratio exceeds 4, mixed stencil loses control");
    if (opt.beta < 0.0 || opt.gamma < 0.0 || opt.beta + opt.gamma > kmin + 1e-12)
        throw domain_error("weights need beta, gamma >= 0 and beta + gamma <= sqrt(min f''(+-1))");

    HalfPlaneField fld;
    fld.grid = g;
    fld.potential = p;
    fld.sigma = s;
    fld.alpha = alpha;
    fld.cos_alpha = s.cos_alpha();
    fld.A = {{{1.0, -fld.cos_alpha}, {-fld.cos_alpha, 1.0}}};
    if (!(1.0 - std::abs(fld.cos_alpha) > 0.0)) throw numerical_error("A_alpha is not positive definite");
    fld.beta = opt.beta;
    fld.gamma = opt.gamma;

    const auto prof = solve_optimal_profile(p, std::max(10.0, g.L_R), 4000);
    fld.theta_h = detail::discrete_profile(prof, g);
    fld.theta_slope.resize(g.n_R);
    for (int i = 0; i < g.n_R; ++i) fld.theta_slope[i] = prof.derivative(g.R(i));
    fld.v.resize(g.size());
    for (int j = 0; j < g.n_H; ++j)
        for (int i = 0; i < g.n_R; ++i) fld.v[g.index(i, j)] = fld.theta_h[i];

    const detail::HalfPlaneStencil st(g, fld.cos_alpha);
    auto norm = [](const std::vector<double>& F) { return detail::max_abs(F); };
    auto F = halfplane_residual(g, p, s, fld.v);
    double res = norm(F);
    fld.residuals.push_back(res);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;
    int growth = 0;
    if (res > 0.1 * opt.newton_tol) {
        for (int k = 0;; ++k) {
            if (k == opt.max_newton) throw convergence_error("half-plane Newton: iteration limit reached", res);
            const auto J = detail::halfplane_jacobian(g, p, s, fld.v, k == 0 && fld.cos_alpha != 0.0);
            if (!analyzed) {
                lu.analyzePattern(J);
                analyzed = true;
            }
            lu.factorize(J);
            if (lu.info() != Eigen::Success) throw numerical_error("half-plane Newton: singular Jacobian");
            Eigen::VectorXd b(st.unknowns());
            for (int j = 0; j <= g.n_H - 2; ++j)
                for (int i = 1; i <= g.n_R - 2; ++i) b[st.column(i, j)] = F[g.index(i, j)];
            const Eigen::VectorXd d = lu.solve(b);
            if (!d.allFinite()) throw convergence_error("half-plane Newton: non-finite update", res);

            double t = 1.0;
            std::vector<double> trial(fld.v);
            std::vector<double> Ft;
            for (int halvings = 0;; ++halvings) {
                for (int j = 0; j <= g.n_H - 2; ++j)
                    for (int i = 1; i <= g.n_R - 2; ++i)
                        trial[g.index(i, j)] = fld.v[g.index(i, j)] - t * d[st.column(i, j)];
                Ft = halfplane_residual(g, p, s, trial);
                if (norm(Ft) < res || halvings == 6) break;
                t *= 0.5;
            }
            const double update = t * d.lpNorm<Eigen::Infinity>();
            fld.v.swap(trial);
            F.swap(Ft);
            res = norm(F);
            growth = !fld.updates.empty() && update > fld.updates.back() ? growth + 1 : 0;
            fld.updates.push_back(update);
            fld.residuals.push_back(res);
            fld.newton_steps = k + 1;
            if (update <= opt.newton_tol) break;
            if (growth >= 5) throw convergence_error("half-plane Newton: updates grew over 5 steps", res);
        }
    }

    const auto norms = detail::residual_norms(g, F, opt.beta, opt.gamma);
    fld.interior_residual = norms[0];
    fld.boundary_residual = norms[1];
    fld.weighted_residual = norms[2];
    for (int j = 0; j < g.n_H; ++j)
        for (int i = 0; i < g.n_R; ++i)
            fld.weighted_deviation =
                std::max(fld.weighted_deviation, std::abs(fld(i, j) - fld.theta_h[i]) * detail::weight(g, i, j, opt.beta, opt.gamma));
    return fld;
}

/// max_i |v(R_i, H_j) - theta_h(R_i)| for every row j.
inline std::vector<double> profile_deviation(const HalfPlaneField& fld) {
    const auto& g = fld.grid;
    std::vector<double> dev(g.n_H, 0.0);
    for (int j = 0; j < g.n_H; ++j)
        for (int i = 0; i < g.n_R; ++i) dev[j] = std::max(dev[j], std::abs(fld(i, j) - fld.theta_h[i]));
    return dev;
}

/// Flux balance along the slice H = H0:
/// int d_R v (d_H v - cos(alpha) d_R v) dR - [sigma_alpha(1) - sigma_alpha(-1)].
/// Multiplying the equation by d_R v and integrating over [0, H0] shows it
/// vanishes up to the truncation side fluxes.
inline double check_flux_identity(const HalfPlaneField& fld, double H0) {
    const auto& g = fld.grid;
    const double pos = H0 / g.h_H();
    const long j = std::lround(pos);
    if (!(H0 >= -1e-12) || j < 0 || j >= g.n_H || std::abs(pos - static_cast<double>(j)) > 1e-9)
        throw domain_error("flux identity: H0 = " + std::to_string(H0) + " is not a grid row");
    std::vector<double> vR, vH;
    detail::field_gradient(fld, vR, vH);
    std::vector<double> integrand(g.n_R);
    for (int i = 0; i < g.n_R; ++i) {
        const auto k = g.index(i, static_cast<int>(j));
        integrand[i] = vR[k] * (vH[k] - fld.cos_alpha * vR[k]);
    }
    return detail::trapezoid(integrand, g.h_R()) - (fld.sigma.sigma(1.0) - fld.sigma.sigma(-1.0));
}

/// int theta_0'(R) d_R v(R, 0) dR.
inline double boundary_overlap(const HalfPlaneField& fld) {
    const auto& g = fld.grid;
    std::vector<double> row(fld.v.begin(), fld.v.begin() + g.n_R), d(g.n_R);
    detail::diff_R(row, g.h_R(), d);
    for (int i = 0; i < g.n_R; ++i) d[i] *= fld.theta_slope[i];
    return detail::trapezoid(d, g.h_R());
}

struct ExpansionCoefficients {
    std::vector<double> Z;
    std::vector<double> I_slice;  ///< int (d_rho v)^2 dR on each row
    double I_mix{0.0};            ///< int int d_rho d_Z v d_rho v
    double b1_plus{0.0};
    double b1_minus{0.0};
    double theta_norm2{0.0};  ///< ||theta_0'||^2 on the R grid
    double slice_min{0.0};
    double slice_max{0.0};
};

inline ExpansionCoefficients expansion_coefficients(const HalfPlaneField& fld) {
    const auto& g = fld.grid;
    std::vector<double> vR, vH;
    detail::field_gradient(fld, vR, vH);
    ExpansionCoefficients out;
    out.Z.resize(g.n_H);
    out.I_slice.resize(g.n_H);
    std::vector<double> sq(g.n_R), mixed(g.size());
    for (int j = 0; j < g.n_H; ++j) {
        out.Z[j] = g.H(j);
        const std::size_t o = g.index(0, j);
        for (int i = 0; i < g.n_R; ++i) sq[i] = vR[o + i] * vR[o + i];
        out.I_slice[j] = detail::trapezoid(sq, g.h_R());
        // d_R of d_H v, times d_R v
        detail::diff_R(std::span<const double>(vH).subspan(o, g.n_R), g.h_R(),
                       std::span<double>(mixed).subspan(o, g.n_R));
        for (int i = 0; i < g.n_R; ++i) mixed[o + i] *= vR[o + i];
    }
    out.I_mix = detail::trapezoid_2d(g, mixed);
    const double sa = std::sin(fld.alpha);
    out.b1_plus = sa * (2.0 * out.I_mix + out.I_slice[0]);
    out.b1_minus = -out.b1_plus;
    for (int i = 0; i < g.n_R; ++i) sq[i] = fld.theta_slope[i] * fld.theta_slope[i];
    out.theta_norm2 = detail::trapezoid(sq, g.h_R());
    out.slice_min = *std::min_element(out.I_slice.begin(), out.I_slice.end());
    out.slice_max = *std::max_element(out.I_slice.begin(), out.I_slice.end());
    return out;
}

/// Linearized operator at the field applied to u (all nodes, Dirichlet
/// values as given) with boundary data g: interior rows give
/// -div(A grad u) + f''(v) u, the H = 0 row uses the ghost
/// u_H = cos(alpha) u_R + sigma''(v) u - g. Dirichlet nodes hold 0.
inline std::vector<double> apply_linearized(const HalfPlaneField& fld, std::span<const double> u,
                                            std::span<const double> gdata = {}) {
    const auto& g = fld.grid;
    if (u.size() != g.size()) throw domain_error("apply_linearized: value count does not match grid");
    if (!gdata.empty() && gdata.size() != static_cast<std::size_t>(g.n_R))
        throw domain_error("apply_linearized: boundary data count does not match grid");
    const detail::HalfPlaneStencil st(g, fld.cos_alpha);
    auto ghost = [&](int a) {
        double val = u[st.at(a, 1)];
        if (!st.side(a)) {
            const double gd = gdata.empty() ? 0.0 : gdata[a];
            val -= 2.0 * st.hH *
                   (st.c * (u[st.at(a + 1, 0)] - u[st.at(a - 1, 0)]) / (2.0 * st.hR) +
                    fld.sigma.d2sigma(fld(a, 0)) * u[st.at(a, 0)] - gd);
        }
        return val;
    };
    std::vector<double> out(g.size(), 0.0);
    parallel_for(0, static_cast<std::size_t>(g.n_H - 1), [&](std::size_t lo, std::size_t hi) {
        for (int j = static_cast<int>(lo); j < static_cast<int>(hi); ++j)
            for (int i = 1; i <= g.n_R - 2; ++i) {
                double acc = fld.potential.d2f(fld(i, j)) * u[st.at(i, j)];
                st.stencil(i, j, [&](int a, int b, double coef) { acc += coef * (b < 0 ? ghost(a) : u[st.at(a, b)]); });
                out[st.at(i, j)] = acc;
            }
    });
    return out;
}

/// Principal part -div_h(A grad_h psi) at the unknown nodes (for coercivity probes).
inline std::vector<double> principal_part(const HalfPlaneGrid& g, double cos_alpha, std::span<const double> psi) {
    const detail::HalfPlaneStencil st(g, cos_alpha);
    std::vector<double> out(g.size(), 0.0);
    for (int j = 0; j <= g.n_H - 2; ++j)
        for (int i = 1; i <= g.n_R - 2; ++i) {
            double acc = 0.0;
            st.stencil(i, j, [&](int a, int b, double coef) { acc += coef * psi[st.at(a, b < 0 ? 1 : b)]; });
            out[st.at(i, j)] = acc;
        }
    return out;
}

struct HalfPlaneRejection {
    double integral{0.0};
    double tolerance{0.0};
};

struct LinearizedHalfPlane {
    std::vector<double> u;
    double compatibility{0.0};
    double interior_residual{0.0};
    double boundary_residual{0.0};
    double weighted_residual{0.0};
    double condition_estimate{0.0};
    std::string warning;
};

using HalfPlaneLinearResult = std::variant<LinearizedHalfPlane, HalfPlaneRejection>;

/// int int G d_R v + int g d_R v|_{H=0}.
inline double linearized_compatibility(const HalfPlaneField& fld, std::span<const double> G,
                                       std::span<const double> gdata) {
    const auto& g = fld.grid;
    std::vector<double> vR, vH;
    detail::field_gradient(fld, vR, vH);
    std::vector<double> prod(g.size()), edge(g.n_R);
    for (std::size_t k = 0; k < g.size(); ++k) prod[k] = G[k] * vR[k];
    for (int i = 0; i < g.n_R; ++i) edge[i] = gdata[i] * vR[g.index(i, 0)];
    return detail::trapezoid_2d(g, prod) + detail::trapezoid(edge, g.h_R());
}

/// Solves the linearized problem about the field with homogeneous Dirichlet
/// truncation. tol is relative: the compatibility integral is compared with
/// tol * (||G|| ||d_R v|| + ||g|| ||d_R v|_{H=0}||).
inline HalfPlaneLinearResult solve_linearized_halfplane(const HalfPlaneField& fld, std::span<const double> G,
                                                        std::span<const double> gdata, double tol = 1e-6) {
    const auto& g = fld.grid;
    if (G.size() != g.size() || gdata.size() != static_cast<std::size_t>(g.n_R))
        throw domain_error("solve_linearized_halfplane: data size does not match grid");
    const double Gmax = detail::max_abs(G), gmax = detail::max_abs(gdata);
    double Gedge = std::max(std::abs(gdata.front()), std::abs(gdata.back())) / std::max(gmax, 1e-300);
    for (int j = 0; j < g.n_H; ++j)
        Gedge = std::max({Gedge, std::abs(G[g.index(0, j)]) / std::max(Gmax, 1e-300),
                          std::abs(G[g.index(g.n_R - 1, j)]) / std::max(Gmax, 1e-300)});
    for (int i = 0; i < g.n_R; ++i) Gedge = std::max(Gedge, std::abs(G[g.index(i, g.n_H - 1)]) / std::max(Gmax, 1e-300));
    if (Gedge > 1e-6) throw domain_error("solve_linearized_halfplane: data does not decay at the truncation edges");

    std::vector<double> vR, vH;
    detail::field_gradient(fld, vR, vH);
    std::vector<double> sq(g.size()), edge(g.n_R);
    for (std::size_t k = 0; k < g.size(); ++k) sq[k] = G[k] * G[k];
    const double nG = std::sqrt(detail::trapezoid_2d(g, sq));
    for (std::size_t k = 0; k < g.size(); ++k) sq[k] = vR[k] * vR[k];
    const double nV = std::sqrt(detail::trapezoid_2d(g, sq));
    for (int i = 0; i < g.n_R; ++i) edge[i] = gdata[i] * gdata[i];
    const double ng = std::sqrt(detail::trapezoid(edge, g.h_R()));
    for (int i = 0; i < g.n_R; ++i) edge[i] = vR[g.index(i, 0)] * vR[g.index(i, 0)];
    const double nV0 = std::sqrt(detail::trapezoid(edge, g.h_R()));

    const double integral = linearized_compatibility(fld, G, gdata);
    const double bound = tol * (nG * nV + ng * nV0);
    if (std::abs(integral) > bound) return HalfPlaneRejection{integral, bound};

    LinearizedHalfPlane out;
    out.compatibility = integral;
    const detail::HalfPlaneStencil st(g, fld.cos_alpha);
    const auto J = detail::halfplane_jacobian(g, fld.potential, fld.sigma, fld.v, false);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw numerical_error("linearized half-plane: singular system");

    const std::vector<double> zero(g.size(), 0.0);
    const auto shift = apply_linearized(fld, zero, gdata);  // g enters through the ghost row
    Eigen::VectorXd b(st.unknowns());
    for (int j = 0; j <= g.n_H - 2; ++j)
        for (int i = 1; i <= g.n_R - 2; ++i) b[st.column(i, j)] = G[g.index(i, j)] - shift[g.index(i, j)];
    const Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite()) throw numerical_error("linearized half-plane: solve failed");
    out.u.assign(g.size(), 0.0);
    for (int j = 0; j <= g.n_H - 2; ++j)
        for (int i = 1; i <= g.n_R - 2; ++i) out.u[g.index(i, j)] = x[st.column(i, j)];

    auto r = apply_linearized(fld, out.u, gdata);
    for (int j = 0; j <= g.n_H - 2; ++j)
        for (int i = 1; i <= g.n_R - 2; ++i) r[g.index(i, j)] -= G[g.index(i, j)];
    const auto norms = detail::residual_norms(g, r, fld.beta, fld.gamma);
    out.interior_residual = norms[0];
    out.boundary_residual = norms[1];
    out.weighted_residual = norms[2];

    // ||J||_inf times an inverse-iteration estimate of ||J^-1||_inf
    double jnorm = 0.0;
    {
        Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(J.rows());
        for (Eigen::Index k = 0; k < J.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(J, k); it; ++it) rowsum[it.row()] += std::abs(it.value());
        jnorm = rowsum.maxCoeff();
    }
    Eigen::VectorXd z = Eigen::VectorXd::Ones(J.rows());
    double inv = 0.0;
    for (int it = 0; it < 8; ++it) {
        const Eigen::VectorXd y = lu.solve(z);
        inv = std::max(inv, y.lpNorm<Eigen::Infinity>() / z.lpNorm<Eigen::Infinity>());
        z = y / y.lpNorm<Eigen::Infinity>();
    }
    out.condition_estimate = jnorm * inv;
    if (out.condition_estimate > 1e12)
        out.warning = "ill-conditioned: condition estimate " + std::to_string(out.condition_estimate);
    return out;
}

}  // namespace acrobin
