#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "acrobin/errors.hpp"
#include "acrobin/geometry.hpp"
#include "acrobin/parallel.hpp"
#include "acrobin/potential.hpp"

namespace acrobin {

/// Polar grid on the unit disk: rings r_i = i h (i = 1..n_r, r_{n_r} = 1),
/// n_phi uniform periodic angles, plus the centre node.
/// Finite-volume cells: annuli [r_i - h/2, r_i + h/2] (the outer one is a
/// half cell ending at r = 1) and a centre disk of radius h/2; areas sum to pi.
struct PolarGrid {
    int n_r{256};
    int n_phi{1024};

    double h() const { return 1.0 / n_r; }
    double dphi() const { return 2.0 * std::numbers::pi / n_phi; }
    double r(int i) const { return i == n_r ? 1.0 : i * h(); }
    double phi(int j) const { return j * dphi(); }
    std::size_t size() const { return 1 + static_cast<std::size_t>(n_r) * n_phi; }
    std::size_t index(int i, int j) const { return 1 + static_cast<std::size_t>(i - 1) * n_phi + j; }
    Vec2 node(int i, int j) const { return {r(i) * std::cos(phi(j)), r(i) * std::sin(phi(j))}; }
    double max_spacing() const { return std::max(h(), dphi()); }

    double center_area() const { return std::numbers::pi * 0.25 * h() * h(); }
    double area(int i) const {
        if (i < n_r) return r(i) * h() * dphi();
        const double a = 1.0 - 0.5 * h();
        return 0.5 * (1.0 - a * a) * dphi();
    }
    /// Flux weight between ring i and i+1 (i = 0: centre to ring 1, per angle).
    double radial_weight(int i) const { return i == 0 ? 0.5 * dphi() : (r(i) + 0.5 * h()) * dphi() / h(); }
    /// Flux weight between angular neighbours on ring i.
    double angular_weight(int i) const { return (i == n_r ? 0.5 * h() : h()) / (r(i) * dphi()); }
    double boundary_length() const { return dphi(); }

    /// Grid with h <= 1/(radial_per_eps/eps) and the outer angular spacing
    /// at most eps/angular_per_eps (n_phi a power of two).
    static PolarGrid for_eps(double eps, double radial_per_eps = 10.24, double angular_per_eps = 4.0) {
        if (!(eps > 0.0)) throw domain_error("for_eps: eps must be positive");
        PolarGrid g;
        g.n_r = std::max(8, static_cast<int>(std::ceil(radial_per_eps / eps - 1e-9)));
        g.n_phi = 16;
        while (2.0 * std::numbers::pi / g.n_phi > eps / angular_per_eps) g.n_phi *= 2;
        return g;
    }
};

using Source = std::function<double(double x, double y, double t)>;

/// Phase field on the polar grid; index 0 is the centre node.
struct Field2D {
    PolarGrid grid;
    std::vector<double> u;
    double eps{0.04};
    double t{0.0};
    std::shared_ptr<const Potential> potential;
    std::shared_ptr<const BoundaryEnergy> sigma;

    double center() const { return u[0]; }
    double operator()(int i, int j) const { return u[grid.index(i, j)]; }
    double& operator()(int i, int j) { return u[grid.index(i, j)]; }
    double max_abs() const {
        double m = 0.0;
        for (double v : u) m = std::max(m, std::abs(v));
        return m;
    }
    Vec2 position(std::size_t k) const {
        if (k == 0) return {0.0, 0.0};
        const auto q = static_cast<int>(k - 1);
        return grid.node(q / grid.n_phi + 1, q % grid.n_phi);
    }
};

/// Field sampled from init(x, y). Rejects eps < 4 h (interface unresolved).
inline Field2D make_field(const PolarGrid& g, double eps, std::shared_ptr<const Potential> p,
                          std::shared_ptr<const BoundaryEnergy> s, const std::function<double(double, double)>& init) {
    if (g.n_r < 4 || g.n_phi < 8) throw domain_error("polar grid needs n_r >= 4 and n_phi >= 8");
    if (!(eps > 0.0)) throw domain_error("eps must be positive");
    if (eps < 4.0 * g.max_spacing())
        throw domain_error("grid does not resolve eps: need eps >= 4h (eps = " + std::to_string(eps) +
                           ", h = " + std::to_string(g.max_spacing()) + ")");
    if (!p || !s) throw domain_error("field needs a potential and a boundary energy");
    Field2D f;
    f.grid = g;
    f.eps = eps;
    f.potential = std::move(p);
    f.sigma = std::move(s);
    f.u.resize(g.size());
    parallel_for(0, f.u.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            const Vec2 x = f.position(k);
            f.u[k] = init(x.x, x.y);
        }
    }, 1024);
    return f;
}

namespace detail {

/// (K u) with K the finite-volume Laplacian (positive semidefinite, ~ -A Laplacian).
inline void apply_stiffness(const PolarGrid& g, const std::vector<double>& u, std::vector<double>& out) {
    out.assign(u.size(), 0.0);
    const int nr = g.n_r, np = g.n_phi;
    const double wc = g.radial_weight(0);
    double c = 0.0;
    for (int j = 0; j < np; ++j) c += wc * (u[0] - u[g.index(1, j)]);
    out[0] = c;
    parallel_for(1, static_cast<std::size_t>(nr) + 1, [&](std::size_t lo, std::size_t hi) {
        for (int i = static_cast<int>(lo); i < static_cast<int>(hi); ++i) {
            const double wi = g.radial_weight(i - 1), wo = i < nr ? g.radial_weight(i) : 0.0;
            const double wa = g.angular_weight(i);
            for (int j = 0; j < np; ++j) {
                const double v = u[g.index(i, j)];
                const double in = i == 1 ? u[0] : u[g.index(i - 1, j)];
                double acc = wi * (v - in) + wa * (2.0 * v - u[g.index(i, (j + 1) % np)] - u[g.index(i, (j + np - 1) % np)]);
                if (i < nr) acc += wo * (v - u[g.index(i + 1, j)]);
                out[g.index(i, j)] = acc;
            }
        }
    }, 4);
}

inline double sample_max(const std::function<double(double)>& fn, double lo, double hi, int n = 4001) {
    double m = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) m = std::max(m, fn(lo + (hi - lo) * k / (n - 1)));
    return m;
}

}  // namespace detail

/// Discrete Ginzburg-Landau energy: edge-difference Dirichlet energy, cell
/// quadrature of f(u)/eps^2, and boundary sum of sigma(u)/eps over the outer ring.
inline double energy(const Field2D& f) {
    const auto& g = f.grid;
    const auto& u = f.u;
    const int nr = g.n_r, np = g.n_phi;
    const double e2 = f.eps * f.eps;
    const auto& pot = *f.potential;
    const auto& sig = *f.sigma;
    std::vector<double> ring(static_cast<std::size_t>(nr) + 1, 0.0);
    {
        double acc = g.center_area() * pot.f(u[0]) / e2;
        const double wc = g.radial_weight(0);
        for (int j = 0; j < np; ++j) {
            const double d = u[g.index(1, j)] - u[0];
            acc += 0.5 * wc * d * d;
        }
        ring[0] = acc;
    }
    parallel_for(1, static_cast<std::size_t>(nr) + 1, [&](std::size_t lo, std::size_t hi) {
        for (int i = static_cast<int>(lo); i < static_cast<int>(hi); ++i) {
            const double wo = i < nr ? g.radial_weight(i) : 0.0, wa = g.angular_weight(i), A = g.area(i);
            double acc = 0.0;
            for (int j = 0; j < np; ++j) {
                const double v = u[g.index(i, j)];
                const double da = u[g.index(i, (j + 1) % np)] - v;
                acc += 0.5 * wa * da * da + A * pot.f(v) / e2;
                if (i < nr) {
                    const double dr = u[g.index(i + 1, j)] - v;
                    acc += 0.5 * wo * dr * dr;
                } else {
                    acc += g.boundary_length() * sig.sigma(v) / f.eps;
                }
            }
            ring[i] = acc;
        }
    }, 4);
    double E = 0.0;
    for (double v : ring) E += v;
    return E;
}

struct ACOptions {
    bool neumann{false};  ///< dedicated homogeneous-Neumann path (no boundary terms at all)
    Source bulk;          ///< forcing F: u_t - Lap u + f'(u)/eps^2 = F
    Source boundary;      ///< forcing G: d_N u + sigma'(u)/eps = G
    double bound{0.0};    ///< R for the stabilization constants; 0: max(R0, |u|_inf) at setup
};

/// IMEX stepper for fixed (grid, eps, dt): Laplacian implicit, f'(u)/eps^2 and
/// sigma'(u)/eps explicit (lagged), with linear stabilization S, S_b that is
/// zero unless dt exceeds the explicit bound. The implicit operator is
/// diagonal in the angular Fourier modes, tridiagonal in r.
class ACStepper {
public:
    ACStepper(const Field2D& like, double dt, ACOptions opt = {}) : g_(like.grid), eps_(like.eps), dt_(dt), opt_(std::move(opt)) {
        if (!(dt > 0.0)) throw domain_error("step_ac: dt must be positive");
        if (dt > dt_max(eps_))
            throw domain_error("step_ac: dt = " + std::to_string(dt) + " exceeds dt_max = " + std::to_string(dt_max(eps_)));
        pot_ = like.potential;
        sig_ = like.sigma;
        const double R = opt_.bound > 0.0 ? opt_.bound : std::max(pot_->sign_radius, like.max_abs());
        const double e2 = eps_ * eps_;
        const double L = std::max(0.0, detail::sample_max(pot_->d2f, -R, R));
        const double Lb = opt_.neumann ? 0.0 : std::max(0.0, detail::sample_max([&](double v) { return sig_->d2sigma(v); }, -R, R));
        // monotone explicit part: 1/dt + (S - L)/eps^2 >= 0 on every cell ...
        S_ = std::max(0.0, L - e2 / dt);
        // ... and jointly with the boundary term on the outer cells
        const double A = g_.area(g_.n_r), b = g_.boundary_length();
        const double margin = A * (1.0 / dt + (S_ - L) / e2);
        S_b_ = std::max(0.0, Lb - margin * eps_ / b);
        factor();
    }

    static double dt_max(double eps) { return eps * eps; }
    double stabilization() const { return S_; }
    double boundary_stabilization() const { return S_b_; }
    double dt() const { return dt_; }

    Field2D step(const Field2D& in) const {
        const auto& g = g_;
        const int nr = g.n_r, np = g.n_phi, nk = np / 2 + 1;
        const double e2 = eps_ * eps_;
        const double t1 = in.t + dt_;
        std::vector<double> rhs;
        detail::apply_stiffness(g, in.u, rhs);
        const auto& pot = *pot_;
        const auto& sig = *sig_;
        // explicit part, negated stiffness
        rhs[0] = -rhs[0] - g.center_area() * pot.df(in.u[0]) / e2;
        if (opt_.bulk) rhs[0] += g.center_area() * opt_.bulk(0.0, 0.0, t1);
        parallel_for(1, static_cast<std::size_t>(nr) + 1, [&](std::size_t lo, std::size_t hi) {
            for (int i = static_cast<int>(lo); i < static_cast<int>(hi); ++i) {
                const double A = g.area(i), b = g.boundary_length();
                for (int j = 0; j < np; ++j) {
                    const std::size_t k = g.index(i, j);
                    const double v = in.u[k];
                    double acc = -rhs[k] - A * pot.df(v) / e2;
                    if (opt_.bulk || (i == nr && opt_.boundary)) {
                        const Vec2 x = g.node(i, j);
                        if (opt_.bulk) acc += A * opt_.bulk(x.x, x.y, t1);
                        if (i == nr && opt_.boundary) acc += b * opt_.boundary(x.x, x.y, t1);
                    }
                    if (i == nr && !opt_.neumann) acc -= b * sig.dsigma(v) / eps_;
                    rhs[k] = acc;
                }
            }
        }, 4);

        // forward transform ring by ring
        std::vector<std::complex<double>> hat(static_cast<std::size_t>(nr) * nk);
        parallel_for(1, static_cast<std::size_t>(nr) + 1, [&](std::size_t lo, std::size_t hi) {
            Eigen::FFT<double> fft;
            fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
            std::vector<double> row(np);
            std::vector<std::complex<double>> out;
            for (std::size_t i = lo; i < hi; ++i) {
                std::copy_n(rhs.begin() + static_cast<std::ptrdiff_t>(g.index(static_cast<int>(i), 0)), np, row.begin());
                fft.fwd(out, row);
                std::copy_n(out.begin(), nk, hat.begin() + static_cast<std::ptrdiff_t>((i - 1) * nk));
            }
        }, 4);

        // tridiagonal solve per mode
        double center = 0.0;
        parallel_for(0, static_cast<std::size_t>(nk), [&](std::size_t lo, std::size_t hi) {
            std::vector<std::complex<double>> d(nr);
            for (std::size_t k = lo; k < hi; ++k) {
                const auto& m = modes_[k];
                if (k == 0) {
                    // unknowns (delta_c, hat_1, ..., hat_nr); centre row first
                    std::complex<double> dc = rhs[0] * m.inv0;
                    for (int i = 0; i < nr; ++i) {
                        const double lower = i == 0 ? m.lower0 : -g.radial_weight(i);
                        const std::complex<double> prev = i == 0 ? dc : d[i - 1];
                        d[i] = (hat[static_cast<std::size_t>(i) * nk] - lower * prev) * m.inv[i];
                    }
                    for (int i = nr - 2; i >= 0; --i) d[i] -= m.cp[i] * d[i + 1];
                    center = (dc - m.cp0 * d[0]).real();
                } else {
                    for (int i = 0; i < nr; ++i) {
                        const std::complex<double> prev = i == 0 ? 0.0 : d[i - 1];
                        d[i] = (hat[static_cast<std::size_t>(i) * nk + k] + g.radial_weight(i) * prev) * m.inv[i];
                    }
                    for (int i = nr - 2; i >= 0; --i) d[i] -= m.cp[i] * d[i + 1];
                }
                for (int i = 0; i < nr; ++i) hat[static_cast<std::size_t>(i) * nk + k] = d[i];
            }
        }, 8);

        Field2D out = in;
        out.t = t1;
        out.u[0] = in.u[0] + center;
        parallel_for(1, static_cast<std::size_t>(nr) + 1, [&](std::size_t lo, std::size_t hi) {
            Eigen::FFT<double> fft;
            fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
            std::vector<std::complex<double>> spec(np);
            std::vector<double> row;
            for (std::size_t i = lo; i < hi; ++i) {
                std::copy_n(hat.begin() + static_cast<std::ptrdiff_t>((i - 1) * nk), nk, spec.begin());
                fft.inv(row, spec, np);
                const std::size_t base = g.index(static_cast<int>(i), 0);
                for (int j = 0; j < np; ++j) out.u[base + j] = in.u[base + j] + row[j];
            }
        }, 4);
        for (double v : out.u)
            if (!std::isfinite(v)) throw numerical_error("step_ac produced a non-finite value at t = " + std::to_string(t1));
        return out;
    }

private:
    struct Mode {
        std::vector<double> cp;   ///< Thomas upper factors, rings 1..nr
        std::vector<double> inv;  ///< reciprocal pivots
        double inv0{0}, cp0{0}, lower0{0};  ///< centre row (mode 0 only)
    };

    void factor() {
        const auto& g = g_;
        const int nr = g.n_r, np = g.n_phi, nk = np / 2 + 1;
        const double e2 = eps_ * eps_;
        std::vector<double> D(nr), W(nr);
        for (int i = 1; i <= nr; ++i) {
            D[i - 1] = g.area(i) * (1.0 / dt_ + S_ / e2) + (i == nr ? g.boundary_length() * S_b_ / eps_ : 0.0);
            W[i - 1] = g.radial_weight(i - 1) + (i < nr ? g.radial_weight(i) : 0.0);
        }
        modes_.resize(nk);
        for (int k = 0; k < nk; ++k) {
            auto& m = modes_[k];
            m.cp.assign(nr, 0.0);
            m.inv.assign(nr, 0.0);
            const double sym = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / np);
            double cprev = 0.0, lower_prev = 0.0;
            if (k == 0) {
                const double wc = g.radial_weight(0);
                const double dc = g.center_area() * (1.0 / dt_ + S_ / e2) + np * wc;
                m.inv0 = 1.0 / dc;
                m.cp0 = -wc / dc;       // upper entry of the centre row / pivot
                m.lower0 = -np * wc;    // ring-1 coupling to the centre in mode 0
                cprev = m.cp0;
                lower_prev = m.lower0;
            }
            for (int i = 0; i < nr; ++i) {
                const int ring = i + 1;
                const double diag = D[i] + W[i] + g.angular_weight(ring) * sym;
                const double lower = i == 0 ? lower_prev : -g.radial_weight(ring - 1);
                const double upper = ring < nr ? -g.radial_weight(ring) : 0.0;
                const double piv = diag - lower * cprev;
                m.inv[i] = 1.0 / piv;
                m.cp[i] = upper / piv;
                cprev = m.cp[i];
            }
        }
    }

    PolarGrid g_;
    double eps_, dt_;
    ACOptions opt_;
    std::shared_ptr<const Potential> pot_;
    std::shared_ptr<const BoundaryEnergy> sig_;
    double S_{0.0}, S_b_{0.0};
    std::vector<Mode> modes_;
};

inline Field2D step_ac(const Field2D& u, double dt, const ACOptions& opt = {}) { return ACStepper(u, dt, opt).step(u); }

struct ACTrajectory {
    std::vector<Field2D> snapshots;
    std::vector<double> times;     ///< every step, entry 0 initial
    std::vector<double> energy;    ///< every step
    std::vector<double> sup_norm;  ///< every step
    double stabilization{0.0};
    double boundary_stabilization{0.0};
};

/// Repeated step_ac; dt adjusted down so that T is hit exactly. Snapshots at
/// every stride-th step and at T.
inline ACTrajectory run_ac(const Field2D& u0, double T, double dt, int stride = 1, ACOptions opt = {}) {
    if (!(T >= 0.0) || !(dt > 0.0) || stride < 1) throw domain_error("run_ac: need T >= 0, dt > 0, stride >= 1");
    ACTrajectory tr;
    tr.snapshots.push_back(u0);
    tr.times.push_back(u0.t);
    tr.energy.push_back(energy(u0));
    tr.sup_norm.push_back(u0.max_abs());
    if (T == 0.0) return tr;
    const long steps = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
    const double h = T / static_cast<double>(steps);
    if (opt.bound <= 0.0) opt.bound = std::max(u0.potential->sign_radius, u0.max_abs());
    const ACStepper stepper(u0, h, opt);
    tr.stabilization = stepper.stabilization();
    tr.boundary_stabilization = stepper.boundary_stabilization();
    Field2D cur = u0;
    for (long k = 1; k <= steps; ++k) {
        try {
            cur = stepper.step(cur);
        } catch (const numerical_error& e) {
            throw numerical_error(std::string(e.what()) + " [ac step " + std::to_string(k) + "]");
        }
        cur.t = u0.t + h * static_cast<double>(k);
        tr.times.push_back(cur.t);
        tr.energy.push_back(energy(cur));
        tr.sup_norm.push_back(cur.max_abs());
        if (k % stride == 0 || k == steps) tr.snapshots.push_back(cur);
    }
    return tr;
}

}  // namespace acrobin
