#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/CholmodSupport>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "acrobin/acsolver.hpp"
#include "acrobin/errors.hpp"
#include "acrobin/geometry.hpp"

namespace acrobin {

/// B(psi, psi) = int |grad psi|^2 + f''(uA)/eps^2 psi^2 + int_bdry sigma''(uA)/eps psi^2
/// on the polar grid, with the lumped (diagonal) mass of the cell areas.
struct LinearizedForm {
    PolarGrid grid;
    double eps{0.0};
    Eigen::SparseMatrix<double> B;  ///< full symmetric storage
    Eigen::VectorXd mass;           ///< cell areas
    Eigen::VectorXd reaction;       ///< A f''(uA) / eps^2 per node
    Eigen::VectorXd boundary;       ///< b sigma''(uA) / eps per node (0 off the outer ring)

    double quadratic(const Eigen::VectorXd& psi) const { return psi.dot(B * psi); }
    double norm2(const Eigen::VectorXd& psi) const { return psi.dot(mass.cwiseProduct(psi)); }
    double rayleigh(const Eigen::VectorXd& psi) const { return quadratic(psi) / norm2(psi); }
};

inline LinearizedForm assemble_form(const Field2D& uA) {
    const auto& g = uA.grid;
    const int nr = g.n_r, np = g.n_phi;
    const auto n = static_cast<Eigen::Index>(g.size());
    for (double v : uA.u)
        if (!std::isfinite(v)) throw domain_error("assemble_form: uA has non-finite values");
    LinearizedForm F;
    F.grid = g;
    F.eps = uA.eps;
    F.mass.resize(n);
    F.reaction.resize(n);
    F.boundary = Eigen::VectorXd::Zero(n);
    const double e2 = uA.eps * uA.eps;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 5 + np);
    auto edge = [&](std::size_t a, std::size_t b, double w) {
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        trip.emplace_back(ia, ia, w);
        trip.emplace_back(ib, ib, w);
        trip.emplace_back(ia, ib, -w);
        trip.emplace_back(ib, ia, -w);
    };
    F.mass[0] = g.center_area();
    for (int j = 0; j < np; ++j) edge(0, g.index(1, j), g.radial_weight(0));
    for (int i = 1; i <= nr; ++i)
        for (int j = 0; j < np; ++j) {
            const std::size_t k = g.index(i, j);
            F.mass[static_cast<Eigen::Index>(k)] = g.area(i);
            edge(k, g.index(i, (j + 1) % np), g.angular_weight(i));
            if (i < nr) edge(k, g.index(i + 1, j), g.radial_weight(i));
            else F.boundary[static_cast<Eigen::Index>(k)] = g.boundary_length() * uA.sigma->d2sigma(uA.u[k]) / uA.eps;
        }
    for (Eigen::Index k = 0; k < n; ++k) {
        F.reaction[k] = F.mass[k] * uA.potential->d2f(uA.u[static_cast<std::size_t>(k)]) / e2;
        trip.emplace_back(k, k, F.reaction[k] + F.boundary[k]);
    }
    F.B.resize(n, n);
    F.B.setFromTriplets(trip.begin(), trip.end());
    F.B.makeCompressed();
    return F;
}

struct EigenEstimate {
    double lambda{0.0};
    Eigen::VectorXd vector;      ///< M-normalized eigenvector estimate
    double residual{0.0};        ///< relative Lanczos residual of the shifted inverse
    double error_bound{0.0};     ///< |lambda - lambda_true| bound implied by the residual
    double shift{0.0};           ///< final shift
    double certified_lower{0.0}; ///< no eigenvalue below this (Cholesky of C - shift exists)
    double gershgorin_lower{0.0};
    int iterations{0};           ///< total Lanczos steps
    int factorizations{0};
};

namespace detail {

/// Largest eigenpair of the SPD operator op by Lanczos with full
/// reorthogonalization and restarts from the Ritz vector.
template <class Op>
std::pair<double, Eigen::VectorXd> lanczos_largest(const Op& op, Eigen::VectorXd v0, double tol, int max_steps,
                                                   int& steps_used, double& rel_residual) {
    const Eigen::Index n = v0.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(40, n));
    double theta = 0.0;
    Eigen::VectorXd ritz = v0.normalized();
    while (steps_used < max_steps) {
        Eigen::MatrixXd V(n, m + 1);
        Eigen::VectorXd alpha(m), beta(m);
        V.col(0) = ritz;
        bool done = false;
        for (int k = 0; k < m && steps_used < max_steps; ++k) {
            Eigen::VectorXd w = op(V.col(k));
            ++steps_used;
            alpha[k] = V.col(k).dot(w);
            for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
            beta[k] = w.norm();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(alpha.head(k + 1), beta.head(k), Eigen::ComputeEigenvectors);
            theta = es.eigenvalues()(k);
            const Eigen::VectorXd s = es.eigenvectors().col(k);
            rel_residual = std::abs(beta[k] * s(k)) / std::abs(theta);
            const bool last = k + 1 == m || steps_used == max_steps;
            if (rel_residual <= tol || beta[k] < 1e-300 || last) {
                ritz = (V.leftCols(k + 1) * s).normalized();
                done = rel_residual <= tol || beta[k] < 1e-300;
                break;
            }
            V.col(k + 1) = w / beta[k];
        }
        if (done) break;
    }
    return {theta, ritz};
}

}  // namespace detail

/// Smallest eigenvalue of B x = lambda M x. Works on C = M^{-1/2} B M^{-1/2}:
/// shift-and-invert Lanczos, first with the shift below a Gershgorin-type bound,
/// then with shifts moved up under the Ritz estimate. Each shift is certified
/// by a successful Cholesky factorization (no eigenvalue below it).
inline EigenEstimate min_eigenvalue(const LinearizedForm& F, double tol = 1e-8, std::uint64_t seed = 20240601) {
    using SpMat = Eigen::SparseMatrix<double>;
    const Eigen::Index n = F.B.rows();
    if (n == 0) throw domain_error("min_eigenvalue: empty form");
    const Eigen::VectorXd s = F.mass.cwiseSqrt().cwiseInverse();
    SpMat C = s.asDiagonal() * F.B * s.asDiagonal();
    C.makeCompressed();
    {
        const SpMat Ct = C.transpose();
        const double asym = (C - Ct).norm(), scale = C.norm();
        if (asym > 1e-12 * scale) throw domain_error("min_eigenvalue: form is not symmetric");
    }
    EigenEstimate out;
    double lower = std::numeric_limits<double>::infinity(), upper = -lower;
    for (Eigen::Index k = 0; k < C.outerSize(); ++k) {
        double diag = 0.0, off = 0.0;
        for (SpMat::InnerIterator it(C, k); it; ++it) {
            if (it.row() == k) diag += it.value();
            else off += std::abs(it.value());
        }
        lower = std::min(lower, diag - off);
        upper = std::max(upper, diag + off);
    }
    out.gershgorin_lower = lower;
    const double spread = std::max(upper - lower, 1.0);
    // K is positive semidefinite, so the diagonal part alone is also a lower bound
    const double weyl = ((F.reaction + F.boundary).array() / F.mass.array()).minCoeff();
    lower = std::max(lower, weyl);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N01;
    Eigen::VectorXd v0(n);
    for (Eigen::Index k = 0; k < n; ++k) v0[k] = N01(rng);

    SpMat I(n, n);
    I.setIdentity();
    Eigen::CholmodSupernodalLLT<SpMat> llt;
    llt.cholmod().print = 0;
    llt.cholmod().error_handler = nullptr;
    bool analysed = false;
    double factored_at = std::numeric_limits<double>::quiet_NaN();
    // true iff C - shift is numerically positive definite (Cholesky completes)
    auto factor_at = [&](double shift) {
        SpMat A = C - shift * I;
        if (!analysed) {
            llt.analyzePattern(A);
            analysed = true;
        }
        llt.factorize(A);
        ++out.factorizations;
        factored_at = shift;
        return llt.info() == Eigen::Success;
    };
    auto op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return llt.solve(x); };

    // stage 1: shift safely below the spectrum
    const double shift0 = lower - 1e-3 * std::max(1.0, std::abs(lower));
    if (!factor_at(shift0))
        throw numerical_error("min_eigenvalue: Cholesky at the lower-bound shift " + std::to_string(shift0) +
                              " is not positive definite (spectrum bounds [" + std::to_string(lower) + ", " +
                              std::to_string(upper) + "])");
    out.certified_lower = shift0;
    double res = 0.0;
    Eigen::VectorXd y = v0;
    double mu = 0.0;

    // loose rounds: move the shift up to a lower bound of the Ritz estimate.
    // Some eigenvalue of C lies in shift + 1/(mu +- res*mu); a Cholesky
    // factor below that interval certifies it is the smallest one.
    for (int round = 0; round < 6; ++round) {
        const double shift = out.certified_lower;
        int used = 0;
        std::tie(mu, y) = detail::lanczos_largest(op, y, 1e-2, 40, used, res);
        out.iterations += used;
        const double lam = shift + 1.0 / mu;
        const double scale = std::max(1.0, std::abs(lam));
        const double floor_gap = std::max(1e-4 * scale, 1e-13 * spread);
        double trial = shift + 1.0 / (mu * (1.0 + res)) - floor_gap;
        if (lam - shift <= 4.0 * floor_gap || trial - shift < 0.5 * (lam - shift)) break;
        bool moved = false;
        for (int attempt = 0; attempt < 30 && trial > shift; ++attempt) {
            if (factor_at(trial)) {
                out.certified_lower = trial;
                moved = true;
                break;
            }
            trial = shift + 0.5 * (trial - shift);
        }
        if (!moved) break;
    }
    if (factored_at != out.certified_lower) factor_at(out.certified_lower);
    const double shift = out.certified_lower;
    int used = 0;
    std::tie(mu, y) = detail::lanczos_largest(op, y, tol, 400, used, res);
    out.iterations += used;

    // some eigenvalue of the inverse lies within res*mu of mu; the certified shift makes it the top one
    out.lambda = shift + 1.0 / mu;
    out.residual = res;
    out.error_bound = (out.lambda - shift) * res / std::max(1.0 - res, 1e-300);
    out.shift = shift;
    if (!(res <= tol))
        throw convergence_error("min_eigenvalue: Lanczos residual " + std::to_string(res) + " after " +
                                std::to_string(out.iterations) + " steps (shift " + std::to_string(shift) + ")",
                                res);
    out.vector = s.cwiseProduct(y);
    return out;
}

/// Nodal values of psi(x, y) on the form's grid.
inline Eigen::VectorXd sample_on(const PolarGrid& g, const std::function<double(double, double)>& psi) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(g.size()));
    v[0] = psi(0.0, 0.0);
    for (int i = 1; i <= g.n_r; ++i)
        for (int j = 0; j < g.n_phi; ++j) {
            const Vec2 x = g.node(i, j);
            v[static_cast<Eigen::Index>(g.index(i, j))] = psi(x.x, x.y);
        }
    return v;
}

/// Grid for the spectral tests: finer in angle than the solver default, the
/// layer is crossed in the angular direction near the contact points.
inline PolarGrid spectral_grid(double eps) { return PolarGrid::for_eps(eps, 10.24, 16.0); }

/// Nodes within the tube |r| < delta, |s| <= 1 of a front, with the front
/// tangent at the foot point.
struct TubeChart {
    double delta{0.0};
    std::vector<std::size_t> node;
    std::vector<double> r;
    std::vector<Vec2> tau;
};

inline TubeChart make_tube_chart(const PolarGrid& g, const FrontCurve& front, double delta) {
    const int nr = g.n_r, np = g.n_phi;
    std::vector<TubeChart> rings(static_cast<std::size_t>(nr) + 1);
    parallel_for(1, static_cast<std::size_t>(nr) + 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            for (int j = 0; j < np; ++j) {
                const auto q = project_to_curve(front, g.node(static_cast<int>(i), j), delta);
                if (!q.in_tube || std::abs(q.s) > 1.0) continue;
                rings[i].node.push_back(g.index(static_cast<int>(i), j));
                rings[i].r.push_back(q.r);
                rings[i].tau.push_back({-q.normal.y, q.normal.x});
            }
    }, 4);
    TubeChart out;
    out.delta = delta;
    for (const auto& ring : rings) {
        out.node.insert(out.node.end(), ring.node.begin(), ring.node.end());
        out.r.insert(out.r.end(), ring.r.begin(), ring.r.end());
        out.tau.insert(out.tau.end(), ring.tau.begin(), ring.tau.end());
    }
    return out;
}

/// Squared L^2 norm over the tube of the tangential derivative tau . grad psi.
/// Gradients by centred differences in (r, phi).
inline double tangential_norm2(const LinearizedForm& F, const Eigen::VectorXd& psi, const TubeChart& chart) {
    const auto& g = F.grid;
    const int nr = g.n_r, np = g.n_phi;
    auto at = [&](int i, int j) { return i == 0 ? psi[0] : psi[static_cast<Eigen::Index>(g.index(i, (j + np) % np))]; };
    double sum = 0.0;
    for (std::size_t m = 0; m < chart.node.size(); ++m) {
        const std::size_t k = chart.node[m];
        const int i = 1 + static_cast<int>((k - 1) / static_cast<std::size_t>(np));
        const int j = static_cast<int>((k - 1) % static_cast<std::size_t>(np));
        const double dr = i < nr ? (at(i + 1, j) - at(i - 1, j)) / (2 * g.h()) : (at(i, j) - at(i - 1, j)) / g.h();
        const double dp = (at(i, j + 1) - at(i, j - 1)) / (2 * g.dphi() * g.r(i));
        const double c = std::cos(g.phi(j)), s = std::sin(g.phi(j));
        const Vec2 grad{c * dr - s * dp, s * dr + c * dp};
        const double d = dot(chart.tau[m], grad);
        sum += g.area(i) * d * d;
    }
    return sum;
}

inline double tangential_norm2(const LinearizedForm& F, const Eigen::VectorXd& psi, const FrontCurve& front,
                               double delta) {
    return tangential_norm2(F, psi, make_tube_chart(F.grid, front, delta));
}

/// Random smooth test functions supported in the tube: a cutoff in r times a
/// few plane waves with wavelengths between eps and the tube length.
inline std::vector<Eigen::VectorXd> tube_probes(const PolarGrid& g, const TubeChart& chart, double eps, int count,
                                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double kmax = 1.0 / eps, pi = std::numbers::pi;
    std::vector<Eigen::VectorXd> out;
    for (int c = 0; c < count; ++c) {
        double kx[4], ky[4], ph[4], amp[4];
        for (int m = 0; m < 4; ++m) {
            const double kap = kmax * U(rng), dir = 2 * pi * U(rng);
            kx[m] = kap * std::cos(dir);
            ky[m] = kap * std::sin(dir);
            ph[m] = 2 * pi * U(rng);
            amp[m] = 2 * U(rng) - 1;
        }
        Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
        for (std::size_t m = 0; m < chart.node.size(); ++m) {
            const std::size_t k = chart.node[m];
            const int i = 1 + static_cast<int>((k - 1) / static_cast<std::size_t>(g.n_phi));
            const int j = static_cast<int>((k - 1) % static_cast<std::size_t>(g.n_phi));
            const Vec2 x = g.node(i, j);
            double v = 1.0;
            for (int q = 0; q < 4; ++q) v += amp[q] * std::cos(kx[q] * x.x + ky[q] * x.y + ph[q]);
            psi[static_cast<Eigen::Index>(k)] = smooth_cutoff(2.0 * chart.r[m] / chart.delta) * v;
        }
        out.push_back(std::move(psi));
    }
    return out;
}

/// B(psi) + C |psi|^2 - c0 eps |grad_tau psi|^2 for each probe, divided by |psi|^2.
inline std::vector<double> refined_margins(const LinearizedForm& F, const TubeChart& chart,
                                           const std::vector<Eigen::VectorXd>& probes, double C, double c0) {
    std::vector<double> out;
    for (const auto& psi : probes) {
        const double n2 = F.norm2(psi);
        out.push_back((F.quadratic(psi) + C * n2 - c0 * F.eps * tangential_norm2(F, psi, chart)) / n2);
    }
    return out;
}

struct RefinedConstants {
    double C{0.0};
    double c0{0.0};
};

/// Fit (C, c0) on one form: C = 2 max(1, -lambda_min), then c0 half the
/// largest value keeping every probe margin non-negative.
inline RefinedConstants fit_refined_constants(const LinearizedForm& F, const TubeChart& chart,
                                              const std::vector<Eigen::VectorXd>& probes, double lambda_min) {
    RefinedConstants k;
    k.C = 2.0 * std::max(1.0, -lambda_min);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& psi : probes) {
        const double t = tangential_norm2(F, psi, chart);
        if (t <= 0.0) continue;
        best = std::min(best, (F.quadratic(psi) + k.C * F.norm2(psi)) / (F.eps * t));
    }
    if (!std::isfinite(best) || best <= 0.0) throw numerical_error("fit_refined_constants: no admissible c0");
    k.c0 = 0.5 * best;
    return k;
}

}  // namespace acrobin
