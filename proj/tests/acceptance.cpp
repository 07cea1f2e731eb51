// Acceptance run: one PASS/FAIL line per criterion, INFO lines for context.
// Exit status is the number of failed criteria (capped at 100).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "acrobin/commands.hpp"

using namespace acrobin;

namespace {

constexpr double kPi = std::numbers::pi;
const double k80 = 80.0 * kPi / 180.0;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void info(const std::string& name, const std::string& detail) {
    std::printf("[INFO] %s: %s\n", name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// guard so a thrown error fails its own criterion only
void criterion(const std::string& name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(false, name, std::string("threw: ") + e.what());
    }
}

void optimal_profile() {
    const auto t0 = std::chrono::steady_clock::now();
    const Profile prof = solve_optimal_profile(Potential::quartic(), 8.0, 2000);
    const double sec = seconds_since(t0);
    double err = 0.0;
    for (std::size_t k = 0; k < prof.z.size(); ++k) err = std::max(err, std::abs(prof.theta[k] - std::tanh(prof.z[k])));
    const auto d = diagnose(prof);
    report(err <= 1e-6 && d.ode_residual <= 1e-8 && sec < 1.0, "optimal profile",
           fmt("sup|theta0 - tanh| = %.2e (<= 1e-6), ODE residual = %.2e (<= 1e-8), %.3f s (< 1 s)", err, d.ode_residual, sec));
}

void surface_constant_check() {
    const Potential p = Potential::quartic();
    const double cf = surface_constant(p);
    const double energy = diagnose(solve_optimal_profile(p)).energy;
    report(std::abs(cf - 4.0 / 3.0) <= 1e-8 && std::abs(energy - cf) <= 1e-8, "surface constant",
           fmt("c_f - 4/3 = %.2e, int (theta0')^2 - c_f = %.2e (both <= 1e-8)", cf - 4.0 / 3.0, energy - cf));
}

void linearized_ode() {
    const Profile prof = solve_optimal_profile(Potential::quartic(), 10.0, 4000);
    std::vector<double> A(prof.z.size());
    for (std::size_t k = 0; k < A.size(); ++k) A[k] = -2.0 * prof.d2theta[k];
    const auto res = solve_linearized_ode(prof, A);
    double err = INFINITY;
    if (std::holds_alternative<LinearizedSolution>(res)) {
        err = 0.0;
        const auto& w = std::get<LinearizedSolution>(res).w;
        for (std::size_t k = 0; k < A.size(); ++k) err = std::max(err, std::abs(w[k] - prof.z[k] * prof.dtheta[k]));
    }
    const auto rej = solve_linearized_ode(prof, prof.dtheta);
    const bool rejected = std::holds_alternative<CompatibilityRejection>(rej);
    const double integral = rejected ? std::get<CompatibilityRejection>(rej).integral : NAN;
    const double cf = surface_constant(prof.potential);
    report(err <= 1e-4 && rejected && std::abs(integral - cf) <= 1e-6, "linearized ODE",
           fmt("max|w - z theta0'| = %.2e (<= 1e-4), rejection %s with integral - c_f = %.2e (<= 1e-6)", err,
               rejected ? "fired" : "missing", integral - cf));
}

void halfplane() {
    const Potential p = Potential::quartic();
    const double cf = surface_constant(p);
    HalfPlaneOptions opt;
    opt.grid = {10.0, 10.0, 401, 201};
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto f = solve_nonlinear_halfplane(p, build_sigma(p, kPi / 2), opt);
        const double sec = seconds_since(t0);
        double dev = 0.0;
        for (int j = 0; j < f.grid.n_H; ++j)
            for (int i = 0; i < f.grid.n_R; ++i) dev = std::max(dev, std::abs(f(i, j) - f.theta_h[i]));
        const double res = std::max(f.interior_residual, f.boundary_residual);
        report(f.newton_steps <= 1 && res <= 1e-10 && dev == 0.0 && sec < 60.0, "half-plane, alpha = 90 deg",
               fmt("Newton steps = %d (<= 1), residual = %.2e (<= 1e-10), max|v - theta0(R)| = %.1e, %.1f s", f.newton_steps,
                   res, dev, sec));
    }
    for (double da : {-0.2, 0.2}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto f = solve_nonlinear_halfplane(p, build_sigma(p, kPi / 2 + da), opt);
        const double sec = seconds_since(t0);
        const double flux = std::abs(check_flux_identity(f, 0.75 * f.grid.L_H));
        const auto e = expansion_coefficients(f);
        const double n2 = e.theta_norm2;
        bool slices = true;
        for (double s : e.I_slice) slices = slices && s >= 0.75 * n2 && s <= 1.25 * n2;
        const double sa = std::sin(f.alpha);
        const bool b1 = std::abs(e.b1_plus) >= 0.5 * sa * n2 && std::abs(e.b1_minus) >= 0.5 * sa * n2;
        report(f.newton_steps <= 10 && flux <= 1e-3 * cf && slices && e.I_mix <= 0.25 * n2 && b1 && sec < 60.0,
               fmt("half-plane, alpha = pi/2 %+.1f", da),
               fmt("Newton steps = %d (<= 10), flux residual = %.2e (<= %.2e), I_slice/|theta0'|^2 in [%.3f, %.3f], "
                   "I_mix/|theta0'|^2 = %.3f, |b1+-|/(sin a |theta0'|^2) = %.3f, %.3f, %.1f s",
                   f.newton_steps, flux, 1e-3 * cf, e.slice_min / n2, e.slice_max / n2, e.I_mix / n2,
                   std::abs(e.b1_plus) / (sa * n2), std::abs(e.b1_minus) / (sa * n2), sec));
    }
}

// u* = e^{-(R^2 + H)} sin R
double manufactured_halfplane_error(double h) {
    auto u = [](double R, double H) { return std::exp(-(R * R + H)) * std::sin(R); };
    auto uR = [](double R, double H) { return std::exp(-(R * R + H)) * (std::cos(R) - 2.0 * R * std::sin(R)); };
    auto uRR = [](double R, double H) {
        return std::exp(-(R * R + H)) * (-3.0 * std::sin(R) - 4.0 * R * std::cos(R) + 4.0 * R * R * std::sin(R));
    };
    const Potential p = Potential::quartic();
    HalfPlaneOptions opt;
    opt.grid = HalfPlaneGrid::with_spacing(6.0, 20.0, h);
    const auto f = solve_nonlinear_halfplane(p, build_sigma(p, kPi / 2 + 0.2), opt);
    const auto& g = f.grid;
    const double c = f.cos_alpha;
    std::vector<double> G(g.size()), gb(g.n_R);
    for (int j = 0; j < g.n_H; ++j)
        for (int i = 0; i < g.n_R; ++i) {
            const double R = g.R(i), H = g.H(j);
            // u_HH = u, u_RH = -u_R
            G[g.index(i, j)] = -(uRR(R, H) + 2.0 * c * uR(R, H) + u(R, H)) + p.d2f(f(i, j)) * u(R, H);
        }
    for (int i = 0; i < g.n_R; ++i) {
        const double R = g.R(i);
        gb[i] = c * uR(R, 0.0) + u(R, 0.0) + f.sigma.d2sigma(f(i, 0)) * u(R, 0.0);
    }
    const auto res = solve_linearized_halfplane(f, G, gb, 0.05);
    if (!std::holds_alternative<LinearizedHalfPlane>(res)) throw numerical_error("manufactured data rejected");
    const auto& sol = std::get<LinearizedHalfPlane>(res);
    double err = 0.0;
    for (int j = 0; j < g.n_H; ++j)
        for (int i = 0; i < g.n_R; ++i) err = std::max(err, std::abs(sol.u[g.index(i, j)] - u(g.R(i), g.H(j))));
    return err;
}

void linearized_halfplane() {
    const double e1 = manufactured_halfplane_error(0.2), e2 = manufactured_halfplane_error(0.1),
                 e3 = manufactured_halfplane_error(0.05);
    const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    report(o1 >= 1.9 && o2 >= 1.9, "linearized half-plane manufactured solution",
           fmt("max errors %.2e, %.2e, %.2e at h = 0.2, 0.1, 0.05; observed orders %.2f, %.2f (>= 1.9)", e1, e2, e3, o1, o2));
}

double chord_drift(const FrontCurve& c, double x0) {
    double d = 0.0;
    for (Vec2 q : c.nodes) d = std::max(d, std::abs(q.x - x0));
    return d;
}

void mcf_stationarity() {
    auto c = vertical_chord(0.0, 200, kPi / 2);
    const auto c0 = c;
    const double h = c.length() / 200;
    for (int k = 0; k < 1000; ++k) c = step_mcf(c, 0.25 * h * h).curve;
    double drift = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) drift = std::max(drift, norm(c.nodes[i] - c0.nodes[i]));

    std::vector<double> d;
    for (int N : {200, 400}) {
        const auto ch = vertical_chord(0.5, N, kPi / 3);
        const double s = ch.length() / N;
        const auto tr = run_mcf(ch, 0.05, 0.25 * s * s, 1 << 30);
        d.push_back(chord_drift(tr.snapshots.back(), 0.5));
    }
    // a chord that stays put to round-off has no discretization error to halve
    const bool halves = d[1] <= 0.5 * d[0] || std::max(d[0], d[1]) <= 1e-10;
    report(drift <= 1e-6 && d[1] <= 1e-3 && halves, "MCF stationarity",
           fmt("diameter drift after 1000 steps = %.2e (<= 1e-6); cos(alpha) = 0.5 chord drift at T = 0.05: "
               "N = 200: %.2e, N = 400: %.2e (<= 1e-3, halving or round-off)",
               drift, d[0], d[1]));
}

double manufactured_ac_error(int nr) {
    const double eps = 1.0;
    const auto pot = std::make_shared<Potential>(Potential::quartic());
    const auto sig = std::make_shared<BoundaryEnergy>(build_sigma(*pot, k80));
    auto exact = [](double x, double y) { return 0.8 + 0.15 * std::sin(x + 2 * y); };
    ACOptions opt;
    opt.bulk = [&](double x, double y, double) { return 5.0 * 0.15 * std::sin(x + 2 * y) + pot->df(exact(x, y)) / (eps * eps); };
    opt.boundary = [&](double x, double y, double) {
        const double c = 0.15 * std::cos(x + 2 * y);
        return x * c + y * 2.0 * c + sig->dsigma(exact(x, y)) / eps;
    };
    auto u = make_field(PolarGrid{nr, 6 * nr}, eps, pot, sig, [](double, double) { return 0.8; });
    const ACStepper st(u, 0.5, opt);
    for (int it = 0; it < 400; ++it) {
        auto next = st.step(u);
        double inc = 0.0;
        for (std::size_t k = 0; k < u.u.size(); ++k) inc = std::max(inc, std::abs(next.u[k] - u.u[k]));
        u = std::move(next);
        if (inc < 1e-14) break;
    }
    double e2 = u.grid.center_area() * std::pow(u.u[0] - exact(0, 0), 2);
    for (int i = 1; i <= nr; ++i)
        for (int j = 0; j < u.grid.n_phi; ++j) {
            const Vec2 x = u.grid.node(i, j);
            e2 += u.grid.area(i) * std::pow(u(i, j) - exact(x.x, x.y), 2);
        }
    return std::sqrt(e2);
}

void ac_solver() {
    const double eps = 0.05, dt = 0.1 * eps * eps;
    const auto pot = std::make_shared<Potential>(Potential::quartic());
    const auto g = PolarGrid::for_eps(eps);

    bool stationary = true;
    {
        const auto sig = std::make_shared<BoundaryEnergy>(build_sigma(*pot, k80));
        const auto one = make_field(g, eps, pot, sig, [](double, double) { return 1.0; });
        const auto tr = run_ac(one, 50 * dt, dt, 10);
        for (const auto& s : tr.snapshots)
            for (double v : s.u) stationary = stationary && v == 1.0;
    }

    bool monotone = true;
    double worst_bound = -INFINITY;
    for (double alpha : {kPi / 2, k80}) {
        const auto sig = std::make_shared<BoundaryEnergy>(build_sigma(*pot, alpha));
        const auto u0 = make_field(g, eps, pot, sig, [eps](double x, double) { return std::tanh(x / eps); });
        const auto tr = run_ac(u0, 0.01, dt, 1 << 30);
        const double bound = std::max(pot->sign_radius, u0.max_abs());
        for (std::size_t k = 1; k < tr.energy.size(); ++k)
            monotone = monotone && tr.energy[k] <= tr.energy[k - 1] + 1e-10 * std::abs(tr.energy[k - 1]);
        for (double m : tr.sup_norm) worst_bound = std::max(worst_bound, m - bound);
    }
    {
        // rough data above the wells, with and without stabilization
        const auto sig = std::make_shared<BoundaryEnergy>(build_sigma(*pot, k80));
        const auto u0 = make_field(g, eps, pot, sig,
                                   [](double x, double y) { return 1.3 * std::sin(937.0 * x * y + 211.0 * x - 173.0 * y); });
        const double bound = std::max(pot->sign_radius, u0.max_abs());
        for (double step : {dt, eps * eps}) {
            const auto tr = run_ac(u0, 20 * step, step, 1 << 30);
            for (double m : tr.sup_norm) worst_bound = std::max(worst_bound, m - bound);
        }
    }
    const double e1 = manufactured_ac_error(16), e2 = manufactured_ac_error(32), e3 = manufactured_ac_error(64);
    const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    report(stationary && monotone && worst_bound <= 1e-8 && o1 >= 1.9 && o2 >= 1.9, "AC solver",
           fmt("u = 1 stationary: %s; energy non-increasing (diameter, eps = 0.05, 90 and 80 deg): %s; "
               "max(|u|_inf - bound) = %.2e (<= 1e-8); manufactured orders %.2f, %.2f (>= 1.9)",
               stationary ? "yes" : "no", monotone ? "yes" : "no", worst_bound, o1, o2));
}

struct Sweep {
    std::vector<double> lambda;
    double max_seconds{0.0};
    double ratio() const {
        double lo = INFINITY, hi = 0.0;
        for (double l : lambda) {
            lo = std::min(lo, std::abs(l));
            hi = std::max(hi, std::abs(l));
        }
        return hi / lo;
    }
    std::string text() const {
        std::string s;
        for (double l : lambda) s += (s.empty() ? "" : ", ") + fmt("%.3f", l);
        return "lambda_min = " + s + fmt("; max/min = %.2f; slowest eps %.0f s", ratio(), max_seconds);
    }
};

Sweep spectral_sweep(const FrontCurve& front, double alpha, const Potential& p, const Profile& theta0) {
    Sweep s;
    const auto sigma = build_sigma(p, alpha);
    for (double eps : {0.1, 0.05, 0.025}) {
        const auto r = spectrum_record(eps, front, p, sigma, theta0);
        s.lambda.push_back(r.estimate.lambda);
        s.max_seconds = std::max(s.max_seconds, r.seconds);
    }
    return s;
}

void spectral_estimate() {
    const Potential p = Potential::quartic();
    const Profile theta0 = solve_optimal_profile(p);
    const auto d90 = spectral_sweep(vertical_chord(0.0, 400, kPi / 2), kPi / 2, p, theta0);
    const auto c80 = spectral_sweep(vertical_chord(std::cos(k80), 400, k80), k80, p, theta0);
    const auto d80 = spectral_sweep(vertical_chord(0.0, 400, k80), k80, p, theta0);

    double worst_const = 0.0;
    for (double eps : {0.1, 0.05}) {
        const auto g = spectral_grid(eps);
        const auto u = make_field(g, eps, std::make_shared<Potential>(p), std::make_shared<BoundaryEnergy>(build_sigma(p, k80)),
                                  [](double, double) { return 1.0; });
        const double expect = p.d2f(1.0) / (eps * eps);
        worst_const = std::max(worst_const, std::abs(min_eigenvalue(assemble_form(u)).lambda - expect) / expect);
    }
    const double slowest = std::max({d90.max_seconds, c80.max_seconds, d80.max_seconds});
    info("spectral estimate, 80 deg, literal diameter", d80.text() + " (the diameter meets the wall at 90 deg, not a leading-order state at 80 deg)");
    report(d90.ratio() <= 3.0 && c80.ratio() <= 3.0 && worst_const <= 1e-6 && slowest < 300.0, "spectral estimate",
           "eps = 0.1, 0.05, 0.025; 90 deg diameter: " + d90.text() + "; 80 deg chord x = cos(alpha): " + c80.text() +
               fmt("; constant field relative error %.1e (<= 1e-6)", worst_const));
}

ConvergenceReport convergence_sweep(double alpha, double& seconds) {
    ConvergenceConfig cfg;
    cfg.alpha = alpha;
    const double x0 = std::abs(alpha - kPi / 2) < 1e-12 ? 0.0 : std::cos(alpha);
    cfg.front = perturbed_chord(x0, 0.15, 200, alpha);
    const auto t0 = std::chrono::steady_clock::now();
    auto rep = convergence_study(cfg);
    seconds = seconds_since(t0);
    return rep;
}

void sharp_interface() {
    double total = 0.0;
    bool ok = true;
    std::string detail;
    for (double deg : {90.0, 80.0}) {
        double sec = 0.0;
        const auto rep = convergence_sweep(deg * kPi / 180.0, sec);
        total += sec;
        std::string d;
        for (const auto& r : rep.runs) d += (d.empty() ? "" : ", ") + (r.ok ? fmt("%.3e", r.sup_distance) : "failed: " + r.error);
        bool tube = true;
        for (const auto& r : rep.runs) tube = tube && r.ok && r.in_tube;
        const bool pass = rep.fit_ok && rep.monotone && rep.distance_fit.p >= 0.8;
        ok = ok && pass;
        detail += fmt("%.0f deg: sup distance = ", deg) + d +
                  fmt(" (eps = 0.08, 0.04, 0.02), p = %.2f +- %.2f, monotone %s, in tube %s, %.0f s; ", rep.distance_fit.p,
                      rep.distance_fit.stderr_p, rep.monotone ? "yes" : "no", tube ? "yes" : "no", sec);
    }
    report(ok && total < 1800.0, "sharp-interface convergence", detail + fmt("total %.0f s (< 1800 s)", total));
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void determinism() {
    RunConfig c;
    c.cmd = "converge";
    c.eps = {0.16, 0.12, 0.08};
    c.T = 0.01;
    c.snapshots = 4;
    const auto base = std::filesystem::temp_directory_path() / "acrobin_acceptance_determinism";
    std::filesystem::remove_all(base);
    c.threads = 1;
    run_command(c, base / "a");
    run_command(c, base / "b");
    c.threads = 3;
    run_command(c, base / "c");
    set_threads(1);
    bool same = true;
    for (const char* f : {"convergence_report.json", "converge.json", "convergence.txt", "converge_eps0.txt", "converge_eps2.txt"}) {
        const auto a = slurp(base / "a" / f);
        same = same && !a.empty() && a == slurp(base / "b" / f) && a == slurp(base / "c" / f);
    }
    report(same, "determinism", std::string("three converge runs (1, 1, 3 threads), reports and tables ") +
                                    (same ? "byte-identical" : "differ"));
}

}  // namespace

int main() {
    set_threads(1);
    const auto t0 = std::chrono::steady_clock::now();
    criterion("optimal profile", optimal_profile);
    criterion("surface constant", surface_constant_check);
    criterion("linearized ODE", linearized_ode);
    criterion("half-plane", halfplane);
    criterion("linearized half-plane manufactured solution", linearized_halfplane);
    criterion("MCF stationarity", mcf_stationarity);
    criterion("AC solver", ac_solver);
    criterion("spectral estimate", spectral_estimate);
    criterion("sharp-interface convergence", sharp_interface);
    criterion("determinism", determinism);
    info("total", fmt("%d failed, %.0f s", failures, seconds_since(t0)));
    return std::min(failures, 100);
}
