#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cholmod.h>
#include <json.hpp>

#include "acrobin/acsolver.hpp"
#include "acrobin/config.hpp"
#include "acrobin/errors.hpp"
#include "acrobin/halfplane.hpp"
#include "acrobin/harness.hpp"
#include "acrobin/io.hpp"
#include "acrobin/mcf.hpp"
#include "acrobin/parallel.hpp"
#include "acrobin/potential.hpp"
#include "acrobin/profile.hpp"
#include "acrobin/spectrum.hpp"

#ifndef ACROBIN_VERSION
#define ACROBIN_VERSION "0.1.0"
#endif

namespace acrobin {

using Json = nlohmann::ordered_json;

inline Potential make_potential(const RunConfig& c) {
    const auto& q = c.potential_params;
    if (c.potential == "quartic") {
        if (q.size() > 1) throw domain_error("quartic takes at most one parameter (scale)");
        const double scale = q.empty() ? 0.5 : q[0];
        if (!(scale > 0.0)) throw domain_error("quartic scale must be positive");
        return Potential::quartic(scale);
    }
    if (c.potential == "skewed") {
        if (q.size() != 1) throw domain_error("skewed takes exactly one parameter (b)");
        return Potential::skewed(q[0]);
    }
    if (c.potential == "polynomial") {
        if (q.size() < 3) throw domain_error("polynomial needs at least three coefficients");
        return Potential::polynomial(q);
    }
    throw domain_error("unknown potential '" + c.potential + "'");
}

inline BumpShape make_shape(const RunConfig& c) {
    return c.bump == "polynomial" ? BumpShape::polynomial : BumpShape::exponential;
}

inline FrontCurve make_front(const RunConfig& c) {
    if (c.front == "diameter") return vertical_chord(0.0, c.nodes, c.alpha);
    if (c.front == "chord") return vertical_chord(c.x0(), c.nodes, c.alpha);
    return perturbed_chord(c.x0(), c.amplitude, c.nodes, c.alpha);
}

inline Json to_json(const RateFit& f) {
    return Json{{"p", f.p}, {"intercept", f.intercept}, {"residual", f.residual}, {"stderr_p", f.stderr_p}, {"points", f.points}};
}

inline Json to_json(const ConvergenceReport& r) {
    Json runs = Json::array();
    for (const auto& e : r.runs) {
        runs.push_back(Json{{"eps", e.eps},
                            {"ok", e.ok},
                            {"error", e.error},
                            {"n_r", e.n_r},
                            {"n_phi", e.n_phi},
                            {"dt", e.dt},
                            {"steps", e.steps},
                            {"sup_distance", e.sup_distance},
                            {"sup_profile_l2", e.sup_profile_l2},
                            {"terminal_energy", e.terminal_energy},
                            {"in_tube", e.in_tube},
                            {"times", e.times},
                            {"distance", e.distance},
                            {"profile_l2", e.profile_l2},
                            {"tube_excursion", e.tube_excursion}});
    }
    const auto& c = r.config;
    return Json{{"kind", "convergence"},
                {"comparison", "AC zero set vs front-tracked MCF; profile error against the leading-order surrogate theta_0(r/eps)"},
                {"alpha", c.alpha},
                {"T", c.T},
                {"snapshots", c.snapshots},
                {"dt_factor", c.dt_factor},
                {"dt_linear", c.dt_linear},
                {"radial_per_eps", c.radial_per_eps},
                {"angular_per_eps", c.angular_per_eps},
                {"delta0", c.delta0},
                {"mcf_nodes", c.mcf_nodes},
                {"runs", runs},
                {"fit_ok", r.fit_ok},
                {"monotone", r.monotone},
                {"profile_monotone", r.profile_monotone},
                {"distance_fit", to_json(r.distance_fit)},
                {"profile_fit", to_json(r.profile_fit)}};
}

/// lambda_min of the form at the leading-order field around a front.
struct SpectrumRecord {
    double eps{0.0};
    double alpha{0.0};
    int n_r{0}, n_phi{0};
    EigenEstimate estimate;
    double layer_quotient{0.0};          ///< Rayleigh quotient of theta_0'(r/eps)
    std::vector<double> random_quotients;
    double seconds{0.0};
};

struct SpectrumSetup {
    double radial_per_eps{10.24};
    double angular_per_eps{16.0};
    double delta0{0.1};
    double blend_layers{4.0};  ///< cutoff starts no closer than this many eps from the front
    int random_probes{10};
    std::uint64_t seed{20240601};
    double tol{1e-8};
};

inline Field2D leading_order_field(double eps, const FrontCurve& front, const PolarGrid& g, const Potential& p,
                                   const BoundaryEnergy& s, const Profile& theta0, double delta0) {
    return well_prepared_initial(eps, front, g, std::make_shared<Potential>(p), std::make_shared<BoundaryEnergy>(s),
                                 theta0, delta0);
}

inline SpectrumRecord spectrum_record(double eps, const FrontCurve& front, const Potential& p, const BoundaryEnergy& s,
                                      const Profile& theta0, const SpectrumSetup& set = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    SpectrumRecord rec;
    rec.eps = eps;
    rec.alpha = s.alpha();
    const auto g = PolarGrid::for_eps(eps, set.radial_per_eps, set.angular_per_eps);
    rec.n_r = g.n_r;
    rec.n_phi = g.n_phi;
    const auto u = leading_order_field(eps, front, g, p, s, theta0, std::max(set.delta0, set.blend_layers * eps));
    const auto F = assemble_form(u);
    rec.estimate = min_eigenvalue(F, set.tol, set.seed);
    const auto r = signed_distance(g, front);
    Eigen::VectorXd layer(static_cast<Eigen::Index>(r.size()));
    for (std::size_t k = 0; k < r.size(); ++k) layer[static_cast<Eigen::Index>(k)] = theta0.derivative(r[k] / eps);
    rec.layer_quotient = F.rayleigh(layer);
    std::mt19937_64 rng(set.seed + 1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < set.random_probes; ++k) {
        Eigen::VectorXd psi(F.B.rows());
        for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] = U(rng);
        rec.random_quotients.push_back(F.rayleigh(psi));
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

struct CommandOutput {
    Json summary;
    std::vector<std::string> files;
};

namespace detail {

inline std::string table_path(const std::filesystem::path& dir, const std::string& name) { return (dir / name).string(); }

inline CommandOutput cmd_profile(const RunConfig& c, const std::filesystem::path& dir) {
    const Potential p = make_potential(c);
    const Profile prof = solve_optimal_profile(p, c.L, c.N);
    const auto d = diagnose(prof);
    Table t;
    t.meta = {{"kind", "profile"}, {"potential", p.name}, {"L", format_number(c.L)}, {"N", std::to_string(c.N)}};
    t.add_column("z", "1");
    t.add_column("theta", "1");
    t.add_column("dtheta", "1");
    t.add_column("d2theta", "1");
    double tanh_err = 0.0;
    for (std::size_t k = 0; k < prof.z.size(); ++k) {
        t.add_row({prof.z[k], prof.theta[k], prof.dtheta[k], prof.d2theta[k]});
        tanh_err = std::max(tanh_err, std::abs(prof.theta[k] - std::tanh(prof.z[k])));
    }
    const auto path = table_path(dir, "profile.txt");
    write_table(path, t);
    Json s{{"kind", "profile"},
           {"potential", p.name},
           {"L", c.L},
           {"N", c.N},
           {"c_f", surface_constant(p)},
           {"energy", d.energy},
           {"ode_residual", d.ode_residual},
           {"slope_residual", d.slope_residual},
           {"monotone", d.monotone},
           {"decay_left", prof.left.rate},
           {"decay_right", prof.right.rate},
           {"rate_bound", prof.rate_bound}};
    if (c.potential == "quartic" && c.potential_params.empty()) s["sup_tanh_error"] = tanh_err;
    return {s, {path}};
}

inline CommandOutput cmd_sigma(const RunConfig& c, const std::filesystem::path& dir) {
    const Potential p = make_potential(c);
    const BoundaryEnergy s = build_sigma(p, c.alpha, c.margin, make_shape(c));
    Table t;
    t.meta = {{"kind", "sigma"}, {"alpha", format_number(c.alpha)}, {"bump", c.bump}, {"margin", format_number(c.margin)}};
    for (const char* n : {"u", "sigma", "dsigma", "d2sigma"}) t.add_column(n, "1");
    const int n = 481;
    for (int k = 0; k < n; ++k) {
        const double u = -1.2 + 2.4 * k / (n - 1);
        t.add_row({u, s.sigma(u), s.dsigma(u), s.d2sigma(u)});
    }
    const auto path = table_path(dir, "sigma.txt");
    write_table(path, t);
    return {Json{{"kind", "sigma"},
                 {"alpha", c.alpha},
                 {"c_f", s.surface_constant()},
                 {"sigma_jump", s.sigma(-1.0) - s.sigma(1.0)},
                 {"cos_alpha_c_f", s.cos_alpha() * s.surface_constant()},
                 {"support_width", s.support_width()}},
            {path}};
}

inline CommandOutput cmd_halfplane(const RunConfig& c, const std::filesystem::path& dir) {
    const Potential p = make_potential(c);
    const BoundaryEnergy s = build_sigma(p, c.alpha, c.margin, make_shape(c));
    HalfPlaneOptions opt;
    opt.grid = {c.L_R, c.L_H, c.n_R, c.n_H};
    const auto fld = solve_nonlinear_halfplane(p, s, opt);
    const double H0 = 0.75 * c.L_H;
    const double flux = check_flux_identity(fld, H0);
    const auto ex = expansion_coefficients(fld);
    Table t;
    t.meta = {{"kind", "halfplane"}, {"alpha", format_number(c.alpha)}};
    t.add_column("Z", "1");
    t.add_column("I_slice", "1");
    for (std::size_t k = 0; k < ex.Z.size(); ++k) t.add_row({ex.Z[k], ex.I_slice[k]});
    const auto path = table_path(dir, "halfplane_slices.txt");
    write_table(path, t);
    Table f;
    f.meta = {{"kind", "halfplane_field"}, {"alpha", format_number(c.alpha)}, {"n_R", std::to_string(c.n_R)}, {"n_H", std::to_string(c.n_H)}};
    for (const char* n : {"R", "H", "v"}) f.add_column(n, "1");
    for (int j = 0; j < fld.grid.n_H; ++j)
        for (int i = 0; i < fld.grid.n_R; ++i) f.add_row({fld.grid.R(i), fld.grid.H(j), fld(i, j)});
    const auto fpath = table_path(dir, "halfplane_field.txt");
    write_table(fpath, f);
    return {Json{{"kind", "halfplane"},
                 {"alpha", c.alpha},
                 {"grid", {{"L_R", c.L_R}, {"L_H", c.L_H}, {"n_R", c.n_R}, {"n_H", c.n_H}}},
                 {"newton_steps", fld.newton_steps},
                 {"interior_residual", fld.interior_residual},
                 {"boundary_residual", fld.boundary_residual},
                 {"weighted_residual", fld.weighted_residual},
                 {"flux_residual", flux},
                 {"H0", H0},
                 {"I_mix", ex.I_mix},
                 {"b1_plus", ex.b1_plus},
                 {"b1_minus", ex.b1_minus},
                 {"theta_norm2", ex.theta_norm2},
                 {"slice_min", ex.slice_min},
                 {"slice_max", ex.slice_max}},
            {path, fpath}};
}

inline CommandOutput cmd_mcf(const RunConfig& c, const std::filesystem::path& dir) {
    const FrontCurve f0 = make_front(c);
    const double spacing = f0.length() / (f0.size() - 1);
    const double dt = c.dt > 0.0 ? c.dt : 0.25 * spacing * spacing;
    std::vector<FrontCurve> fronts{f0};
    std::vector<double> times{0.0};
    Table e;
    e.meta = {{"kind", "mcf_energy"}, {"alpha", format_number(c.alpha)}, {"dt", format_number(dt)}};
    for (const char* n : {"t", "length", "energy", "angle_start", "angle_end"}) e.add_column(n, n[0] == 'a' ? "rad" : "1");
    e.add_row({0.0, f0.length(), front_energy(f0), contact_angle(f0, 0), contact_angle(f0, 1)});
    bool collapsed = false;
    for (int k = 1; k < c.snapshots && !collapsed; ++k) {
        const double t1 = c.T * k / (c.snapshots - 1);
        const auto tr = run_mcf(fronts.back(), t1 - times.back(), dt, 1 << 30);
        collapsed = tr.collapsed;
        fronts.push_back(tr.snapshots.back());
        fronts.back().t = t1;
        times.push_back(t1);
        e.add_row({t1, fronts.back().length(), front_energy(fronts.back()), contact_angle(fronts.back(), 0),
                   contact_angle(fronts.back(), 1)});
    }
    Table t;
    t.meta = {{"kind", "fronts"}, {"source", "mcf"}, {"alpha", format_number(c.alpha)}};
    for (const char* n : {"snapshot", "t", "x", "y"}) t.add_column(n, "1");
    for (std::size_t k = 0; k < fronts.size(); ++k)
        for (Vec2 q : fronts[k].nodes) t.add_row({static_cast<double>(k), times[k], q.x, q.y});
    const auto pf = table_path(dir, "mcf_fronts.txt"), pe = table_path(dir, "mcf_energy.txt");
    write_table(pf, t);
    write_table(pe, e);
    return {Json{{"kind", "mcf"},
                 {"alpha", c.alpha},
                 {"T", c.T},
                 {"dt", dt},
                 {"nodes", c.nodes},
                 {"collapsed", collapsed},
                 {"initial_length", f0.length()},
                 {"final_length", fronts.back().length()},
                 {"initial_energy", front_energy(f0)},
                 {"final_energy", front_energy(fronts.back())},
                 {"final_angle_start", contact_angle(fronts.back(), 0)},
                 {"final_angle_end", contact_angle(fronts.back(), 1)},
                 {"final_angle_error",
                  std::max(std::abs(contact_angle(fronts.back(), 0) - c.alpha), std::abs(contact_angle(fronts.back(), 1) - c.alpha))}},
            {pf, pe}};
}

inline CommandOutput cmd_ac(const RunConfig& c, const std::filesystem::path& dir) {
    const double eps = c.eps.front();
    const auto p = std::make_shared<Potential>(make_potential(c));
    const auto s = std::make_shared<BoundaryEnergy>(build_sigma(*p, c.alpha, c.margin, make_shape(c)));
    const auto g = PolarGrid::for_eps(eps, c.radial_per_eps, c.angular_per_eps > 0.0 ? c.angular_per_eps : 4.0);
    const Profile theta0 = solve_optimal_profile(*p);
    Field2D u = well_prepared_initial(eps, make_front(c), g, p, s, theta0, c.delta0);
    const double dt = c.dt > 0.0 ? c.dt : 0.1 * eps * eps;
    const double bound = std::max(p->sign_radius, u.max_abs());
    Table e;
    e.meta = {{"kind", "ac_energy"}, {"eps", format_number(eps)}, {"dt", format_number(dt)}};
    for (const char* n : {"t", "energy"}) e.add_column(n, "1");
    Table z;
    z.meta = {{"kind", "fronts"}, {"source", "ac_zero_set"}, {"eps", format_number(eps)}};
    for (const char* n : {"snapshot", "t", "x", "y"}) z.add_column(n, "1");
    auto add_zero = [&](int k, const Field2D& f) {
        const auto zs = extract_zero_set(f);
        for (Vec2 q : zs.longest) z.add_row({static_cast<double>(k), f.t, q.x, q.y});
    };
    add_zero(0, u);
    e.add_row({0.0, energy(u)});
    std::vector<std::string> files;
    auto add_snapshot = [&](int k, const Field2D& f) {
        Table g2;
        g2.meta = {{"kind", "ac_snapshot"}, {"eps", format_number(eps)}, {"t", format_number(f.t)},
                   {"n_r", std::to_string(f.grid.n_r)}, {"n_phi", std::to_string(f.grid.n_phi)}};
        for (const char* n : {"x", "y", "u"}) g2.add_column(n, "1");
        for (std::size_t m = 0; m < f.u.size(); ++m) {
            const Vec2 q = f.position(m);
            g2.add_row({q.x, q.y, f.u[m]});
        }
        files.push_back(table_path(dir, "ac_snapshot" + std::to_string(k) + ".txt"));
        write_table(files.back(), g2);
    };
    add_snapshot(0, u);
    bool monotone = true;
    double max_sup = u.max_abs(), stab = 0.0, stab_b = 0.0;
    long steps = 0;
    for (int k = 1; k < c.snapshots; ++k) {
        const double t1 = c.T * k / (c.snapshots - 1);
        ACOptions opt;
        opt.bound = bound;
        const auto tr = run_ac(u, t1 - u.t, dt, 1 << 30, opt);
        stab = tr.stabilization;
        stab_b = tr.boundary_stabilization;
        for (std::size_t m = 1; m < tr.energy.size(); ++m) {
            if (tr.energy[m] > tr.energy[m - 1] * (1 + 1e-10) + 1e-14) monotone = false;
            e.add_row({tr.times[m], tr.energy[m]});
            max_sup = std::max(max_sup, tr.sup_norm[m]);
        }
        steps += static_cast<long>(tr.times.size()) - 1;
        u = tr.snapshots.back();
        u.t = t1;
        add_zero(k, u);
        add_snapshot(k, u);
    }
    const auto pe = table_path(dir, "ac_energy.txt"), pz = table_path(dir, "ac_fronts.txt");
    write_table(pe, e);
    write_table(pz, z);
    files.push_back(pe);
    files.push_back(pz);
    return {Json{{"kind", "ac"},
                 {"eps", eps},
                 {"alpha", c.alpha},
                 {"n_r", g.n_r},
                 {"n_phi", g.n_phi},
                 {"dt", dt},
                 {"steps", steps},
                 {"stabilization", stab},
                 {"boundary_stabilization", stab_b},
                 {"energy_monotone", monotone},
                 {"max_sup_norm", max_sup},
                 {"bound", bound},
                 {"terminal_energy", energy(u)}},
            files};
}

inline CommandOutput cmd_spectrum(const RunConfig& c, const std::filesystem::path& dir) {
    const Potential p = make_potential(c);
    const BoundaryEnergy s = build_sigma(p, c.alpha, c.margin, make_shape(c));
    const Profile theta0 = solve_optimal_profile(p);
    const FrontCurve front = make_front(c);
    SpectrumSetup set;
    set.radial_per_eps = c.radial_per_eps;
    if (c.angular_per_eps > 0.0) set.angular_per_eps = c.angular_per_eps;
    set.delta0 = c.delta0;
    set.seed = c.seed;
    Table t;
    t.meta = {{"kind", "spectrum"}, {"alpha", format_number(c.alpha)}, {"front", c.front}};
    for (const char* n : {"eps", "lambda_min", "inv_eps2", "layer_quotient"}) t.add_column(n, "1");
    Json recs = Json::array();
    std::vector<SpectrumRecord> all;
    for (double eps : c.eps) {
        const auto r = spectrum_record(eps, front, p, s, theta0, set);
        t.add_row({eps, r.estimate.lambda, 1.0 / (eps * eps), r.layer_quotient});
        recs.push_back(Json{{"eps", eps},
                            {"lambda_min", r.estimate.lambda},
                            {"error_bound", r.estimate.error_bound},
                            {"iterations", r.estimate.iterations},
                            {"factorizations", r.estimate.factorizations},
                            {"certified_lower", r.estimate.certified_lower},
                            {"n_r", r.n_r},
                            {"n_phi", r.n_phi},
                            {"rayleigh_probes", {{"layer", r.layer_quotient}, {"random", r.random_quotients}}}});
        all.push_back(r);
    }
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : all) {
        lo = std::min(lo, std::abs(r.estimate.lambda));
        hi = std::max(hi, std::abs(r.estimate.lambda));
    }
    const auto path = table_path(dir, "spectrum.txt");
    write_table(path, t);
    return {Json{{"kind", "spectrum"}, {"alpha", c.alpha}, {"front", c.front}, {"records", recs}, {"spread", lo > 0.0 ? hi / lo : INFINITY}},
            {path}};
}

inline CommandOutput cmd_converge(const RunConfig& c, const std::filesystem::path& dir) {
    ConvergenceConfig cc;
    cc.eps = c.eps;
    cc.alpha = c.alpha;
    cc.front = make_front(c);
    cc.T = c.T;
    cc.snapshots = c.snapshots;
    if (c.dt > 0.0) throw domain_error("converge uses dt = 0.1 eps^2; leave dt unset");
    cc.radial_per_eps = c.radial_per_eps;
    if (c.angular_per_eps > 0.0) cc.angular_per_eps = c.angular_per_eps;
    cc.delta0 = c.delta0;
    cc.mcf_nodes = c.nodes;
    cc.support_margin = c.margin;
    cc.shape = make_shape(c);
    cc.potential = std::make_shared<Potential>(make_potential(c));
    const auto rep = convergence_study(cc);
    CommandOutput out;
    out.summary = to_json(rep);
    Table sum;
    sum.meta = {{"kind", "convergence"},
                {"alpha", format_number(c.alpha)},
                {"fit_p", format_number(rep.distance_fit.p)},
                {"fit_intercept", format_number(rep.distance_fit.intercept)}};
    for (const char* n : {"eps", "sup_distance", "sup_profile_l2", "terminal_energy"}) sum.add_column(n, "1");
    for (std::size_t k = 0; k < rep.runs.size(); ++k) {
        const auto& r = rep.runs[k];
        if (!r.ok) continue;
        sum.add_row({r.eps, r.sup_distance, r.sup_profile_l2, r.terminal_energy});
        Table t;
        t.meta = {{"kind", "convergence_run"}, {"eps", format_number(r.eps)}};
        for (const char* n : {"t", "distance", "profile_l2", "tube_excursion"}) t.add_column(n, "1");
        for (std::size_t m = 0; m < r.times.size(); ++m) t.add_row({r.times[m], r.distance[m], r.profile_l2[m], r.tube_excursion[m]});
        const auto path = table_path(dir, "converge_eps" + std::to_string(k) + ".txt");
        write_table(path, t);
        out.files.push_back(path);
    }
    const auto path = table_path(dir, "convergence.txt");
    write_table(path, sum);
    out.files.push_back(path);
    const auto jpath = table_path(dir, "convergence_report.json");
    std::ofstream(jpath, std::ios::binary) << out.summary.dump(2) << '\n';
    out.files.push_back(jpath);
    return out;
}

}  // namespace detail

inline Json versions() {
    return Json{{"acrobin", ACROBIN_VERSION},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                              std::to_string(BOOST_VERSION % 100)},
                {"cholmod", std::to_string(CHOLMOD_MAIN_VERSION) + "." + std::to_string(CHOLMOD_SUB_VERSION) + "." +
                                std::to_string(CHOLMOD_SUBSUB_VERSION)},
                {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"compiler", __VERSION__}};
}

/// Runs the subcommand, writes <cmd>.json, config.cfg and manifest.json into
/// dir. Errors propagate; the caller maps them to exit codes.
inline CommandOutput run_command(const RunConfig& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        const auto probe = dir / ".write_test";
        std::ofstream os(probe);
        if (!os) throw domain_error("output directory '" + dir.string() + "' is not writable");
        os.close();
        std::filesystem::remove(probe);
    }
    if (c.threads > 0) set_threads(c.threads);
    const auto t0 = std::chrono::steady_clock::now();
    CommandOutput out;
    if (c.cmd == "profile") out = detail::cmd_profile(c, dir);
    else if (c.cmd == "sigma") out = detail::cmd_sigma(c, dir);
    else if (c.cmd == "halfplane") out = detail::cmd_halfplane(c, dir);
    else if (c.cmd == "mcf") out = detail::cmd_mcf(c, dir);
    else if (c.cmd == "ac") out = detail::cmd_ac(c, dir);
    else if (c.cmd == "spectrum") out = detail::cmd_spectrum(c, dir);
    else if (c.cmd == "converge") out = detail::cmd_converge(c, dir);
    else throw domain_error("unknown subcommand '" + c.cmd + "'");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto spath = (dir / (c.cmd + ".json")).string();
    std::ofstream(spath, std::ios::binary) << out.summary.dump(2) << '\n';
    out.files.push_back(spath);
    const auto cpath = (dir / "config.cfg").string();
    {
        std::ofstream os(cpath, std::ios::binary);
        for (const auto& [k, v] : config_entries(c))
            if (k != "out") os << k << " = " << v << '\n';
    }
    Json cfg = Json::object();
    for (const auto& [k, v] : config_entries(c)) cfg[k] = v;
    Json files = Json::array();
    for (const auto& f : out.files) files.push_back(std::filesystem::path(f).filename().string());
    Json manifest{{"command", c.cmd},
                  {"config", cfg},
                  {"config_file", "config.cfg"},
                  {"versions", versions()},
                  {"threads", threads()},
                  {"wall_time_s", wall},
                  {"outputs", files}};
    std::ofstream(dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    return out;
}

}  // namespace acrobin
