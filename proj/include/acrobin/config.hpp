#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acrobin/errors.hpp"
#include "acrobin/io.hpp"

namespace acrobin {

/// Everything a run needs. Zero in a "0 = default" field means the
/// subcommand picks its own value.
struct RunConfig {
    std::string cmd;
    std::string potential{"quartic"};     ///< quartic | skewed | polynomial
    std::vector<double> potential_params; ///< quartic: [scale]; skewed: [b]; polynomial: coefficients, ascending
    double alpha{std::numbers::pi / 2};   ///< radians
    std::string bump{"exponential"};      ///< exponential | polynomial
    double margin{0.1};
    // profile
    double L{8.0};
    int N{2000};
    // half plane
    double L_R{10.0}, L_H{10.0};
    int n_R{401}, n_H{201};
    // polar grid
    double radial_per_eps{10.24};
    double angular_per_eps{0.0};  ///< 0: 4 for ac/converge, 16 for spectrum
    std::vector<double> eps{0.08, 0.04, 0.02};
    double T{0.05};
    double dt{0.0};  ///< 0: 0.1 eps^2 (ac), 0.25 spacing^2 (mcf)
    // fronts
    std::string front{"perturbed"};  ///< diameter | chord | perturbed
    double front_x0{std::nan("")};   ///< nan: 0 at 90 degrees, cos(alpha) otherwise
    double amplitude{0.15};
    int nodes{200};
    int snapshots{10};
    double delta0{0.1};
    int probes{50};
    std::string out{};
    std::uint64_t seed{20240601};
    int threads{0};  ///< 0: hardware concurrency

    double x0() const {
        if (!std::isnan(front_x0)) return front_x0;
        return std::abs(std::cos(alpha)) < 1e-15 ? 0.0 : std::cos(alpha);
    }
};

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"profile", "sigma", "halfplane", "mcf", "ac", "spectrum", "converge"};
    return s;
}

namespace detail {

struct bad_value : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline double to_double(const std::string& s) {
    double v = 0.0;
    if (!parse_double(trim(s), v) || !std::isfinite(v)) throw bad_value("expected a finite number, got '" + s + "'");
    return v;
}

inline long to_integer(const std::string& s) {
    const std::string t = trim(s);
    long v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty()) throw bad_value("expected an integer, got '" + s + "'");
    return v;
}

inline std::vector<double> to_list(const std::string& s) {
    std::string t = trim(s);
    if (!t.empty() && t.front() == '[') {
        if (t.back() != ']') throw bad_value("unterminated list '" + s + "'");
        t = t.substr(1, t.size() - 2);
    }
    std::vector<double> out;
    if (trim(t).empty()) return out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(item));
    return out;
}

/// "80", "80deg" -> degrees; "1.39rad" -> radians. Returns radians.
inline double to_angle(const std::string& s) {
    std::string t = trim(s);
    double scale = std::numbers::pi / 180.0;
    auto ends = [&](const std::string& suf) { return t.size() > suf.size() && t.compare(t.size() - suf.size(), suf.size(), suf) == 0; };
    if (ends("deg")) t = t.substr(0, t.size() - 3);
    else if (ends("rad")) {
        t = t.substr(0, t.size() - 3);
        scale = 1.0;
    }
    const double a = to_double(t) * scale;
    if (!(a > 0.0 && a < std::numbers::pi))
        throw bad_value("alpha must lie strictly between 0 and 180 degrees, got '" + s + "'");
    return a;
}

inline std::string one_of(const std::string& s, std::initializer_list<const char*> allowed) {
    const std::string t = trim(s);
    std::string list;
    for (const char* a : allowed) {
        if (t == a) return t;
        list += (list.empty() ? "" : " | ") + std::string(a);
    }
    throw bad_value("expected one of " + list + ", got '" + s + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw bad_value(std::string(what) + " must be positive");
        return v;
    };
    auto at_least = [](long v, long lo) {
        if (v < lo) throw bad_value("must be at least " + std::to_string(lo));
        return static_cast<int>(v);
    };
    static const std::map<std::string, Setter> m{
        {"cmd", [](RunConfig& c, const std::string& v) {
             c.cmd = one_of(v, {"profile", "sigma", "halfplane", "mcf", "ac", "spectrum", "converge"});
         }},
        {"potential", [](RunConfig& c, const std::string& v) { c.potential = one_of(v, {"quartic", "skewed", "polynomial"}); }},
        {"potential_params", [](RunConfig& c, const std::string& v) { c.potential_params = to_list(v); }},
        {"alpha", [](RunConfig& c, const std::string& v) { c.alpha = to_angle(v); }},
        {"bump", [](RunConfig& c, const std::string& v) { c.bump = one_of(v, {"exponential", "polynomial"}); }},
        {"margin", [](RunConfig& c, const std::string& v) {
             c.margin = to_double(v);
             if (!(c.margin > 0.0 && c.margin < 1.0)) throw bad_value("margin must lie in (0, 1)");
         }},
        {"L", [=](RunConfig& c, const std::string& v) { c.L = positive(to_double(v), "L"); }},
        {"N", [=](RunConfig& c, const std::string& v) { c.N = at_least(to_integer(v), 10); }},
        {"L_R", [=](RunConfig& c, const std::string& v) { c.L_R = positive(to_double(v), "L_R"); }},
        {"L_H", [=](RunConfig& c, const std::string& v) { c.L_H = positive(to_double(v), "L_H"); }},
        {"n_R", [=](RunConfig& c, const std::string& v) { c.n_R = at_least(to_integer(v), 11); }},
        {"n_H", [=](RunConfig& c, const std::string& v) { c.n_H = at_least(to_integer(v), 5); }},
        {"radial_per_eps", [=](RunConfig& c, const std::string& v) { c.radial_per_eps = positive(to_double(v), "radial_per_eps"); }},
        {"angular_per_eps", [=](RunConfig& c, const std::string& v) { c.angular_per_eps = positive(to_double(v), "angular_per_eps"); }},
        {"eps", [](RunConfig& c, const std::string& v) {
             auto e = to_list(v);
             if (e.empty()) throw bad_value("eps list is empty");
             for (std::size_t k = 0; k < e.size(); ++k) {
                 if (!(e[k] > 0.0)) throw bad_value("eps values must be positive");
                 if (k > 0 && !(e[k] < e[k - 1])) throw bad_value("eps values must be strictly decreasing");
             }
             c.eps = std::move(e);
         }},
        {"T", [](RunConfig& c, const std::string& v) {
             c.T = to_double(v);
             if (c.T < 0.0) throw bad_value("T must be non-negative");
         }},
        {"dt", [](RunConfig& c, const std::string& v) {
             c.dt = to_double(v);
             if (c.dt < 0.0) throw bad_value("dt must be non-negative (0 selects the default)");
         }},
        {"front", [](RunConfig& c, const std::string& v) { c.front = one_of(v, {"diameter", "chord", "perturbed"}); }},
        {"front_x0", [](RunConfig& c, const std::string& v) {
             c.front_x0 = to_double(v);
             if (!(std::abs(c.front_x0) < 1.0)) throw bad_value("front_x0 must lie in (-1, 1)");
         }},
        {"amplitude", [](RunConfig& c, const std::string& v) { c.amplitude = to_double(v); }},
        {"nodes", [=](RunConfig& c, const std::string& v) { c.nodes = at_least(to_integer(v), 3); }},
        {"snapshots", [=](RunConfig& c, const std::string& v) { c.snapshots = at_least(to_integer(v), 2); }},
        {"delta0", [=](RunConfig& c, const std::string& v) { c.delta0 = positive(to_double(v), "delta0"); }},
        {"probes", [=](RunConfig& c, const std::string& v) { c.probes = at_least(to_integer(v), 1); }},
        {"out", [](RunConfig& c, const std::string& v) { c.out = trim(v); }},
        {"seed", [](RunConfig& c, const std::string& v) {
             const long s = to_integer(v);
             if (s < 0) throw bad_value("seed must be non-negative");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"threads", [=](RunConfig& c, const std::string& v) { c.threads = at_least(to_integer(v), 0); }},
    };
    return m;
}

}  // namespace detail

/// Applies one key=value; where names the source ("file.cfg" or "--flag").
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value, int line,
                             const std::string& where = "") {
    const auto& m = detail::setters();
    const auto it = m.find(key);
    const std::string src = where.empty() ? "" : where + ": ";
    if (it == m.end()) throw parse_error(src + "unknown key '" + key + "'", line);
    try {
        it->second(c, value);
    } catch (const detail::bad_value& e) {
        throw parse_error(src + "key '" + key + "': " + e.what(), line);
    }
}

/// Flat key = value text; '#' starts a comment.
inline void parse_config(std::istream& is, RunConfig& c, const std::string& where = "") {
    std::string line;
    int n = 0;
    std::map<std::string, int> seen;
    while (std::getline(is, line)) {
        ++n;
        const auto hash = line.find('#');
        const std::string s = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (s.empty()) continue;
        const auto eq = s.find('=');
        const std::string src = where.empty() ? "" : where + ": ";
        if (eq == std::string::npos) throw parse_error(src + "expected key = value, got '" + s + "'", n);
        const std::string key = detail::trim(s.substr(0, eq));
        if (seen.count(key))
            throw parse_error(src + "key '" + key + "' repeated (first on line " + std::to_string(seen[key]) + ")", n);
        seen[key] = n;
        set_config_value(c, key, s.substr(eq + 1), n, where);
    }
}

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig c;
    std::istringstream is(text);
    parse_config(is, c);
    return c;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw domain_error("cannot open config file '" + path + "'");
    RunConfig c;
    parse_config(is, c, path);
    return c;
}

/// key = value lines for every field, in a fixed order; parsing them back
/// reproduces the config.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
    auto list = [](const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_number(v[k]);
        return s + "]";
    };
    std::vector<std::pair<std::string, std::string>> e{
        {"cmd", c.cmd},
        {"potential", c.potential},
        {"potential_params", list(c.potential_params)},
        {"alpha", format_number(c.alpha) + "rad"},
        {"bump", c.bump},
        {"margin", format_number(c.margin)},
        {"L", format_number(c.L)},
        {"N", std::to_string(c.N)},
        {"L_R", format_number(c.L_R)},
        {"L_H", format_number(c.L_H)},
        {"n_R", std::to_string(c.n_R)},
        {"n_H", std::to_string(c.n_H)},
        {"radial_per_eps", format_number(c.radial_per_eps)},
        {"eps", list(c.eps)},
        {"T", format_number(c.T)},
        {"dt", format_number(c.dt)},
        {"front", c.front},
        {"amplitude", format_number(c.amplitude)},
        {"nodes", std::to_string(c.nodes)},
        {"snapshots", std::to_string(c.snapshots)},
        {"delta0", format_number(c.delta0)},
        {"probes", std::to_string(c.probes)},
        {"seed", std::to_string(c.seed)},
        {"threads", std::to_string(c.threads)},
    };
    if (c.angular_per_eps > 0.0) e.emplace_back("angular_per_eps", format_number(c.angular_per_eps));
    if (!std::isnan(c.front_x0)) e.emplace_back("front_x0", format_number(c.front_x0));
    if (!c.out.empty()) e.emplace_back("out", c.out);
    return e;
}

}  // namespace acrobin
