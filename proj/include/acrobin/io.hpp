#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "acrobin/errors.hpp"

namespace acrobin {

/// Text table:
///
///   # key = value            (any number of metadata lines)
///   # columns: z[1] theta[1]  (last header line; unit in brackets)
///   0 0
///   ...
///
/// Values are written with 17 significant digits so a table re-read and
/// re-written is byte-identical.
struct Table {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> names;
    std::vector<std::string> units;
    std::vector<std::vector<double>> rows;

    void add_column(std::string name, std::string unit) {
        names.push_back(std::move(name));
        units.push_back(std::move(unit));
    }
    void add_row(std::vector<double> r) {
        if (r.size() != names.size()) throw domain_error("table row has " + std::to_string(r.size()) + " values, expected " + std::to_string(names.size()));
        rows.push_back(std::move(r));
    }
    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return k;
        throw domain_error("table has no column '" + name + "'");
    }
    std::vector<double> values(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
    std::string meta_value(const std::string& key) const {
        for (const auto& [k, v] : meta)
            if (k == key) return v;
        throw domain_error("table has no metadata key '" + key + "'");
    }
};

class parse_error : public domain_error {
public:
    parse_error(const std::string& what, int line) : domain_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_table(std::ostream& os, const Table& t) {
    for (const auto& [k, v] : t.meta) os << "# " << k << " = " << v << '\n';
    os << "# columns:";
    for (std::size_t c = 0; c < t.names.size(); ++c) os << ' ' << t.names[c] << '[' << t.units[c] << ']';
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? " " : "") << format_number(r[c]);
        os << '\n';
    }
}

inline void write_table(const std::string& path, const Table& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw domain_error("cannot write table '" + path + "'");
    write_table(os, t);
    if (!os) throw domain_error("error writing table '" + path + "'");
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& v) {
    if (s == "nan") {
        v = std::nan("");
        return true;
    }
    if (s == "inf" || s == "-inf") {
        v = s[0] == '-' ? -INFINITY : INFINITY;
        return true;
    }
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, e, v);
    return ec == std::errc() && p == e;
}

}  // namespace detail

inline Table read_table(std::istream& is) {
    Table t;
    std::string line;
    int n = 0;
    bool have_columns = false;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string s = detail::trim(line);
        if (s.empty()) continue;
        if (s[0] == '#') {
            if (have_columns) throw parse_error("header line after the column line", n);
            const std::string body = detail::trim(s.substr(1));
            if (body.rfind("columns:", 0) == 0) {
                std::istringstream cs(body.substr(8));
                std::string tok;
                while (cs >> tok) {
                    const auto open = tok.find('[');
                    if (open == std::string::npos || open == 0 || tok.back() != ']')
                        throw parse_error("column '" + tok + "' is not of the form name[unit]", n);
                    t.add_column(tok.substr(0, open), tok.substr(open + 1, tok.size() - open - 2));
                }
                if (t.names.empty()) throw parse_error("empty column list", n);
                have_columns = true;
            } else {
                const auto eq = body.find('=');
                if (eq == std::string::npos) throw parse_error("metadata line without '='", n);
                t.meta.emplace_back(detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
            }
            continue;
        }
        if (!have_columns) throw parse_error("data before the '# columns:' line", n);
        std::istringstream ds(s);
        std::vector<double> row;
        std::string tok;
        while (ds >> tok) {
            double v = 0.0;
            if (!detail::parse_double(tok, v)) throw parse_error("not a number: '" + tok + "'", n);
            row.push_back(v);
        }
        if (row.size() != t.names.size())
            throw parse_error("row has " + std::to_string(row.size()) + " values, expected " + std::to_string(t.names.size()), n);
        t.rows.push_back(std::move(row));
    }
    if (!have_columns) throw parse_error("missing '# columns:' line", n);
    return t;
}

inline Table read_table(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw domain_error("cannot open table '" + path + "'");
    return read_table(is);
}

}  // namespace acrobin
