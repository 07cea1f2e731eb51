#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "acrobin/config.hpp"
#include "acrobin/io.hpp"

using namespace acrobin;

namespace {

Table sample() {
    Table t;
    t.meta = {{"kind", "profile"}, {"potential", "quartic"}};
    t.add_column("z", "1");
    t.add_column("theta", "1");
    t.add_row({-1.0, std::tanh(-1.0)});
    t.add_row({0.1, std::tanh(0.1)});
    t.add_row({1e-300, 1.0 / 3.0});
    return t;
}

std::string text(const Table& t) {
    std::ostringstream os;
    write_table(os, t);
    return os.str();
}

int line_of(const std::string& s) {
    try {
        std::istringstream is(s);
        read_table(is);
    } catch (const parse_error& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST(Table, RoundTripIsByteIdentical) {
    const std::string a = text(sample());
    std::istringstream is(a);
    const Table back = read_table(is);
    EXPECT_EQ(text(back), a);
    EXPECT_EQ(back.values("theta")[1], std::tanh(0.1));
    EXPECT_EQ(back.meta_value("kind"), "profile");
    EXPECT_EQ(back.units[0], "1");
}

TEST(Table, NonFiniteValuesSurvive) {
    Table t;
    t.add_column("x", "1");
    t.add_row({std::nan("")});
    t.add_row({-INFINITY});
    std::istringstream is(text(t));
    const auto back = read_table(is);
    EXPECT_TRUE(std::isnan(back.rows[0][0]));
    EXPECT_EQ(back.rows[1][0], -INFINITY);
}

TEST(Table, ParseErrorsCarryTheLine) {
    EXPECT_EQ(line_of("# columns: a[1] b[1]\n1 2\n3\n"), 3);
    EXPECT_EQ(line_of("# k = v\n1 2\n"), 2);
    EXPECT_EQ(line_of("# columns: a[1]\n\nx\n"), 3);
    EXPECT_EQ(line_of("# columns: a\n"), 1);
    EXPECT_EQ(line_of("# just a comment\n"), 1);
    EXPECT_EQ(line_of("# k = v\n"), 1);
    EXPECT_THROW(sample().add_row({1.0}), domain_error);
    EXPECT_THROW(sample().column("nope"), domain_error);
}

TEST(Config, MinimalFileGetsDefaults) {
    const auto c = parse_config_text("cmd = profile\n");
    const RunConfig d;
    EXPECT_EQ(c.cmd, "profile");
    EXPECT_EQ(c.potential, "quartic");
    EXPECT_EQ(c.alpha, d.alpha);
    EXPECT_EQ(c.eps, d.eps);
    EXPECT_EQ(c.L, d.L);
    EXPECT_EQ(c.N, d.N);
}

TEST(Config, AnglesAreDegreesUnlessFlagged) {
    EXPECT_NEAR(parse_config_text("alpha = 80").alpha, 80 * std::numbers::pi / 180, 1e-15);
    EXPECT_NEAR(parse_config_text("alpha = 80deg").alpha, 80 * std::numbers::pi / 180, 1e-15);
    EXPECT_EQ(parse_config_text("alpha = 1.25rad").alpha, 1.25);
    EXPECT_THROW(parse_config_text("alpha = 190"), parse_error);
    EXPECT_THROW(parse_config_text("alpha = 0"), parse_error);
    EXPECT_THROW(parse_config_text("alpha = 3.2rad"), parse_error);
}

TEST(Config, ListsKeepTheirOrder) {
    const auto c = parse_config_text("eps = [0.1, 0.05, 0.025]\npotential_params = 2, -1, 0.5");
    EXPECT_EQ(c.eps, (std::vector<double>{0.1, 0.05, 0.025}));
    EXPECT_EQ(c.potential_params, (std::vector<double>{2.0, -1.0, 0.5}));
    EXPECT_THROW(parse_config_text("eps = 0.05, 0.1, 0.025"), parse_error);
}

TEST(Config, ErrorsNameTheKeyAndLine) {
    try {
        parse_config_text("cmd = ac\n# comment\nfoo = 3\n");
        FAIL();
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_NE(std::string(e.what()).find("'foo'"), std::string::npos);
    }
    try {
        parse_config_text("T = 0.1\nT = 0.2\n");
        FAIL();
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 2);
    }
    EXPECT_THROW(parse_config_text("N = ten"), parse_error);
    EXPECT_THROW(parse_config_text("front = circle"), parse_error);
    EXPECT_THROW(parse_config_text("no equals sign"), parse_error);
    EXPECT_THROW(parse_config_file("/nonexistent/run.cfg"), domain_error);
}

TEST(Config, EchoParsesBackToTheSameConfig) {
    auto c = parse_config_text("cmd = spectrum\nalpha = 80\neps = 0.1, 0.05\nfront = chord\nfront_x0 = 0.2\nangular_per_eps = 16\n");
    std::string s;
    for (const auto& [k, v] : config_entries(c)) s += k + " = " + v + "\n";
    const auto d = parse_config_text(s);
    EXPECT_EQ(config_entries(d), config_entries(c));
    EXPECT_EQ(d.alpha, c.alpha);
    EXPECT_EQ(d.x0(), 0.2);
    EXPECT_NEAR(RunConfig{}.x0(), 0.0, 0.0);
}

TEST(Config, SampleConfigsParse) {
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(ACROBIN_SAMPLES_DIR)) {
        if (e.path().extension() != ".cfg") continue;
        const auto c = parse_config_file(e.path().string());
        EXPECT_FALSE(c.cmd.empty()) << e.path();
        ++n;
    }
    EXPECT_GE(n, 7);
}
