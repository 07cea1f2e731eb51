#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <boost/math/special_functions/ellint_2.hpp>
#include <gtest/gtest.h>

#include "acrobin/geometry.hpp"

using namespace acrobin;

namespace {

auto disk() { return std::make_shared<SmoothDomain>(SmoothDomain::unit_disk()); }

// Arc of the circle |x - (2, 0)| = 1.8 inside the unit disk, oriented upward,
// so n points toward (2, 0).
FrontCurve circular_arc(int N) {
    const double c = 2.0, rho = 1.8;
    const double x = (1.0 + c * c - rho * rho) / (2.0 * c), y = std::sqrt(1.0 - x * x);
    const double delta = std::numbers::pi - std::atan2(y, x - c);
    FrontCurve f;
    f.domain = disk();
    for (int k = 0; k <= N; ++k) {
        const double th = std::numbers::pi + delta - 2.0 * delta * k / N;
        f.nodes.push_back({c + rho * std::cos(th), rho * std::sin(th)});
    }
    f.nodes.front() = {x, -y};
    f.nodes.back() = {x, y};
    return f;
}

}  // namespace

TEST(SmoothDomain, UnitCircle) {
    const auto d = SmoothDomain::unit_disk();
    for (int k = 0; k < 50; ++k) {
        const double t = 0.1257 * k;
        EXPECT_NEAR(d.curvature(t), 1.0, 1e-15);
        EXPECT_NEAR(norm(d.normal(t)), 1.0, 1e-15);
        EXPECT_TRUE(d.inside(d.point(t) - 1e-6 * d.normal(t)));
        EXPECT_FALSE(d.inside(d.point(t) + 1e-6 * d.normal(t)));
    }
    EXPECT_NEAR(d.perimeter(), 2.0 * std::numbers::pi, 1e-14);
    EXPECT_NEAR(d.arclength(3.0, 0.5), 2.0 * std::numbers::pi - 2.5, 1e-14);
}

TEST(SmoothDomain, Ellipse) {
    const auto d = SmoothDomain::ellipse(2.0, 1.0);
    const double e = std::sqrt(1.0 - 0.25);
    EXPECT_NEAR(d.perimeter(), 4.0 * 2.0 * boost::math::ellint_2(e), 1e-10);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi), rad(0.5, 1.5);
    for (int k = 0; k < 40; ++k) {
        const double t = ang(rng);
        EXPECT_NEAR(norm(d.normal(t)), 1.0, 1e-14);
        EXPECT_TRUE(d.inside(d.point(t) - 1e-6 * d.normal(t)));
        // projection: the offset is normal to the boundary
        const Vec2 x = d.point(t) + (rad(rng) - 1.0) * 0.3 * d.normal(t);
        const double tp = d.project(x);
        EXPECT_NEAR(std::abs(cross(x - d.point(tp), d.normal(tp))), 0.0, 1e-12);
        EXPECT_NEAR(norm(d.point(tp) - d.point(t)), 0.0, 1e-9);
    }
    EXPECT_NEAR(d.curvature(0.0), 2.0, 1e-14);  // a / b^2
}

TEST(ProjectToCurve, PointOnCurve) {
    const auto c = circular_arc(200);
    const double L = c.length();
    double acc = 0.0;
    for (std::size_t k = 0; k < c.nodes.size(); ++k) {
        if (k > 0) acc += norm(c.nodes[k] - c.nodes[k - 1]);
        const auto q = project_to_curve(c, c.nodes[k]);
        EXPECT_NEAR(q.r, 0.0, 1e-14);
        EXPECT_NEAR(q.s, detail::arc_to_s(acc, L), 1e-12);
    }
}

TEST(ProjectToCurve, VerticalDiameter) {
    const auto c = segment_front({0.0, -1.0}, {0.0, 1.0}, 100, std::numbers::pi / 2, disk());
    const auto q = project_to_curve(c, {0.3, 0.1});
    EXPECT_NEAR(std::abs(q.r), 0.3, 1e-15);
    EXPECT_NEAR(q.r, 0.3, 1e-15);  // n = (1, 0)
    EXPECT_NEAR(q.foot.x, 0.0, 1e-15);
    EXPECT_NEAR(q.foot.y, 0.1, 1e-15);
    EXPECT_NEAR(q.s, 0.1, 1e-15);  // length 2: s is arclength from the centre
    EXPECT_FALSE(q.tie);
    EXPECT_TRUE(q.in_tube);
    EXPECT_FALSE(project_to_curve(c, {0.9, 0.1}).in_tube);
}

TEST(ProjectToCurve, ParameterHasUnitSpeedNearEnds) {
    const auto c = vertical_chord(0.5, 200, std::numbers::pi / 3);
    const double y0 = std::sqrt(0.75);
    const auto top = project_to_curve(c, {0.45, y0 - 0.2});
    EXPECT_NEAR(top.s, 1.0 - 0.2, 1e-12);
    const auto past = project_to_curve(c, {0.5, y0 + 0.05});
    EXPECT_NEAR(past.s, 1.05, 1e-12);
    EXPECT_NEAR(past.r, 0.0, 1e-15);
}

TEST(ProjectToCurve, ReconstructionAndGradients) {
    const auto c = circular_arc(400);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> px(-0.6, 0.9), py(-0.8, 0.8);
    const double fd = 1e-4;
    int tested = 0;
    while (tested < 100) {
        const Vec2 x{px(rng), py(rng)};
        const auto q = project_to_curve(c, x);
        if (std::abs(q.r) > 0.2 || std::abs(q.s) > 0.9) continue;
        ++tested;
        const Vec2 back = q.foot + q.r * q.normal;
        EXPECT_NEAR(norm(back - x), 0.0, 1e-12);
        auto at = [&](double dx, double dy) { return project_to_curve(c, {x.x + dx, x.y + dy}); };
        const auto xp = at(fd, 0), xm = at(-fd, 0), yp = at(0, fd), ym = at(0, -fd);
        const Vec2 gr{(xp.r - xm.r) / (2 * fd), (yp.r - ym.r) / (2 * fd)};
        const Vec2 gs{(xp.s - xm.s) / (2 * fd), (yp.s - ym.s) / (2 * fd)};
        EXPECT_NEAR(norm(gr), 1.0, 5e-3);
        EXPECT_LE(std::abs(dot(gr, gs)), 5e-3);
    }
}

TEST(ProjectToCurve, SignFollowsRotatedTangent) {
    const auto c = circular_arc(200);
    // n points toward the arc centre (2, 0)
    EXPECT_GT(project_to_curve(c, {0.4, 0.0}).r, 0.0);
    EXPECT_LT(project_to_curve(c, {0.0, 0.0}).r, 0.0);
}

TEST(ProjectToCurve, EquidistantFeetPickSmallestS) {
    FrontCurve u;
    u.domain = disk();
    for (int k = 0; k <= 20; ++k) u.nodes.push_back({-1.0, 1.0 - 0.1 * k});
    for (int k = 1; k <= 20; ++k) u.nodes.push_back({-1.0 + 0.1 * k, -1.0});
    for (int k = 1; k <= 20; ++k) u.nodes.push_back({1.0, -1.0 + 0.1 * k});
    const auto q = project_to_curve(u, {0.0, 0.5}, 2.0);
    EXPECT_TRUE(q.tie);
    EXPECT_NEAR(q.foot.x, -1.0, 1e-12);
    EXPECT_NEAR(q.foot.y, 0.5, 1e-12);
    EXPECT_NEAR(q.r, -1.0, 1e-12);
}

TEST(ProjectToCurve, TooFewNodes) {
    FrontCurve c;
    c.nodes = {{0, 0}, {1, 0}};
    EXPECT_THROW(project_to_curve(c, {0.5, 0.5}), topology_error);
}

TEST(TrapezeCoords, Examples) {
    const auto [zp, zm] = trapeze_coords(0.0, 1.0, 1.1);
    EXPECT_EQ(zp, 0.0);
    EXPECT_NEAR(zm, 2.0 * std::sin(1.1), 1e-15);
    for (double r : {-0.3, 0.0, 0.2}) {
        const auto [a, b] = trapeze_coords(r, 0.4, std::numbers::pi / 2);
        EXPECT_NEAR(a, 0.6, 1e-15);
        EXPECT_NEAR(b, 1.4, 1e-15);
    }
    const auto [p3, m3] = trapeze_coords(0.1, 0.8, std::numbers::pi / 3);
    EXPECT_NEAR(p3, -0.05 + 0.2 * std::sqrt(3.0) / 2.0, 1e-15);
    EXPECT_NEAR(p3, 0.12321, 1e-5);
    (void)m3;
}

// For a front meeting the circle at angle alpha, z^+ >= 0 near the upper contact
// point and z^- >= 0 near the lower one, everywhere inside the disk.
TEST(TrapezeCoords, NonNegativeInsideNearContactPoints) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> off(-0.15, 0.15);
    for (double alpha : {80.0 * std::numbers::pi / 180.0, std::numbers::pi / 2, 2.0 * std::numbers::pi / 3}) {
        const auto c = vertical_chord(std::cos(alpha), 200, alpha);
        for (int end : {0, 1}) {
            const Vec2 p = end == 0 ? c.nodes.front() : c.nodes.back();
            for (int k = 0; k < 200; ++k) {
                const Vec2 x{p.x + off(rng), p.y + off(rng)};
                if (!c.domain->inside(x)) continue;
                const auto q = project_to_curve(c, x);
                const auto [zp, zm] = trapeze_coords(q.r, q.s, alpha);
                EXPECT_EQ(q.z_plus, zp);
                EXPECT_EQ(q.z_minus, zm);
                EXPECT_GE(end == 1 ? q.z_plus : q.z_minus, -1e-12) << alpha << " " << end;
            }
        }
    }
}

TEST(Resample, UniformPolylineUnchanged) {
    const auto c = segment_front({0.0, -1.0}, {0.0, 1.0}, 50, 1.0, disk());
    const auto r = resample_arclength(c.nodes, 50);
    for (std::size_t k = 0; k < r.size(); ++k) EXPECT_NEAR(norm(r[k] - c.nodes[k]), 0.0, 1e-12);
}

TEST(Resample, GeometricSpacingBecomesEqual) {
    Polyline p;
    double x = 0.0, h = 0.01;
    for (int k = 0; k < 30; ++k) {
        p.push_back({x, 0.5 * x});
        x += h;
        h *= 1.15;
    }
    const auto r = resample_arclength(p, 40);
    EXPECT_EQ(r.front(), p.front());
    EXPECT_EQ(r.back(), p.back());
    const double target = norm(r.back() - r.front()) / 40.0;
    for (std::size_t k = 1; k < r.size(); ++k) EXPECT_NEAR(norm(r[k] - r[k - 1]), target, 1e-10);
}

TEST(Resample, SemicircleLength) {
    Polyline p;
    const int n = 100;
    for (int k = 0; k <= n; ++k) {
        const double t = std::numbers::pi * k / n;
        p.push_back({std::cos(t), std::sin(t)});
    }
    const auto r = resample_arclength(p, 100);
    double L = 0.0;
    for (std::size_t k = 1; k < r.size(); ++k) L += norm(r[k] - r[k - 1]);
    const double chordal = 2.0 * n * std::sin(std::numbers::pi / (2.0 * n));
    EXPECT_NEAR(L, chordal, 1e-6);
    EXPECT_NEAR(L, std::numbers::pi, 2e-4);
}

TEST(Resample, DisplacementBoundedBySpacing) {
    auto c = circular_arc(80);
    // uneven input: drop every third node
    Polyline uneven;
    for (std::size_t k = 0; k < c.nodes.size(); ++k)
        if (k % 3 != 1 || k + 1 == c.nodes.size()) uneven.push_back(c.nodes[k]);
    const auto r = resample_arclength(uneven, static_cast<int>(uneven.size()) - 1);
    FrontCurve rc;
    rc.nodes = r;
    const double spacing = rc.length() / static_cast<double>(r.size() - 1);
    for (std::size_t k = 0; k < r.size(); ++k) EXPECT_LE(norm(r[k] - uneven[k]), spacing);
}

TEST(Resample, SelfIntersectionRejected) {
    const Polyline eight{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
    EXPECT_TRUE(self_intersects(eight));
    EXPECT_THROW(resample_arclength(eight, 10), topology_error);
    EXPECT_FALSE(self_intersects(circular_arc(50).nodes));
}

TEST(Resample, SelfIntersectionMatchesAllPairs) {
    auto brute = [](const Polyline& p) {
        for (std::size_t i = 0; i + 1 < p.size(); ++i)
            for (std::size_t j = i + 2; j + 1 < p.size(); ++j)
                if (segments_intersect(p[i], p[i + 1], p[j], p[j + 1])) return true;
        return false;
    };
    std::mt19937_64 rng(11);
    std::normal_distribution<double> step(0.0, 1.0);
    int hits = 0;
    for (int trial = 0; trial < 200; ++trial) {
        // random walks with a drift: short ones rarely cross, long ones often do
        Polyline p{{0, 0}};
        const int n = 4 + trial % 40;
        for (int k = 0; k < n; ++k) p.push_back(p.back() + Vec2{0.3 + step(rng), step(rng)});
        const bool b = brute(p);
        hits += b;
        ASSERT_EQ(self_intersects(p), b) << trial;
    }
    EXPECT_GT(hits, 20);
    EXPECT_LT(hits, 180);
}
