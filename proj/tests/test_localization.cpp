// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/localization.hpp"

#include <doctest.h>

#include <random>

using namespace mdtrack;

namespace {

Deployment link() {
    Deployment d;
    d.tx = {0.0, 0.0};
    d.rx = {4.0, 0.0};
    return d;
}

double range_sum(const Point2& p, const Deployment& d) {
    return std::hypot(p.x - d.tx.x, p.y - d.tx.y) + std::hypot(p.x - d.rx.x, p.y - d.rx.y);
}

}  // namespace

TEST_SUITE("localization") {

TEST_CASE("reflector at (2, 2) above a 4 m baseline") {
    const Deployment d = link();
    PathParams p;
    p.tof = 2.0 * std::sqrt(8.0) / kSpeedOfLight;
    p.aoa = rad(135.0);
    CHECK(p.tof * 1e9 == doctest::Approx(18.87).epsilon(1e-3));
    const TargetFix f = locate_reflector(p, d);
    CHECK(std::abs(f.position.x - 2.0) < 1e-9);
    CHECK(std::abs(f.position.y - 2.0) < 1e-9);

    const PathParams fwd = forward_path({2.0, 2.0}, d);
    CHECK(fwd.aoa == doctest::Approx(rad(135.0)).epsilon(1e-12));
    CHECK(fwd.tof == doctest::Approx(p.tof).epsilon(1e-12));
}

TEST_CASE("perpendicular bisector target is equidistant from both foci") {
    const Deployment d = link();
    const PathParams p = forward_path({2.0, 3.5}, d);
    const TargetFix f = locate_reflector(p, d);
    CHECK(f.position.x == doctest::Approx(2.0));
    const double rt = std::hypot(f.position.x - d.tx.x, f.position.y - d.tx.y);
    const double rr = std::hypot(f.position.x - d.rx.x, f.position.y - d.rx.y);
    CHECK(rt == doctest::Approx(rr).epsilon(1e-12));
}

TEST_CASE("degenerate and invalid inputs") {
    const Deployment d = link();
    PathParams p;
    p.aoa = rad(120.0);
    p.tof = d.baseline() / d.speed;
    CHECK_THROWS_AS(locate_reflector(p, d), std::domain_error);
    p.tof = 1e-9;
    CHECK_THROWS_AS(locate_reflector(p, d), std::domain_error);
    p.tof = 30e-9;
    p.aoa = 0.0;
    CHECK_THROWS_AS(locate_reflector(p, d), std::domain_error);
    Deployment same = d;
    same.rx = same.tx;
    CHECK_THROWS_AS(same.validate(), std::invalid_argument);
    Deployment skew = d;
    skew.rx_axis = {1.0, 1.0};
    CHECK_THROWS_AS(skew.validate(), std::invalid_argument);
    CHECK_THROWS_AS(forward_path({2.0, -2.0}, d), std::domain_error);
}

TEST_CASE("random round trips satisfy the ellipse and the ray") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(-8.0, 12.0), uy(0.05, 10.0);
    for (int side : {1, -1}) {
        Deployment d = link();
        d.rx_axis = {std::cos(0.3), std::sin(0.3)};
        d.side = side;
        int done = 0;
        while (done < 500) {
            const Point2 target{ux(rng), side * uy(rng)};
            PathParams p;
            try {
                p = forward_path(target, d);
            } catch (const std::domain_error&) {
                continue;  // other half-plane of the tilted axis
            }
            if (!(d.speed * p.tof > d.baseline() * (1.0 + 1e-9))) continue;
            const TargetFix f = locate_reflector(p, d);
            REQUIRE(std::hypot(f.position.x - target.x, f.position.y - target.y) < 1e-6);
            CHECK(std::abs(range_sum(f.position, d) - d.speed * p.tof) < 1e-3);
            ++done;
        }
    }
}

TEST_CASE("mobility classification") {
    EstimateReport r;
    for (double dop : {0.0, 0.1, 3.2}) r.paths.push_back(PathParams{1.0, 1.0, 1e-8, dop, 1.0});
    CHECK(classify_mobility(r, 0.5) == std::vector<Mobility>{Mobility::Static, Mobility::Static, Mobility::Mobile});
    for (auto& p : r.paths) p.doppler = 0.0;
    for (auto m : classify_mobility(r)) CHECK(m == Mobility::Static);

    // Three static reflections and four moving hands.
    const Deployment d = link();
    EstimateReport scene;
    scene.paths.push_back(PathParams{rad(180.0 - 1e-9), kPi / 2, d.direct_tof(), 0.0, 1.0});
    const std::vector<std::pair<Point2, double>> objects{{{1.0, 3.0}, 0.0},  {{5.0, 2.0}, 0.0}, {{3.0, 6.0}, 0.0},
                                                         {{2.0, 1.5}, 2.0},  {{0.5, 2.5}, -3.5}, {{6.0, 3.0}, 1.2},
                                                         {{3.5, 4.0}, -0.9}};
    for (const auto& [pos, dop] : objects) {
        PathParams p = forward_path(pos, d);
        p.doppler = dop;
        p.atten = 0.3;
        scene.paths.push_back(p);
    }
    const auto flags = classify_mobility(scene);
    CHECK(std::count(flags.begin(), flags.end(), Mobility::Mobile) == 4);
    // Order does not matter.
    std::reverse(scene.paths.begin(), scene.paths.end());
    const auto rev = classify_mobility(scene);
    CHECK(std::count(rev.begin(), rev.end(), Mobility::Mobile) == 4);
}

TEST_CASE("locate_all") {
    const Deployment d = link();
    EstimateReport only_direct;
    only_direct.paths.push_back(PathParams{rad(179.0), kPi / 2, d.direct_tof(), 0.0, 1.0});
    const LocateResult none = locate_all(only_direct, d);
    CHECK(none.fixes.empty());
    CHECK(none.rejected.empty());

    EstimateReport two = only_direct;
    for (const Point2 t : {Point2{0.5, 3.0}, Point2{3.5, 3.0}}) {
        PathParams p = forward_path(t, d);
        p.atten = 0.4;
        p.doppler = 1.5;
        two.paths.push_back(p);
    }
    PathParams short_path;
    short_path.aoa = rad(100.0);
    // Within the direct-path window but weaker, and shorter than the baseline.
    short_path.tof = d.direct_tof() - 0.4e-9;
    short_path.atten = 0.2;
    two.paths.push_back(short_path);

    const LocateResult res = locate_all(two, d);
    CHECK(res.direct == 0);
    REQUIRE(res.fixes.size() == 2);
    CHECK(res.fixes[0].position.x == doctest::Approx(0.5));
    CHECK(res.fixes[0].position.y == doctest::Approx(3.0));
    CHECK(res.fixes[1].position.x == doctest::Approx(3.5));
    CHECK(res.fixes[0].mobility == Mobility::Mobile);
    REQUIRE(res.rejected.size() == 1);
    CHECK(res.rejected[0].index == 3);
    CHECK(res.rejected[0].reason.find("degenerate ellipse") != std::string::npos);
}

}  // TEST_SUITE
