// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/calibration.hpp"
#include "mdtrack/estimator.hpp"
#include "mdtrack/experiments.hpp"
#include "mdtrack/signal_model.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace mdtrack;

namespace {

ChannelTensor random_multi(std::size_t n_tx, std::size_t n_rx, std::size_t n_t, std::uint64_t seed) {
    Sampling s;
    s.n_snapshots = n_t;
    return oracle::random_tensor(ArrayGeometry::half_wavelength(n_tx, n_rx), TrainingField::ht20(n_tx), s, seed);
}

EstimateReport report_of(std::vector<PathParams> paths) {
    EstimateReport r;
    r.paths = std::move(paths);
    return r;
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("phase offsets: identity, inverse pair and errors") {
    const ChannelTensor h = random_multi(2, 3, 4, 1);
    CHECK(apply_phase_offsets(h, PhaseOffsets::zeros(2, 3)).max_abs_diff(h) == 0.0);
    PhaseOffsets po{{0.0, -1.1}, {0.0, kPi / 3, kPi}};
    const ChannelTensor hurt = apply_phase_offsets(h, po);
    CHECK(hurt.max_abs_diff(h) > 0.1);
    CHECK(apply_phase_offsets(hurt, po, true).max_abs_diff(h) < 1e-12);
    // Per-chain check against the closed form.
    CHECK(std::abs(hurt(1, 2, 5, 0) - h(1, 2, 5, 0) * std::polar(1.0, -1.1 + kPi)) < 1e-12);
    CHECK_THROWS_AS(apply_phase_offsets(h, PhaseOffsets::zeros(1, 3)), std::invalid_argument);
    CHECK_THROWS_AS((PhaseOffsets{{0.1}, {0.0}}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((PhaseOffsets{{0.0}, {0.0, -kPi}}.validate()), std::invalid_argument);
}

TEST_CASE("uncorrected rx offsets move a broadside AoA estimate") {
    const auto g = ArrayGeometry::half_wavelength(1, 4);
    const auto tf = TrainingField::ht20(1);
    const ChannelTensor h = synthesize_path(PathParams{kPi / 2, kPi / 2, 20e-9, 0.0, 1.0}, g, tf, Sampling{});
    SearchGrid grid = SearchGrid::defaults(2);
    grid.restrict(Dim::Aoa, rad(10.0), rad(170.0)).set_step(Dim::Aoa, rad(1.0));
    grid.set_step(Dim::Tof, 1e-9);
    CHECK(estimate_grid(h, tf, g, grid).aoa == doctest::Approx(kPi / 2));
    const PhaseOffsets po{{0.0}, {0.0, kPi / 3, 2 * kPi / 3, kPi}};
    CHECK(std::abs(estimate_grid(apply_phase_offsets(h, po), tf, g, grid).aoa - kPi / 2) > rad(5.0));
}

TEST_CASE("SFO/STO alignment") {
    const auto g = ArrayGeometry::half_wavelength(1, 3);
    const auto tf = TrainingField::ht20(1);
    Sampling s;
    s.n_snapshots = 6;
    const ChannelTensor clean = superpose({PathParams{rad(70.0), kPi / 2, 15e-9, 0.0, 1.0},
                                           PathParams{rad(110.0), kPi / 2, 60e-9, 0.0, std::polar(0.4, 1.0)}},
                                          g, tf, s);
    SUBCASE("identical snapshots are untouched") {
        CHECK(align_sfo_sto(clean).max_abs_diff(clean) < 1e-12);
    }
    SUBCASE("injected slopes are fitted and removed") {
        const std::vector<double> delay{0.0, 30e-9, -45e-9, 80e-9, 12e-9, -70e-9};
        const ChannelTensor hurt = inject_sfo_sto(clean, delay);
        for (std::size_t t = 1; t < 6; ++t)
            CHECK(relative_phase_slope(hurt, t) ==
                  doctest::Approx(-2.0 * kPi * s.subcarrier_spacing * delay[t]).epsilon(1e-9));
        const ChannelTensor fixed = align_sfo_sto(hurt);
        for (std::size_t t = 1; t < 6; ++t) CHECK(std::abs(relative_phase_slope(fixed, t)) < 1e-9);
        // Snapshot 0 unchanged; the common slope relative to the clean trace remains.
        for (std::size_t k = 0; k < fixed.n_sc(); ++k) CHECK(fixed(0, 1, k, 0) == hurt(0, 1, k, 0));
        CHECK(fixed.max_abs_diff(clean) < 1e-9);
    }
    SUBCASE("a constant per-snapshot phase (Doppler) survives") {
        Sampling s40;
        s40.n_snapshots = 40;
        const ChannelTensor dop = synthesize_path(PathParams{rad(80.0), kPi / 2, 25e-9, 2.0, 1.0}, g, tf, s40);
        CHECK(align_sfo_sto(dop).max_abs_diff(dop) < 1e-12);
    }
    CHECK_THROWS_AS(align_sfo_sto(synthesize_path(PathParams{}, g, tf, Sampling{})), std::invalid_argument);
    CHECK_THROWS_AS(inject_sfo_sto(clean, {0.0}), std::invalid_argument);
}

TEST_CASE("CFO removal") {
    const ChannelTensor h = random_multi(1, 2, 40, 3);
    CHECK(remove_cfo(h, CfoEstimate::with_sampling(0.0, h.sampling())).max_abs_diff(h) == 0.0);
    CHECK(remove_cfo(inject_cfo(h, 300.0), CfoEstimate::with_sampling(300.0, h.sampling())).max_abs_diff(h) < 1e-10);
    CHECK(CfoEstimate::with_sampling(300.0, h.sampling()).residual_bound == doctest::Approx(20.0));

    // 300.4 Hz injected, 300 Hz removed: the estimator sees the 0.4 Hz residual.
    const auto g = ArrayGeometry::half_wavelength(1, 4);
    const auto tf = TrainingField::ht20(1);
    Sampling s;
    s.n_snapshots = 40;
    const ChannelTensor path = synthesize_path(PathParams{rad(90.0), kPi / 2, 10e-9, 0.0, 1.0}, g, tf, s);
    const ChannelTensor residual = remove_cfo(inject_cfo(path, 300.4), CfoEstimate::with_sampling(300.0, s));
    SearchGrid grid = SearchGrid::defaults(3);
    grid.restrict(Dim::Aoa, rad(60.0), rad(120.0)).set_step(Dim::Aoa, rad(2.0));
    grid.restrict(Dim::Tof, 0.0, 40e-9).set_step(Dim::Tof, 1e-9);
    grid.restrict(Dim::Doppler, -5.0, 5.0);
    CHECK(estimate_grid(residual, tf, g, grid).doppler == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("cyclic delay inject/remove pair") {
    const ChannelTensor h = random_multi(3, 2, 2, 5);
    const std::vector<double> csd{0.0, -200e-9, -400e-9};
    CHECK(remove_cyclic_delay(inject_cyclic_delay(h, csd), csd).max_abs_diff(h) < 1e-10);
}

TEST_CASE("impairment bundle is undone by the matching profile") {
    const auto g = ArrayGeometry::half_wavelength(2, 3);
    const auto tf = TrainingField::ht20(2);
    Sampling s;
    s.n_snapshots = 10;
    const ChannelTensor clean = synthesize_path(PathParams{rad(75.0), rad(100.0), 30e-9, 1.5, 1.0}, g, tf, s);
    Impairments imp;
    imp.offsets = {{0.0, 0.7}, {0.0, -1.0, 2.0}};
    imp.csd = {0.0, -200e-9};
    imp.cfo = 250.0;
    const ChannelTensor hurt = inject_impairments(clean, imp, 1);
    CalibrationProfile prof;
    prof.offsets = imp.offsets;
    prof.csd = imp.csd;
    prof.coarse_cfo = 250.0;
    prof.align = false;
    CHECK(calibrate_tensor(hurt, prof).max_abs_diff(clean) < 1e-10);

    std::vector<double> d1, d2;
    imp.sfo_sto_max = 50e-9;
    imp.common_delay = 20e-9;
    const ChannelTensor a = inject_impairments(clean, imp, 7, &d1);
    const ChannelTensor b = inject_impairments(clean, imp, 7, &d2);
    CHECK(d1 == d2);
    CHECK(a.max_abs_diff(b) == 0.0);
    for (double v : d1) {
        CHECK(v >= 20e-9);
        CHECK(v <= 70e-9);
    }
}

TEST_CASE("calibration commutes with complex scaling") {
    const ChannelTensor h = random_multi(2, 2, 5, 6);
    const cd c = std::polar(2.5, 0.9);
    ChannelTensor hc = h;
    hc *= c;
    CalibrationProfile prof;
    prof.offsets = {{0.0, 0.4}, {0.0, 1.2}};
    prof.csd = {0.0, -200e-9};
    prof.coarse_cfo = 100.0;
    ChannelTensor lhs = calibrate_tensor(h, prof);
    lhs *= c;
    CHECK(calibrate_tensor(hc, prof).max_abs_diff(lhs) < 1e-10);
}

TEST_CASE("direct-path selection") {
    std::vector<PathParams> p(3);
    p[0].tof = 10e-9;
    p[0].atten = 0.5;
    p[1].tof = 10.8e-9;
    p[1].atten = 0.9;
    p[2].tof = 30e-9;
    p[2].atten = 2.0;
    CHECK(select_direct_path(p) == 1);
    p[1].tof = 11.5e-9;
    CHECK(select_direct_path(p) == 0);
    CHECK_THROWS_AS(select_direct_path({}), std::invalid_argument);
}

TEST_CASE("relative ToF anchoring") {
    SUBCASE("single path 13 ns late") {
        const EstimateReport r = report_of({PathParams{1.0, 1.0, 33e-9, 0.0, 1.0}});
        CHECK(anchor_relative_tof(r, 20e-9).paths[0].tof == doctest::Approx(20e-9).epsilon(1e-12));
    }
    SUBCASE("pairwise differences are preserved") {
        const EstimateReport r = report_of({PathParams{1.0, 1.0, 40e-9, 0.0, 1.0}, PathParams{1.0, 1.0, 55e-9, 0.0, 0.5},
                                            PathParams{1.0, 1.0, 90e-9, 0.0, 0.3}});
        const EstimateReport a = anchor_relative_tof(r, 5e-9);
        CHECK(a.paths[0].tof == doctest::Approx(5e-9));
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                CHECK(a.paths[i].tof - a.paths[j].tof ==
                      doctest::Approx(r.paths[i].tof - r.paths[j].tof).epsilon(1e-12));
    }
    SUBCASE("two-cable scene with a common offset") {
        const EstimateReport r =
            report_of({PathParams{1.0, 1.0, 9.2e-9 + 37e-9, 0.0, 1.0}, PathParams{1.0, 1.0, 27.4e-9 + 37e-9, 0.0, 0.6}});
        const EstimateReport a = anchor_relative_tof(r, 9.2e-9);
        CHECK(a.paths[0].tof == doctest::Approx(9.2e-9));
        CHECK(std::abs((a.paths[1].tof - a.paths[0].tof) - 18.2e-9) < 0.5e-9);
    }
    CHECK_THROWS_AS(anchor_relative_tof(EstimateReport{}, 1e-9), std::invalid_argument);
}

TEST_CASE("direct-path Doppler subtraction") {
    EstimateReport r = report_of({PathParams{1.0, 1.0, 10e-9, 0.7, 1.0}, PathParams{1.0, 1.0, 30e-9, 0.7, 0.4}});
    for (const auto& p : subtract_direct_doppler(r).paths) CHECK(p.doppler == doctest::Approx(0.0));
    r.paths.push_back(PathParams{1.0, 1.0, 50e-9, 3.7, 0.3});
    const EstimateReport s = subtract_direct_doppler(r);
    CHECK(s.paths[0].doppler == 0.0);
    CHECK(s.paths[1].doppler == doctest::Approx(0.0));
    CHECK(s.paths[2].doppler == doctest::Approx(3.0));
    CHECK_THROWS_AS(subtract_direct_doppler(EstimateReport{}), std::invalid_argument);
}

TEST_CASE("residual CFO plus hand Doppler, end to end") {
    Scenario sc = Scenario::make(1, 8, 40);
    sc.paths = {PathParams{rad(90.0), kPi / 2, 10e-9, 0.0, 1.0}, PathParams{rad(60.0), kPi / 2, 45e-9, 0.0, 0.5},
                PathParams{rad(125.0), kPi / 2, 80e-9, 2.0, 0.4}};
    sc.snr_db = 25.0;
    // Every path picks up the same residual CFO of 0.5 Hz.
    const ChannelTensor y = inject_cfo(sc.synthesize(11), 0.5);
    SearchGrid grid = SearchGrid::defaults(3);
    grid.restrict(Dim::Aoa, rad(20.0), rad(160.0)).set_step(Dim::Aoa, rad(1.0));
    grid.restrict(Dim::Tof, 0.0, 120e-9);
    grid.restrict(Dim::Doppler, -5.0, 5.0);
    ResolverConfig cfg;
    cfg.coarse_factor = {4, 1, 4, 5};
    const Resolver r(sc.geom, sc.tf, sc.sampling, grid, cfg);
    const EstimateReport rep = calibrate_report(r.resolve(y), CalibrationProfile{});
    REQUIRE(rep.paths.size() == 3);
    const auto mobile = std::max_element(rep.paths.begin(), rep.paths.end(), [](const auto& a, const auto& b) {
        return std::abs(a.doppler) < std::abs(b.doppler);
    });
    CHECK(mobile->doppler == doctest::Approx(2.0).epsilon(0.05));
    for (const auto& p : rep.paths)
        if (&p != &*mobile) CHECK(std::abs(p.doppler) <= 0.1 + 1e-9);
}

}  // TEST_SUITE
