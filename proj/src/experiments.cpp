// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/experiments.hpp"

#include "mdtrack/signal_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdtrack {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool uses_doppler(Method m) { return m == Method::MdTrack3d || m == Method::MdTrack4d; }

// Search windows wide enough for the largest separation in the spec.
double aoa_hi_deg(const ResolvabilitySpec& spec) {
    double f = 0.0;
    for (double v : spec.aoa_fracs) f = std::max(f, v);
    return std::min(175.0, std::max(120.0, 86.0 + f * deg(basic_angle(spec.n_rx))));
}

double tof_hi(const ResolvabilitySpec& spec) {
    double f = 0.0;
    for (double v : spec.tof_fracs) f = std::max(f, v);
    return std::max(100e-9, 31e-9 + f * kBasicTof);
}

SearchGrid resolvability_grid(Method m, const ResolvabilitySpec& spec) {
    SearchGrid g = SearchGrid::defaults(m == Method::MdTrack4d ? 4 : uses_doppler(m) ? 3 : 2);
    g.restrict(Dim::Aoa, rad(50.0), rad(aoa_hi_deg(spec))).set_step(Dim::Aoa, rad(0.5));
    g.restrict(Dim::Tof, 0.0, tof_hi(spec));
    g.restrict(Dim::Doppler, -3.0, 3.0);
    g.restrict(Dim::Aod, rad(30.0), rad(150.0)).set_step(Dim::Aod, rad(1.0));
    return g;
}

ResolverConfig resolvability_config(Method m) {
    ResolverConfig cfg;
    if (m == Method::JointGrid2d) return cfg;  // exhaustive grid, SIC only
    cfg.coarse_factor = {4, 4, 4, 5};
    cfg.interleave = true;
    return cfg;
}

std::vector<PathParams> music_estimates(const ChannelTensor& y, const ArrayGeometry& geom, Dim dim,
                                        const ResolvabilitySpec& spec) {
    Axis axis;
    MusicConfig cfg;
    cfg.n_sources = 2;
    if (dim == Dim::Tof) {
        axis = {0.0, tof_hi(spec), 0.5e-9, true, 0.0};
        cfg.smoothing = spec.music_tof_window;
    } else {
        axis = {rad(40.0), rad(std::max(140.0, aoa_hi_deg(spec))), rad(0.25), true, kPi / 2};
    }
    const MusicSpectrum s = music_1d(y, geom, dim, axis, cfg);
    std::vector<PathParams> out;
    for (double v : s.peak_values(2)) {
        PathParams p;
        if (dim == Dim::Tof)
            p.tof = v;
        else
            p.aoa = v;
        out.push_back(p);
    }
    return out;
}

}  // namespace

double basic_angle(std::size_t elements) {
    return rad(kBasicAngleDeg) * 8.0 / static_cast<double>(std::max<std::size_t>(elements, 1));
}

Scenario Scenario::make(std::size_t n_tx, std::size_t n_rx, std::size_t n_t, bool ht40) {
    Scenario s;
    s.geom = ArrayGeometry::half_wavelength(n_tx, n_rx);
    s.tf = ht40 ? TrainingField::ht40(n_tx) : TrainingField::ht20(n_tx);
    s.sampling.n_snapshots = n_t;
    return s;
}

ChannelTensor Scenario::clean() const { return superpose(paths, geom, tf, sampling); }

double Scenario::noise_power() const {
    if (!snr_db) return 0.0;
    return clean().mean_power() / std::pow(10.0, *snr_db / 10.0);
}

ChannelTensor Scenario::synthesize(std::uint64_t seed) const {
    ChannelTensor y = clean();
    if (snr_db) add_noise(y, {y.mean_power() / std::pow(10.0, *snr_db / 10.0), seed});
    return y;
}

Scenario fig4_scenario() {
    Scenario s = Scenario::make(1, 5, 1);
    PathParams strong, weak;
    strong.aoa = rad(60.7);
    strong.tof = 20.8e-9;
    strong.atten = 1.0;
    weak.aoa = rad(73.4);
    weak.tof = 28.1e-9;
    weak.atten = std::pow(10.0, -10.0 / 20.0);
    s.paths = {strong, weak};
    return s;
}

SearchGrid fig4_grid() {
    SearchGrid g = SearchGrid::defaults(2);
    g.restrict(Dim::Aoa, rad(20.0), rad(160.0)).set_step(Dim::Aoa, rad(0.1));
    g.restrict(Dim::Tof, 0.0, 100e-9).set_step(Dim::Tof, 0.1e-9);
    return g;
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c),    static_cast<std::uint32_t>(c >> 32)};
    return std::mt19937_64(seq);
}

std::vector<PathParams> random_paths(std::mt19937_64& rng, const RandomPathSpec& spec) {
    const double ba = basic_angle(spec.n_rx), bd = basic_angle(spec.n_tx);
    auto distance = [&](const PathParams& p, const PathParams& q) {
        double s = std::pow((p.tof - q.tof) / kBasicTof, 2) + std::pow((p.aoa - q.aoa) / ba, 2);
        if (spec.dims >= 3) s += std::pow((p.doppler - q.doppler) / kBasicDoppler, 2);
        if (spec.dims >= 4) s += std::pow((p.aod - q.aod) / bd, 2);
        return std::sqrt(s);
    };

    std::vector<PathParams> out;
    for (std::size_t attempts = 0; out.size() < spec.count; ++attempts) {
        if (attempts > 100000) throw std::runtime_error("random paths: separation constraint cannot be met");
        PathParams p;
        p.aoa = rad(uniform(rng, spec.aoa_lo, spec.aoa_hi));
        p.aod = rad(uniform(rng, spec.aoa_lo, spec.aoa_hi));
        p.tof = uniform(rng, spec.tof_lo, spec.tof_hi);
        p.doppler = uniform(rng, spec.doppler_lo, spec.doppler_hi);
        const double amp = std::pow(10.0, uniform(rng, spec.power_db_lo, spec.power_db_hi) / 20.0);
        p.atten = std::polar(amp, uniform(rng, 0.0, 2.0 * kPi));
        if (spec.dims < 4) p.aod = kPi / 2;
        if (spec.dims < 3) p.doppler = 0.0;
        if (spec.dims < 2) p.aoa = kPi / 2;
        if (std::all_of(out.begin(), out.end(), [&](const PathParams& q) { return distance(p, q) >= spec.min_separation; }))
            out.push_back(p);
    }
    return out;
}

double ConvergenceStats::fraction_within(std::size_t k) const {
    if (iterations.empty()) return 0.0;
    const auto n = std::count_if(iterations.begin(), iterations.end(), [&](std::size_t it) { return it <= k; });
    return static_cast<double>(n) / static_cast<double>(iterations.size());
}

std::vector<std::size_t> ConvergenceStats::histogram() const {
    std::vector<std::size_t> h;
    for (std::size_t it : iterations) {
        if (it == std::numeric_limits<std::size_t>::max()) continue;
        if (it >= h.size()) h.resize(it + 1, 0);
        ++h[it];
    }
    return h;
}

SearchGrid ensemble_grid(int dims) { return SearchGrid::defaults(dims); }

ResolverConfig ensemble_config(int) {
    ResolverConfig cfg;
    cfg.coarse_factor = {4, 4, 4, 5};
    return cfg;
}

ConvergenceStats run_convergence(const ConvergenceSpec& spec) {
    if (spec.trials < 1) throw std::invalid_argument("convergence: trials must be >= 1");
    RandomPathSpec ps;
    ps.count = spec.n_paths;
    ps.dims = spec.dims;
    ps.n_rx = spec.n_rx;
    ps.n_tx = spec.dims >= 4 ? 2 : 1;

    Scenario sc = Scenario::make(ps.n_tx, spec.n_rx, spec.dims >= 3 ? spec.n_t : 1);
    sc.snr_db = spec.snr_db;
    const Resolver resolver(sc.geom, sc.tf, sc.sampling, ensemble_grid(spec.dims), ensemble_config(spec.dims));

    const std::size_t n = spec.trials;
    ConvergenceStats st;
    st.iterations.assign(n, 0);
    st.recovered.assign(n, 0);
    std::vector<double> sic_t(n, 0.0), refine_t(n, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t trial = 0; trial < n; ++trial) {
        Scenario local = sc;
        auto rng = trial_rng(spec.seed, spec.n_paths, trial);
        local.paths = random_paths(rng, ps);
        const ChannelTensor y = local.synthesize(rng());

        auto t0 = Clock::now();
        const EstimateReport init = resolver.sic_initialize(y);
        sic_t[trial] = seconds_since(t0);
        t0 = Clock::now();
        const EstimateReport rep = resolver.refine(y, init);
        refine_t[trial] = seconds_since(t0);

        st.iterations[trial] = rep.converged ? rep.iterations_used : std::numeric_limits<std::size_t>::max();
        st.recovered[trial] = rep.paths.size();
    }
    for (std::size_t trial = 0; trial < n; ++trial) {
        st.sic_seconds += sic_t[trial];
        st.refine_seconds += refine_t[trial];
        if (st.iterations[trial] == std::numeric_limits<std::size_t>::max()) ++st.not_converged;
    }
    return st;
}

std::string to_string(Method m) {
    switch (m) {
        case Method::MusicTof: return "music-tof";
        case Method::MusicAoa: return "music-aoa";
        case Method::Music1d: return "music-1d";
        case Method::MdTrack2d: return "mdtrack-2d";
        case Method::MdTrack3d: return "mdtrack-3d";
        case Method::MdTrack4d: return "mdtrack-4d";
        case Method::JointGrid2d: return "joint-grid-2d";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    for (Method m : {Method::MusicTof, Method::MusicAoa, Method::Music1d, Method::MdTrack2d, Method::MdTrack3d,
                     Method::MdTrack4d, Method::JointGrid2d})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown method '" + s + "'");
}

ResolvabilitySpec ResolvabilitySpec::standard() {
    ResolvabilitySpec s;
    for (int n = 1; n <= 10; ++n) {
        s.aoa_fracs.push_back(0.1 * n);
        s.tof_fracs.push_back(0.1 * n);
    }
    return s;
}

double ResolvabilityResult::threshold(double level) const {
    const std::size_t n = std::min(aoa_fracs.size(), tof_fracs.size());
    for (std::size_t i = 0; i < n; ++i)
        if (at(i, i) >= level) return aoa_fracs[i];
    return std::numeric_limits<double>::infinity();
}

TwoPathTrial make_two_path_trial(const ResolvabilitySpec& spec, Method method, double aoa_frac, double tof_frac,
                                 std::mt19937_64& rng) {
    // Every variate is drawn regardless of method so all methods see the same scene.
    const double aoa_jit = uniform(rng, -1.0, 1.0);
    const double aod_jit = uniform(rng, -1.0, 1.0);
    const double tof_jit = uniform(rng, 0.0, 1e-9);
    const double dop_jit = uniform(rng, -0.2, 0.2);
    const double phase = uniform(rng, 0.0, 2.0 * kPi);

    const bool four = method == Method::MdTrack4d;
    const std::size_t n_tx = four ? spec.n_tx_4d : 1;
    TwoPathTrial tr;
    tr.scenario = Scenario::make(n_tx, spec.n_rx, uses_doppler(method) ? spec.n_t : 1);
    tr.scenario.snr_db = spec.snr_db;

    tr.a.aoa = rad(80.0 + aoa_jit);
    tr.a.tof = 20e-9 + tof_jit;
    tr.a.atten = 1.0;
    tr.b = tr.a;
    tr.b.aoa += aoa_frac * basic_angle(spec.n_rx);
    tr.b.tof += tof_frac * kBasicTof;
    tr.b.atten = std::polar(1.0, phase);
    if (uses_doppler(method)) {
        tr.a.doppler = dop_jit;
        tr.b.doppler = dop_jit + spec.doppler_gap;
    }
    if (four) {
        tr.a.aod = rad(90.0 + aod_jit);
        tr.b.aod = tr.a.aod + aoa_frac * basic_angle(n_tx);
    }
    tr.scenario.paths = {tr.a, tr.b};
    return tr;
}

bool is_resolved(const std::vector<PathParams>& est, const PathParams& a, const PathParams& b, Method method,
                 std::size_t n_rx, std::size_t n_tx) {
    if (est.size() < 2) return false;
    const bool tof = method != Method::MusicAoa;
    const bool aoa = method != Method::MusicTof;
    auto close = [&](const PathParams& e, const PathParams& t) {
        if (tof && std::abs(e.tof - t.tof) > 0.5 * kBasicTof) return false;
        if (aoa && std::abs(e.aoa - t.aoa) > 0.5 * basic_angle(n_rx)) return false;
        if (uses_doppler(method) && std::abs(e.doppler - t.doppler) > 0.5 * kBasicDoppler) return false;
        if (method == Method::MdTrack4d && std::abs(e.aod - t.aod) > 0.5 * basic_angle(n_tx)) return false;
        return true;
    };
    return (close(est[0], a) && close(est[1], b)) || (close(est[0], b) && close(est[1], a));
}

ResolvabilityResult run_resolvability(const ResolvabilitySpec& spec, Method method) {
    if (spec.trials < 1) throw std::invalid_argument("resolvability: trials must be >= 1");
    ResolvabilityResult res;
    res.method = method;
    res.aoa_fracs = spec.aoa_fracs;
    res.tof_fracs = spec.tof_fracs;
    const std::size_t cells = spec.aoa_fracs.size() * spec.tof_fracs.size();
    res.prob.assign(cells, 0.0);
    if (cells == 0) return res;

    const bool music = method == Method::MusicTof || method == Method::MusicAoa || method == Method::Music1d;
    std::optional<Resolver> resolver;
    if (!music) {
        auto probe_rng = trial_rng(spec.seed, 0);
        const TwoPathTrial probe = make_two_path_trial(spec, method, 0.5, 0.5, probe_rng);
        resolver.emplace(probe.scenario.geom, probe.scenario.tf, probe.scenario.sampling, resolvability_grid(method, spec),
                         resolvability_config(method));
    }

    // One work unit per (cell, trial); outcomes land by index so the result
    // does not depend on scheduling.
    const std::size_t units = cells * spec.trials;
    std::vector<unsigned char> hit(units, 0);
    std::string failure;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t u = 0; u < units; ++u) {
        const std::size_t cell = u / spec.trials, trial = u % spec.trials;
        const std::size_t ai = cell / spec.tof_fracs.size(), ti = cell % spec.tof_fracs.size();
        try {
            auto rng = trial_rng(spec.seed, ai * 1000 + ti + 1, trial);
            const TwoPathTrial tr = make_two_path_trial(spec, method, spec.aoa_fracs[ai], spec.tof_fracs[ti], rng);
            const ChannelTensor y = tr.scenario.synthesize(rng());
            const std::size_t n_tx = tr.scenario.geom.n_tx;
            bool ok = false;
            if (music) {
                if (method != Method::MusicAoa)
                    ok = is_resolved(music_estimates(y, tr.scenario.geom, Dim::Tof, spec), tr.a, tr.b,
                                     Method::MusicTof, spec.n_rx, n_tx);
                if (!ok && method != Method::MusicTof)
                    ok = is_resolved(music_estimates(y, tr.scenario.geom, Dim::Aoa, spec), tr.a, tr.b,
                                     Method::MusicAoa, spec.n_rx, n_tx);
            } else if (method == Method::JointGrid2d) {
                ok = is_resolved(resolver->sic_initialize(y).paths, tr.a, tr.b, method, spec.n_rx, n_tx);
            } else {
                ok = is_resolved(resolver->resolve(y).paths, tr.a, tr.b, method, spec.n_rx, n_tx);
            }
            hit[u] = ok ? 1 : 0;
        } catch (const std::exception& e) {
#pragma omp critical(mdtrack_resolvability_error)
            if (failure.empty()) failure = e.what();
        }
    }
    if (!failure.empty()) throw std::runtime_error("resolvability: " + failure);

    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t hits = 0;
        for (std::size_t trial = 0; trial < spec.trials; ++trial) hits += hit[cell * spec.trials + trial];
        res.prob[cell] = static_cast<double>(hits) / static_cast<double>(spec.trials);
    }
    return res;
}

TimingReport time_kernels(std::size_t repeats, std::uint64_t seed, bool include_reference) {
    Scenario sc = Scenario::make(1, 8, 1);
    sc.snr_db = 20.0;
    const SearchGrid grid = SearchGrid::defaults(2);
    const Estimator est(sc.geom, sc.tf, sc.sampling, grid);
    Hypothesis start;
    start.aoa = grid[Dim::Aoa].value(grid[Dim::Aoa].size() / 2);
    start.tof = grid[Dim::Tof].value(grid[Dim::Tof].size() / 2);

    TimingReport r;
    r.repeats = std::max<std::size_t>(repeats, 1);
    for (std::size_t n = 0; n < r.repeats; ++n) {
        auto rng = trial_rng(seed, 7, n);
        PathParams p;
        p.aoa = rad(uniform(rng, 30.0, 150.0));
        p.tof = uniform(rng, 5e-9, 190e-9);
        p.atten = std::polar(1.0, uniform(rng, 0.0, 2.0 * kPi));
        sc.paths = {p};
        const ChannelTensor y = sc.synthesize(rng());

        auto t0 = Clock::now();
        const PathParams g = est.grid_search(y);
        r.grid_seconds += seconds_since(t0);
        t0 = Clock::now();
        const CdResult c = est.coordinate_descent(y, start);
        r.cd_seconds += seconds_since(t0);
        if (g.aoa == c.path.aoa && g.tof == c.path.tof) ++r.agree;
        if (include_reference && n == 0) {
            t0 = Clock::now();
            (void)estimate_grid_reference(y, sc.tf, sc.geom, grid);
            r.reference_seconds = seconds_since(t0);
        }
    }
    r.grid_seconds /= static_cast<double>(r.repeats);
    r.cd_seconds /= static_cast<double>(r.repeats);
    return r;
}

}  // namespace mdtrack
