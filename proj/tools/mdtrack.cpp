// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0
//
// mdtrack command-line front end.
//
// Exit codes: 0 success, 2 invalid input or usage, 3 I/O failure,
// 4 estimate finished without converging (the report is still written).

#include "mdtrack/calibration.hpp"
#include "mdtrack/experiments.hpp"
#include "mdtrack/io.hpp"
#include "mdtrack/localization.hpp"
#include "mdtrack/resolver.hpp"
#include "mdtrack/search_grid.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mdtrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSpec = 2;
constexpr int kExitIo = 3;
constexpr int kExitNotConverged = 4;

struct Globals {
    std::uint64_t seed = 1;
    std::string grid_steps;  // "aoa,aod,tof,doppler" in deg, deg, ns, Hz
    int dims = 0;            // 0 = infer from the data
    int threads = 0;
    std::string out;
};

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw std::invalid_argument(std::string(what) + ": bad number '" + item + "'");
        v.push_back(x);
    }
    if (expected && v.size() != expected)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) + " values");
    return v;
}

fs::path out_path(const Globals& g, const std::string& fallback) { return g.out.empty() ? fs::path(fallback) : fs::path(g.out); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

int infer_dims(const ChannelTensor& y) {
    if (y.n_t() < 2) return 2;
    return y.n_tx() > 1 ? 4 : 3;
}

// Default grid for `dims`, then the user's steps and ranges.
SearchGrid build_grid(const Globals& g, int dims, const std::string& aoa_range, const std::string& tof_range,
                      const std::string& doppler_range, const std::string& aod_range) {
    if (dims < 1 || dims > 4) throw std::invalid_argument("--dims must be 1, 2, 3 or 4");
    SearchGrid grid = SearchGrid::defaults(dims);
    if (!g.grid_steps.empty()) {
        const auto s = parse_list(g.grid_steps, 4, "--grid-steps");
        grid.set_step(Dim::Aoa, rad(s[0])).set_step(Dim::Aod, rad(s[1]));
        grid.set_step(Dim::Tof, s[2] * 1e-9).set_step(Dim::Doppler, s[3]);
    }
    if (!aoa_range.empty()) {
        const auto r = parse_list(aoa_range, 2, "--aoa-range");
        grid.restrict(Dim::Aoa, rad(r[0]), rad(r[1]));
    }
    if (!aod_range.empty()) {
        const auto r = parse_list(aod_range, 2, "--aod-range");
        grid.restrict(Dim::Aod, rad(r[0]), rad(r[1]));
    }
    if (!tof_range.empty()) {
        const auto r = parse_list(tof_range, 2, "--tof-range");
        grid.restrict(Dim::Tof, r[0] * 1e-9, r[1] * 1e-9);
    }
    if (!doppler_range.empty()) {
        const auto r = parse_list(doppler_range, 2, "--doppler-range");
        grid.restrict(Dim::Doppler, r[0], r[1]);
    }
    grid.validate();
    return grid;
}

TrainingField training_for(const ChannelTensor& y) {
    if (y.n_sc() == 64) return TrainingField::ht20(y.n_tx());
    if (y.n_sc() == 128) return TrainingField::ht40(y.n_tx());
    throw std::invalid_argument("trace has " + std::to_string(y.n_sc()) + " subcarriers; expected 64 or 128");
}

// --- simulate ---

struct SimulateArgs {
    std::string scenario;
    std::string impairments;
    bool fig4 = false;
    std::size_t trials = 1;
};

// A scenario document may instead describe one resolvability cell:
// {"two_path": {"method": "mdtrack-3d", "aoa_frac": 0.5, "tof_frac": 0.5, "snr_db": 20}}
struct SceneSource {
    std::optional<Scenario> fixed;
    std::optional<json> two_path;
};

SceneSource load_scene(const SimulateArgs& a) {
    SceneSource src;
    if (a.fig4) {
        src.fixed = fig4_scenario();
        return src;
    }
    if (a.scenario.empty()) throw std::invalid_argument("simulate: --scenario or --fig4 required");
    const json doc = read_json(a.scenario);
    if (doc.contains("two_path"))
        src.two_path = doc.at("two_path");
    else
        src.fixed = scenario_from_json(doc);
    return src;
}

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
    if (a.trials < 1) throw std::invalid_argument("simulate: --trials must be >= 1");
    const SceneSource src = load_scene(a);
    std::optional<Impairments> imp;
    if (!a.impairments.empty()) imp = impairments_from_json(read_json(a.impairments));

    const fs::path dir = out_path(g, "sim");
    ensure_dir(dir);
    json index = json::array();
    for (std::size_t trial = 0; trial < a.trials; ++trial) {
        auto rng = trial_rng(g.seed, 0x51u, trial);
        Scenario sc;
        if (src.fixed) {
            sc = *src.fixed;
        } else {
            const json& tp = *src.two_path;
            ResolvabilitySpec rs = ResolvabilitySpec::standard();
            rs.snr_db = tp.value("snr_db", rs.snr_db);
            sc = make_two_path_trial(rs, method_from_string(tp.at("method").get<std::string>()),
                                     tp.at("aoa_frac").get<double>(), tp.at("tof_frac").get<double>(), rng)
                     .scenario;
        }
        const std::uint64_t noise_seed = rng();
        ChannelTensor y = sc.synthesize(noise_seed);
        json truth = scenario_to_json(sc);
        truth["seed"] = g.seed;
        truth["trial"] = trial;
        truth["noise_seed"] = noise_seed;
        if (imp) {
            std::vector<double> delays;
            y = inject_impairments(y, *imp, rng(), &delays);
            truth["impairments"] = impairments_to_json(*imp);
            std::vector<double> ns;
            for (double d : delays) ns.push_back(d * 1e9);
            truth["snapshot_delay_ns"] = ns;
        }
        char stem[32];
        std::snprintf(stem, sizeof stem, a.trials == 1 ? "trace" : "trace_%04zu", trial);
        const fs::path trace = dir / (std::string(stem) + ".mdt");
        const fs::path side = dir / (std::string(stem) + ".truth.json");
        write_trace(trace, y);
        write_json(side, truth);
        index.push_back({{"trace", trace.filename().string()}, {"truth", side.filename().string()}});
    }
    write_json(dir / "index.json", {{"seed", g.seed}, {"trials", a.trials}, {"files", index}});
    std::cout << "wrote " << a.trials << " trace(s) to " << dir.string() << "\n";
    return kExitOk;
}

// --- estimate ---

struct EstimateArgs {
    std::string trace;
    std::string profile;
    std::string aoa_range, tof_range, doppler_range, aod_range;
    std::string coarse;
    std::size_t max_paths = 16;
    std::size_t max_iterations = 25;
    double power_stop = 0.01;
    double atten_tol = 0.0;
    bool interleave = false;
    bool sic_only = false;
};

int cmd_estimate(const Globals& g, const EstimateArgs& a) {
    ChannelTensor y = read_trace(a.trace);
    std::optional<CalibrationProfile> profile;
    if (!a.profile.empty()) {
        profile = profile_from_json(read_json(a.profile));
        y = calibrate_tensor(y, *profile);
    }
    const int dims = g.dims ? g.dims : infer_dims(y);
    const SearchGrid grid = build_grid(g, dims, a.aoa_range, a.tof_range, a.doppler_range, a.aod_range);

    ResolverConfig cfg;
    cfg.max_paths = a.max_paths;
    cfg.max_iterations = a.max_iterations;
    cfg.power_stop_threshold = a.power_stop;
    cfg.interleave = a.interleave;
    cfg.atten_convergence = a.atten_tol;
    if (!a.coarse.empty()) {
        const auto f = parse_list(a.coarse, 4, "--coarse");
        for (std::size_t i = 0; i < 4; ++i) {
            if (f[i] < 1.0 || f[i] != static_cast<double>(static_cast<std::size_t>(f[i])))
                throw std::invalid_argument("--coarse: factors must be positive integers");
            cfg.coarse_factor[i] = static_cast<std::size_t>(f[i]);
        }
    }
    const ArrayGeometry geom = ArrayGeometry::half_wavelength(y.n_tx(), y.n_rx(), y.sampling().center_freq);
    const Resolver resolver(geom, training_for(y), y.sampling(), grid, cfg);

    EstimateReport rep = a.sic_only ? resolver.sic_initialize(y) : resolver.resolve(y);
    if (profile) rep = calibrate_report(rep, *profile, grid[Dim::Tof].step);

    json doc = report_to_json(rep);
    doc["dims"] = dims;
    const fs::path out = out_path(g, "report.json");
    write_json(out, doc);
    std::cout << rep.paths.size() << " path(s), " << rep.iterations_used << " round(s)"
              << (rep.converged ? "" : ", not converged") << "; report " << out.string() << "\n";
    return rep.converged ? kExitOk : kExitNotConverged;
}

// --- resolvability ---

struct ResolvabilityArgs {
    std::vector<std::string> methods{"music-1d", "mdtrack-2d", "mdtrack-3d", "mdtrack-4d"};
    std::size_t trials = 100;
    double snr_db = 20.0;
    std::string fracs;
};

std::string surface_csv(const ResolvabilityResult& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "aoa_frac\\tof_frac";
    for (double t : r.tof_fracs) os << ',' << t;
    os << '\n';
    for (std::size_t a = 0; a < r.aoa_fracs.size(); ++a) {
        os << r.aoa_fracs[a];
        for (std::size_t t = 0; t < r.tof_fracs.size(); ++t) os << ',' << r.at(a, t);
        os << '\n';
    }
    return os.str();
}

int cmd_resolvability(const Globals& g, const ResolvabilityArgs& a) {
    ResolvabilitySpec spec = ResolvabilitySpec::standard();
    spec.trials = a.trials;
    spec.snr_db = a.snr_db;
    spec.seed = g.seed;
    if (!a.fracs.empty()) spec.aoa_fracs = spec.tof_fracs = parse_list(a.fracs, 0, "--fracs");
    std::vector<Method> methods;
    for (const auto& m : a.methods) methods.push_back(method_from_string(m));

    const fs::path dir = out_path(g, "resolvability");
    ensure_dir(dir);
    json meta = {{"seed", spec.seed},
                 {"trials_per_cell", spec.trials},
                 {"snr_db", spec.snr_db},
                 {"aoa_fracs", spec.aoa_fracs},
                 {"tof_fracs", spec.tof_fracs},
                 {"basic_resolution", {{"tof_ns", kBasicTof * 1e9}, {"doppler_hz", kBasicDoppler},
                                       {"aoa_deg", kBasicAngleDeg}}},
                 {"doppler_gap_hz", spec.doppler_gap},
                 {"criterion", "two estimates, each within 0.5 basic resolution of its own truth"},
                 {"methods", json::object()}};
    for (Method m : methods) {
        const ResolvabilityResult r = run_resolvability(spec, m);
        const std::string name = to_string(m);
        write_text(dir / (name + ".csv"), surface_csv(r));
        const double thr = r.threshold();
        meta["methods"][name] = {{"csv", name + ".csv"}, {"threshold", std::isfinite(thr) ? json(thr) : json(nullptr)}};
        std::cout << name << ": threshold " << (std::isfinite(thr) ? std::to_string(thr) : std::string("none"))
                  << "\n";
    }
    write_json(dir / "resolvability.json", meta);
    return kExitOk;
}

// --- bench ---

struct BenchArgs {
    std::vector<std::size_t> paths{3, 10};
    std::size_t trials = 200;
    std::size_t timing_repeats = 50;
    double snr_db = 20.0;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
    json doc = {{"seed", g.seed}, {"snr_db", a.snr_db}, {"convergence", json::array()}};
    const int dims = g.dims ? g.dims : 3;
    for (std::size_t n : a.paths) {
        ConvergenceSpec cs;
        cs.n_paths = n;
        cs.trials = a.trials;
        cs.snr_db = a.snr_db;
        cs.seed = g.seed;
        cs.dims = dims;
        const ConvergenceStats st = run_convergence(cs);
        doc["convergence"].push_back({{"paths", n},
                                      {"dims", dims},
                                      {"trials", a.trials},
                                      {"histogram", st.histogram()},
                                      {"not_converged", st.not_converged},
                                      {"within_4", st.fraction_within(4)},
                                      {"within_9", st.fraction_within(9)},
                                      {"sic_seconds", st.sic_seconds},
                                      {"refine_seconds", st.refine_seconds}});
        std::cout << n << " paths: " << 100.0 * st.fraction_within(4) << "% within 4 rounds, "
                  << 100.0 * st.fraction_within(9) << "% within 9\n";
    }
    const TimingReport t = time_kernels(a.timing_repeats, g.seed, true);
    doc["timing"] = {{"repeats", t.repeats},
                     {"grid_seconds", t.grid_seconds},
                     {"reference_seconds", t.reference_seconds},
                     {"cd_seconds", t.cd_seconds},
                     {"cd_speedup", t.cd_seconds > 0.0 ? t.grid_seconds / t.cd_seconds : 0.0},
                     {"agree", t.agree}};
    std::cout << "grid " << t.grid_seconds * 1e3 << " ms, coordinate descent " << t.cd_seconds * 1e3 << " ms\n";
    write_json(out_path(g, "bench.json"), doc);
    return kExitOk;
}

// --- locate ---

struct LocateArgs {
    std::string report;
    std::string deployment;
    double doppler_floor = 0.5;
};

int cmd_locate(const Globals& g, const LocateArgs& a) {
    const EstimateReport rep = report_from_json(read_json(a.report));
    const Deployment dep = deployment_from_json(read_json(a.deployment));
    LocateConfig cfg;
    cfg.doppler_floor = a.doppler_floor;
    const LocateResult res = locate_all(rep, dep, cfg);
    write_json(out_path(g, "fixes.json"), locate_to_json(res));
    std::cout << res.fixes.size() << " fix(es), " << res.rejected.size() << " rejected path(s)\n";
    return kExitOk;
}

// --- calibrate-inject ---

struct InjectArgs {
    std::string trace;
    std::string impairments;
};

int cmd_calibrate_inject(const Globals& g, const InjectArgs& a) {
    const ChannelTensor y = read_trace(a.trace);
    const Impairments imp = impairments_from_json(read_json(a.impairments));
    std::vector<double> delays;
    const ChannelTensor out = inject_impairments(y, imp, g.seed, &delays);
    const fs::path path = out_path(g, "impaired.mdt");
    write_trace(path, out);
    std::vector<double> ns;
    for (double d : delays) ns.push_back(d * 1e9);
    fs::path side = path;
    side.replace_extension(".impairments.json");
    json doc = impairments_to_json(imp);
    doc["seed"] = g.seed;
    doc["snapshot_delay_ns"] = ns;
    write_json(side, doc);
    std::cout << "wrote " << path.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mdtrack: multi-dimensional path parameter estimation"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Run seed")->capture_default_str();
    app.add_option("--grid-steps", g.grid_steps, "Grid steps aoa,aod,tof,doppler (deg, deg, ns, Hz)");
    app.add_option("--dims", g.dims, "Active dimensions (1-4); default inferred")->check(CLI::Range(1, 4));
    app.add_option("--threads", g.threads, "OpenMP threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output file or directory");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Synthesize trace files and ground-truth sidecars");
    c_sim->add_option("--scenario", sim.scenario, "Scenario JSON");
    c_sim->add_option("--impairments", sim.impairments, "Impairments JSON applied after synthesis");
    c_sim->add_flag("--fig4", sim.fig4, "Built-in two-path refinement case study");
    c_sim->add_option("--trials", sim.trials, "Number of seeded traces")->capture_default_str();

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "Calibrate and resolve one trace");
    c_est->add_option("--trace", est.trace, "Trace file")->required();
    c_est->add_option("--profile", est.profile, "Calibration profile JSON");
    c_est->add_option("--aoa-range", est.aoa_range, "lo,hi degrees");
    c_est->add_option("--aod-range", est.aod_range, "lo,hi degrees");
    c_est->add_option("--tof-range", est.tof_range, "lo,hi ns");
    c_est->add_option("--doppler-range", est.doppler_range, "lo,hi Hz");
    c_est->add_option("--coarse", est.coarse, "SIC coarse factors aoa,aod,tof,doppler");
    c_est->add_option("--max-paths", est.max_paths)->capture_default_str();
    c_est->add_option("--max-iterations", est.max_iterations)->capture_default_str();
    c_est->add_option("--power-stop", est.power_stop, "SIC residual-energy fraction")->capture_default_str();
    c_est->add_option("--atten-tol", est.atten_tol, "Relative attenuation change that keeps refining (0: off)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    c_est->add_flag("--interleave", est.interleave, "Re-estimate accepted paths between SIC extractions");
    c_est->add_flag("--sic-only", est.sic_only, "Skip refinement (joint-grid baseline)");

    ResolvabilityArgs rs;
    auto* c_res = app.add_subcommand("resolvability", "Two-path resolvability surfaces");
    c_res->add_option("--methods", rs.methods, "music-tof, music-aoa, music-1d, mdtrack-2d/3d/4d, joint-grid-2d")
        ->delimiter(',')
        ->capture_default_str();
    c_res->add_option("--trials", rs.trials, "Trials per cell")->capture_default_str();
    c_res->add_option("--snr", rs.snr_db, "SNR in dB")->capture_default_str();
    c_res->add_option("--fracs", rs.fracs, "Difference grid in basic resolutions, e.g. 0.1,0.5,1");

    BenchArgs bn;
    auto* c_bench = app.add_subcommand("bench", "Convergence histograms and kernel timing");
    c_bench->add_option("--paths", bn.paths, "Path counts")->delimiter(',')->capture_default_str();
    c_bench->add_option("--trials", bn.trials)->capture_default_str();
    c_bench->add_option("--timing-repeats", bn.timing_repeats)->capture_default_str();
    c_bench->add_option("--snr", bn.snr_db)->capture_default_str();

    LocateArgs lc;
    auto* c_loc = app.add_subcommand("locate", "Reflector positions from a report");
    c_loc->add_option("--report", lc.report)->required();
    c_loc->add_option("--deployment", lc.deployment)->required();
    c_loc->add_option("--doppler-floor", lc.doppler_floor, "Hz; larger |doppler| is mobile")->capture_default_str();

    InjectArgs inj;
    auto* c_inj = app.add_subcommand("calibrate-inject", "Apply synthetic link impairments to a trace");
    c_inj->add_option("--trace", inj.trace)->required();
    c_inj->add_option("--impairments", inj.impairments)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitSpec;
    }

    try {
        if (g.threads > 0) omp_set_num_threads(g.threads);
        if (*c_sim) return cmd_simulate(g, sim);
        if (*c_est) return cmd_estimate(g, est);
        if (*c_res) return cmd_resolvability(g, rs);
        if (*c_bench) return cmd_bench(g, bn);
        if (*c_loc) return cmd_locate(g, lc);
        if (*c_inj) return cmd_calibrate_inject(g, inj);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const json::exception& e) {
        std::cerr << "error: invalid document: " << e.what() << "\n";
        return kExitSpec;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitSpec;
}
