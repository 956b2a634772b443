// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the command-line tool: exit codes, file outputs and
// byte-identical reruns.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdtrack/io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mdtrack;

namespace {

const fs::path kRoot = MDTRACK_TEST_TMP;

fs::path fresh(const std::string& name) {
    const fs::path p = kRoot / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Runs the tool with `args`; stdout and stderr go to files in `dir`.
int run(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string("\"") + MDTRACK_CLI + "\" " + args + " >\"" + (dir / "stdout.txt").string() +
                            "\" 2>\"" + (dir / "stderr.txt").string() + "\"";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

json single_path_scenario() {
    return {{"n_tx", 1},
            {"n_rx", 4},
            {"n_snapshots", 1},
            {"band", "ht20"},
            {"snr_db", nullptr},
            {"paths", {{{"aoa_deg", 70.0}, {"tof_ns", 30.0}, {"atten", {{"re", 0.8}, {"im", 0.2}}}}}}};
}

// Steps 1 deg / 1 ns over a small window keep the searches fast.
const std::string kSmallGrid = "--grid-steps 1,1,1,0.1 --aoa-range 20,160 --tof-range 0,100";

}  // namespace

TEST_CASE("usage errors and help") {
    const fs::path d = fresh("usage");
    CHECK(run("--help", d) == 0);
    CHECK(slurp(d / "stdout.txt").find("simulate") != std::string::npos);
    CHECK(run("", d) == 2);
    CHECK(run("estimate", d) == 2);
    CHECK(run("frobnicate", d) == 2);
    CHECK(run("--dims 7 bench", d) == 2);
    CHECK(run("simulate", d) == 2);
}

TEST_CASE("simulate then estimate recovers a single path") {
    const fs::path d = fresh("single");
    write_json(d / "scene.json", single_path_scenario());
    REQUIRE(run("simulate --scenario " + q(d / "scene.json") + " --out " + q(d / "sim"), d) == 0);
    REQUIRE(fs::exists(d / "sim" / "trace.mdt"));
    REQUIRE(fs::exists(d / "sim" / "trace.truth.json"));
    const json truth = read_json(d / "sim" / "trace.truth.json");
    CHECK(truth.at("seed") == 1);

    REQUIRE(run("estimate --trace " + q(d / "sim" / "trace.mdt") + " " + kSmallGrid + " --out " + q(d / "r.json"),
                d) == 0);
    const json rep = read_json(d / "r.json");
    REQUIRE(rep.at("paths").size() == 1);
    CHECK(rep["paths"][0]["aoa_deg"].get<double>() == doctest::Approx(70.0));
    CHECK(rep["paths"][0]["tof_ns"].get<double>() == doctest::Approx(30.0));
    CHECK(rep["paths"][0]["atten"]["re"].get<double>() == doctest::Approx(0.8));
    CHECK(rep.at("converged") == true);
    CHECK(rep.at("dims") == 2);

    SUBCASE("reruns are byte identical") {
        REQUIRE(run("simulate --scenario " + q(d / "scene.json") + " --out " + q(d / "sim2"), d) == 0);
        CHECK(slurp(d / "sim" / "trace.mdt") == slurp(d / "sim2" / "trace.mdt"));
        CHECK(slurp(d / "sim" / "trace.truth.json") == slurp(d / "sim2" / "trace.truth.json"));
        REQUIRE(run("estimate --trace " + q(d / "sim2" / "trace.mdt") + " " + kSmallGrid + " --out " +
                        q(d / "r2.json"),
                    d) == 0);
        CHECK(slurp(d / "r.json") == slurp(d / "r2.json"));
    }
    SUBCASE("locate on the report") {
        json report = read_json(d / "r.json");
        // Direct path plus one reflection of the 4 m link, reflector at (2, 2).
        report["paths"] = {{{"aoa_deg", 179.0}, {"tof_ns", 4.0 / 299792458.0 * 1e9}, {"atten", {{"re", 1.0}}}},
                           {{"aoa_deg", 135.0}, {"tof_ns", 2.0 * std::sqrt(8.0) / 299792458.0 * 1e9},
                            {"doppler_hz", 2.0}, {"atten", {{"re", 0.3}}}}};
        write_json(d / "rep.json", report);
        write_json(d / "dep.json", {{"tx", {0.0, 0.0}}, {"rx", {4.0, 0.0}}});
        REQUIRE(run("locate --report " + q(d / "rep.json") + " --deployment " + q(d / "dep.json") + " --out " +
                        q(d / "fixes.json"),
                    d) == 0);
        const json fixes = read_json(d / "fixes.json");
        REQUIRE(fixes.at("fixes").size() == 1);
        CHECK(fixes["fixes"][0]["position"][0].get<double>() == doctest::Approx(2.0));
        CHECK(fixes["fixes"][0]["position"][1].get<double>() == doctest::Approx(2.0));
        CHECK(fixes["fixes"][0]["mobility"] == "mobile");
    }
}

TEST_CASE("I/O and spec failures map to exit codes") {
    const fs::path d = fresh("errors");
    CHECK(run("estimate --trace " + q(d / "missing.mdt"), d) == 3);

    {
        std::ofstream f(d / "bad.mdt", std::ios::binary);
        f << "MDTRACK1garbage";
    }
    CHECK(run("estimate --trace " + q(d / "bad.mdt"), d) == 3);
    CHECK(slurp(d / "stderr.txt").find("byte offset") != std::string::npos);

    write_text(d / "broken.json", "{oops");
    CHECK(run("simulate --scenario " + q(d / "broken.json") + " --out " + q(d / "s"), d) == 3);

    write_json(d / "ht80.json", {{"band", "ht80"}});
    CHECK(run("simulate --scenario " + q(d / "ht80.json") + " --out " + q(d / "s"), d) == 2);

    write_json(d / "scene.json", single_path_scenario());
    REQUIRE(run("simulate --scenario " + q(d / "scene.json") + " --out " + q(d / "s"), d) == 0);
    CHECK(run("--grid-steps 1,2 estimate --trace " + q(d / "s" / "trace.mdt"), d) == 2);
    CHECK(run("estimate --trace " + q(d / "s" / "trace.mdt") + " --coarse 1,1,0,1", d) == 2);
}

TEST_CASE("case-study trace: non-convergence exits 4 with the report written, full run matches") {
    const fs::path d = fresh("fig4");
    REQUIRE(run("simulate --fig4 --out " + q(d / "sim"), d) == 0);
    const std::string grid = "--grid-steps 0.1,1,0.1,0.1 --aoa-range 20,160 --tof-range 0,100";
    CHECK(run("estimate --trace " + q(d / "sim" / "trace.mdt") + " " + grid + " --max-iterations 2 --out " +
                  q(d / "short.json"),
              d) == 4);
    const json short_rep = read_json(d / "short.json");
    CHECK(short_rep.at("converged") == false);
    CHECK(short_rep.at("iterations_used") == 2);

    REQUIRE(run("estimate --trace " + q(d / "sim" / "trace.mdt") + " " + grid + " --out " + q(d / "full.json"), d) ==
            0);
    const json rep = read_json(d / "full.json");
    REQUIRE(rep.at("trajectory").size() >= 4);
    const json& r3 = rep["trajectory"][3];
    CHECK(std::abs(r3[0]["aoa_deg"].get<double>() - 60.7) <= 1.0);
    CHECK(std::abs(r3[0]["tof_ns"].get<double>() - 20.8) <= 1.5);
    CHECK(std::abs(r3[1]["aoa_deg"].get<double>() - 73.4) <= 3.5);
    CHECK(std::abs(r3[1]["tof_ns"].get<double>() - 28.1) <= 1.5);
}

TEST_CASE("impaired trace plus calibration profile matches the clean trace") {
    const fs::path d = fresh("calib");
    json scene = {{"n_tx", 1},
                  {"n_rx", 4},
                  {"n_snapshots", 10},
                  {"band", "ht20"},
                  {"snr_db", 30.0},
                  {"paths",
                   {{{"aoa_deg", 80.0}, {"tof_ns", 15.0}, {"power_db", 0.0}},
                    {{"aoa_deg", 120.0}, {"tof_ns", 70.0}, {"power_db", -4.0}, {"phase_deg", 40.0}}}}};
    write_json(d / "scene.json", scene);
    REQUIRE(run("simulate --scenario " + q(d / "scene.json") + " --out " + q(d / "sim"), d) == 0);
    write_json(d / "imp.json", {{"cfo_hz", 300.0},
                                {"sfo_sto_max_ns", 20.0},
                                {"phase_offsets", {{"tx", {0.0}}, {"rx", {0.0, 0.9, -1.4, 2.2}}}}});
    REQUIRE(run("calibrate-inject --trace " + q(d / "sim" / "trace.mdt") + " --impairments " + q(d / "imp.json") +
                    " --out " + q(d / "hurt.mdt"),
                d) == 0);
    REQUIRE(fs::exists(d / "hurt.impairments.json"));
    write_json(d / "profile.json",
               {{"coarse_cfo_hz", 300.0}, {"phase_offsets", {{"tx", {0.0}}, {"rx", {0.0, 0.9, -1.4, 2.2}}}}});

    const std::string grid = "--grid-steps 1,1,0.5,0.1 --aoa-range 40,160 --tof-range 0,120 --doppler-range -3,3";
    REQUIRE(run("estimate --trace " + q(d / "sim" / "trace.mdt") + " " + grid + " --out " + q(d / "clean.json"), d) ==
            0);
    REQUIRE(run("estimate --trace " + q(d / "hurt.mdt") + " --profile " + q(d / "profile.json") + " " + grid +
                    " --out " + q(d / "fixed.json"),
                d) == 0);
    const json a = read_json(d / "clean.json"), b = read_json(d / "fixed.json");
    REQUIRE(a.at("paths").size() == 2);
    REQUIRE(b.at("paths").size() == 2);
    CHECK(a.at("dims") == 3);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(a["paths"][i]["aoa_deg"].get<double>() - b["paths"][i]["aoa_deg"].get<double>()) <= 1.0 + 1e-9);
        CHECK(std::abs(a["paths"][i]["doppler_hz"].get<double>() - b["paths"][i]["doppler_hz"].get<double>()) <=
              0.1 + 1e-9);
    }
    const double gap_a = a["paths"][1]["tof_ns"].get<double>() - a["paths"][0]["tof_ns"].get<double>();
    const double gap_b = b["paths"][1]["tof_ns"].get<double>() - b["paths"][0]["tof_ns"].get<double>();
    CHECK(std::abs(gap_a - gap_b) <= 0.5 + 1e-9);

    // Without the profile the phase offsets wreck the angle estimate.
    REQUIRE(run("estimate --trace " + q(d / "hurt.mdt") + " " + grid + " --out " + q(d / "raw.json"), d) <= 4);
    const json raw = read_json(d / "raw.json");
    const bool wrecked = raw.at("paths").empty() ||
                         std::abs(raw["paths"][0]["aoa_deg"].get<double>() - a["paths"][0]["aoa_deg"].get<double>()) > 1.0;
    CHECK(wrecked);
}

TEST_CASE("a resolvability cell becomes 1000 seeded traces") {
    const fs::path d = fresh("cell");
    write_json(d / "cell.json", {{"two_path", {{"method", "mdtrack-2d"}, {"aoa_frac", 0.5}, {"tof_frac", 0.5}}}});
    REQUIRE(run("--seed 9 simulate --scenario " + q(d / "cell.json") + " --trials 1000 --out " + q(d / "sim"), d) ==
            0);
    std::size_t traces = 0;
    for (const auto& e : fs::directory_iterator(d / "sim"))
        if (e.path().extension() == ".mdt") ++traces;
    CHECK(traces == 1000);
    const json index = read_json(d / "sim" / "index.json");
    CHECK(index.at("files").size() == 1000);
    std::set<std::uint64_t> noise_seeds;
    for (std::size_t t : {0u, 1u, 500u, 999u}) {
        char name[64];
        std::snprintf(name, sizeof name, "trace_%04zu.truth.json", t);
        const json truth = read_json(d / "sim" / name);
        CHECK(truth.at("trial") == t);
        CHECK(truth.at("seed") == 9);
        noise_seeds.insert(truth.at("noise_seed").get<std::uint64_t>());
        const ChannelTensor y = read_trace(d / "sim" / (std::string(name).substr(0, 10) + ".mdt"));
        CHECK(y.n_rx() == 8);
    }
    CHECK(noise_seeds.size() == 4);
}

TEST_CASE("resolvability and bench outputs") {
    const fs::path d = fresh("harness");
    REQUIRE(run("resolvability --methods mdtrack-2d,joint-grid-2d --fracs 0.2,3 --trials 4 --out " + q(d / "a"), d) ==
            0);
    REQUIRE(run("resolvability --methods mdtrack-2d,joint-grid-2d --fracs 0.2,3 --trials 4 --out " + q(d / "b"), d) ==
            0);
    CHECK(slurp(d / "a" / "mdtrack-2d.csv") == slurp(d / "b" / "mdtrack-2d.csv"));
    CHECK(slurp(d / "a" / "resolvability.json") == slurp(d / "b" / "resolvability.json"));
    const std::string csv = slurp(d / "a" / "mdtrack-2d.csv");
    CHECK(csv.rfind("aoa_frac\\tof_frac,0.2000,3.0000\n", 0) == 0);
    CHECK(csv.find("3.0000,") != std::string::npos);
    const json meta = read_json(d / "a" / "resolvability.json");
    CHECK(meta.at("methods").contains("joint-grid-2d"));
    CHECK(meta.at("trials_per_cell") == 4);

    REQUIRE(run("--dims 2 bench --paths 2 --trials 3 --timing-repeats 1 --out " + q(d / "bench.json"), d) == 0);
    const json bench = read_json(d / "bench.json");
    REQUIRE(bench.at("convergence").size() == 1);
    CHECK(bench["convergence"][0].at("trials") == 3);
    CHECK(bench.at("timing").at("cd_speedup").get<double>() > 0.0);
}
