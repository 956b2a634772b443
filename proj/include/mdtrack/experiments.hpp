// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/music.hpp"
#include "mdtrack/resolver.hpp"
#include "mdtrack/search_grid.hpp"
#include "mdtrack/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mdtrack {

// Basic resolutions: 20 MHz bandwidth, 1 s observation, eight-element array.
inline constexpr double kBasicTof = 50e-9;
inline constexpr double kBasicDoppler = 1.0;
inline constexpr double kBasicAngleDeg = 14.2;

/// Angular basic resolution of an n-element half-wavelength array (radians).
double basic_angle(std::size_t elements);

/// A synthetic link: geometry, band, sampling and the paths to superpose.
struct Scenario {
    ArrayGeometry geom;
    TrainingField tf;
    Sampling sampling;
    std::vector<PathParams> paths;
    /// Signal-to-noise ratio against the mean occupied-element signal power;
    /// empty means noiseless.
    std::optional<double> snr_db;

    static Scenario make(std::size_t n_tx, std::size_t n_rx, std::size_t n_t, bool ht40 = false);

    ChannelTensor clean() const;
    /// Noise power implied by snr_db (0 when noiseless).
    double noise_power() const;
    ChannelTensor synthesize(std::uint64_t seed) const;
};

/// Two-path refinement case study: strong [60.7 deg, 20.8 ns] and weak
/// [73.4 deg, 28.1 ns] 10 dB below, five receive antennas, one snapshot.
Scenario fig4_scenario();
/// AoA/ToF grid for the case study (0.1 deg, 0.1 ns).
SearchGrid fig4_grid();

/// Deterministic per-trial RNG from a run seed and trial coordinates.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

struct RandomPathSpec {
    std::size_t count = 3;
    int dims = 3;
    double aoa_lo = 20.0, aoa_hi = 160.0;      // degrees
    double tof_lo = 5e-9, tof_hi = 150e-9;     // seconds
    double doppler_lo = -10.0, doppler_hi = 10.0;
    double power_db_lo = -10.0, power_db_hi = 0.0;
    /// Minimum pairwise distance in basic-resolution units over active dims.
    double min_separation = 1.0;
    std::size_t n_rx = 8;
    std::size_t n_tx = 1;
};

/// Random well-separated paths with uniform phases; rejection sampling.
std::vector<PathParams> random_paths(std::mt19937_64& rng, const RandomPathSpec& spec);

// --- Convergence statistics ---

struct ConvergenceSpec {
    std::size_t n_paths = 3;
    std::size_t trials = 200;
    double snr_db = 20.0;
    std::uint64_t seed = 1;
    int dims = 3;
    std::size_t n_rx = 8;
    std::size_t n_t = 40;
};

struct ConvergenceStats {
    std::vector<std::size_t> iterations;  // per trial
    std::vector<std::size_t> recovered;   // paths per trial
    std::size_t not_converged = 0;
    double sic_seconds = 0.0;
    double refine_seconds = 0.0;

    /// Fraction of trials that converged within k rounds.
    double fraction_within(std::size_t k) const;
    /// histogram[k] = trials that took k rounds.
    std::vector<std::size_t> histogram() const;
};

/// Grid and resolver setup used by the synthetic ensembles.
SearchGrid ensemble_grid(int dims);
ResolverConfig ensemble_config(int dims);

ConvergenceStats run_convergence(const ConvergenceSpec& spec);

// --- Resolvability ---

/// MUSIC baselines (ToF, AoA, and their union), the resolver at 2-4
/// dimensions, and a joint AoA/ToF grid SIC without refinement.
enum class Method { MusicTof, MusicAoa, Music1d, MdTrack2d, MdTrack3d, MdTrack4d, JointGrid2d };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct ResolvabilitySpec {
    std::vector<double> aoa_fracs;  // AoA difference, in basic resolutions
    std::vector<double> tof_fracs;  // ToF difference, in basic resolutions
    std::size_t trials = 100;
    double snr_db = 20.0;
    std::uint64_t seed = 1;
    std::size_t n_rx = 8;
    std::size_t n_tx_4d = 2;
    std::size_t n_t = 40;
    double doppler_gap = 1.0;      // Hz, held for 3D/4D
    std::size_t music_tof_window = 14;

    /// 0.1, 0.2, ..., 1.0 on both axes.
    static ResolvabilitySpec standard();
};

struct ResolvabilityResult {
    Method method = Method::MdTrack2d;
    std::vector<double> aoa_fracs;
    std::vector<double> tof_fracs;
    std::vector<double> prob;  // [aoa][tof], row-major

    double at(std::size_t a, std::size_t t) const { return prob[a * tof_fracs.size() + t]; }
    /// Smallest diagonal separation whose probability reaches `level`
    /// (first diagonal value if already reached there; +inf if never).
    double threshold(double level = 0.5) const;
};

/// The two-path scene of one resolvability trial.
struct TwoPathTrial {
    Scenario scenario;
    PathParams a, b;
};

TwoPathTrial make_two_path_trial(const ResolvabilitySpec& spec, Method method, double aoa_frac, double tof_frac,
                                 std::mt19937_64& rng);

/// Two estimates matched one-to-one with the truths, each within half a basic
/// resolution in every dimension the method resolves.
bool is_resolved(const std::vector<PathParams>& estimates, const PathParams& a, const PathParams& b, Method method,
                 std::size_t n_rx, std::size_t n_tx);

ResolvabilityResult run_resolvability(const ResolvabilitySpec& spec, Method method);

/// Wall-clock comparison of the search kernels on 2D single-path tensors at
/// the default steps. Each repeat draws a new random path; coordinate descent
/// starts from the grid centre. Times are means per search.
struct TimingReport {
    double grid_seconds = 0.0;
    double reference_seconds = 0.0;  // serial brute force, first repeat only
    double cd_seconds = 0.0;
    std::size_t repeats = 0;
    std::size_t agree = 0;  // repeats where both searches return the same point
};

TimingReport time_kernels(std::size_t repeats, std::uint64_t seed, bool include_reference);

}  // namespace mdtrack
