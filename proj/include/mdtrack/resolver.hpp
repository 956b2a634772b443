// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/estimator.hpp"
#include "mdtrack/search_grid.hpp"
#include "mdtrack/types.hpp"

#include <array>
#include <vector>

namespace mdtrack {

struct ResolverConfig {
    /// SIC stops once the residual energy drops below this fraction of the input.
    double power_stop_threshold = 0.01;
    std::size_t max_paths = 16;
    std::size_t max_iterations = 25;
    /// Per-dimension convergence thresholds; <= 0 means "use the grid step".
    std::array<double, 4> convergence{0.0, 0.0, 0.0, 0.0};
    /// Relative attenuation change that still counts as moving; <= 0 disables the check.
    double atten_convergence = 0.0;
    /// SIC searches a grid coarsened by these factors, then refines each path
    /// with coordinate descent on the full grid. All ones = full exhaustive grid.
    std::array<std::size_t, 4> coarse_factor{1, 1, 1, 1};
    /// A path is treated as noise when |atten| is below this many standard
    /// deviations of the attenuation estimate of a noise-only residual.
    double detection_factor = 4.5;
    /// Grid-mismatch guard: a path weaker than the residual that the strongest
    /// path leaves when it is misplaced by this many steps in every active
    /// dimension is treated as leakage. 0 disables the guard.
    double leakage_steps = 1.0;
    /// Re-estimate the accepted paths (refinement rounds) before each further
    /// SIC extraction instead of only after SIC finishes.
    bool interleave = false;

    void validate() const;
    double threshold(Dim d, const SearchGrid& grid) const;
};

struct EstimateReport {
    /// Ordered by |atten| descending.
    std::vector<PathParams> paths;
    /// Input minus the reconstruction of `paths`.
    ChannelTensor noise_estimate;
    std::size_t iterations_used = 0;
    bool converged = true;
    /// Path parameters after SIC (entry 0) and after every refinement round.
    std::vector<std::vector<PathParams>> trajectory;
    double input_energy = 0.0;

    double residual_energy() const { return noise_estimate.energy(); }
};

/// Shared context for one resolve: geometry, training field, grid and the
/// prebuilt search tables.
class Resolver {
public:
    Resolver(const ArrayGeometry& geom, const TrainingField& tf, const Sampling& sampling, const SearchGrid& grid,
             ResolverConfig cfg = {});

    EstimateReport sic_initialize(const ChannelTensor& tensor) const;
    EstimateReport refine(const ChannelTensor& tensor, const EstimateReport& init) const;
    /// sic_initialize followed by refine.
    EstimateReport resolve(const ChannelTensor& tensor) const;
    ChannelTensor reconstruct(const std::vector<PathParams>& paths) const;

    /// Single-path initial estimate on `residual` (coarse grid + coordinate descent).
    PathParams strongest_path(const ChannelTensor& residual) const;
    /// |atten| below which a path is indistinguishable from the given residual.
    double noise_floor(const ChannelTensor& residual) const;
    /// Residual amplitude, relative to |atten|, left by a path misplaced by
    /// leakage_steps in every active dimension.
    double leakage_ratio() const { return leak_; }
    /// Larger of the noise floor and the leakage of the strongest path.
    double detection_floor(const ChannelTensor& residual, const std::vector<PathParams>& accepted) const;

    const Estimator& estimator() const { return fine_; }
    const ResolverConfig& config() const { return cfg_; }
    const ArrayGeometry& geometry() const { return geom_; }
    const TrainingField& training() const { return tf_; }
    const Sampling& sampling() const { return sampling_; }

private:
    /// One refinement pass over `paths` (strongest first), updating `noise`.
    /// Returns true when no active parameter moved by its threshold.
    bool refine_round(std::vector<PathParams>& paths, ChannelTensor& noise) const;

    ArrayGeometry geom_;
    TrainingField tf_;
    Sampling sampling_;
    ResolverConfig cfg_;
    Estimator fine_;
    Estimator coarse_;
    bool use_coarse_ = false;
    double leak_ = 0.0;
};

EstimateReport sic_initialize(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                              const SearchGrid& grid, const ResolverConfig& cfg = {});
EstimateReport refine(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                      const SearchGrid& grid, const ResolverConfig& cfg, const EstimateReport& init);
ChannelTensor reconstruct(const std::vector<PathParams>& paths, const ArrayGeometry& geom,
                          const TrainingField& tf, const Sampling& sampling);

void sort_by_strength(std::vector<PathParams>& paths);

}  // namespace mdtrack
