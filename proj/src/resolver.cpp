// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/resolver.hpp"

#include "mdtrack/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdtrack {

void ResolverConfig::validate() const {
    if (!(power_stop_threshold > 0.0 && power_stop_threshold < 1.0))
        throw std::invalid_argument("resolver: power_stop_threshold must lie in (0, 1)");
    if (max_paths < 1) throw std::invalid_argument("resolver: max_paths must be >= 1");
    if (max_iterations < 1) throw std::invalid_argument("resolver: max_iterations must be >= 1");
    for (auto f : coarse_factor)
        if (f < 1) throw std::invalid_argument("resolver: coarse factors must be >= 1");
    if (!(detection_factor >= 0.0)) throw std::invalid_argument("resolver: detection_factor must be >= 0");
    if (!(leakage_steps >= 0.0)) throw std::invalid_argument("resolver: leakage_steps must be >= 0");
    if (!(atten_convergence >= 0.0)) throw std::invalid_argument("resolver: atten_convergence must be >= 0");
}

double ResolverConfig::threshold(Dim d, const SearchGrid& grid) const {
    const double t = convergence[static_cast<std::size_t>(d)];
    return t > 0.0 ? t : grid[d].step;
}

void sort_by_strength(std::vector<PathParams>& paths) {
    std::stable_sort(paths.begin(), paths.end(),
                     [](const PathParams& a, const PathParams& b) { return std::abs(a.atten) > std::abs(b.atten); });
}

Resolver::Resolver(const ArrayGeometry& geom, const TrainingField& tf, const Sampling& sampling,
                   const SearchGrid& grid, ResolverConfig cfg)
    : geom_(geom),
      tf_(tf),
      sampling_(sampling),
      cfg_(cfg),
      fine_(geom, tf, sampling, grid),
      coarse_(geom, tf, sampling, grid.coarsened(cfg.coarse_factor)) {
    cfg_.validate();
    use_coarse_ = std::any_of(cfg_.coarse_factor.begin(), cfg_.coarse_factor.end(), [](auto f) { return f > 1; });
    if (cfg_.leakage_steps > 0.0) {
        // Broadside is where a fixed angular step moves the phase the most.
        PathParams p{kPi / 2, kPi / 2, grid[Dim::Tof].lo, 0.0, cd{1.0, 0.0}};
        Hypothesis q = Hypothesis::from(p);
        for (Dim d : kAllDims)
            if (grid[d].active) set(q, d, get(q, d) + cfg_.leakage_steps * grid[d].step);
        const ChannelTensor atom = synthesize_path(p, geom_, tf_, sampling_);
        const double rho = std::min(1.0, std::abs(fine_.kernel().alpha(atom, q)));
        leak_ = std::sqrt(1.0 - rho * rho);
    }
}

ChannelTensor Resolver::reconstruct(const std::vector<PathParams>& paths) const {
    return superpose(paths, geom_, tf_, sampling_);
}

PathParams Resolver::strongest_path(const ChannelTensor& residual) const {
    if (!use_coarse_) return fine_.grid_search(residual);
    const PathParams seed = coarse_.grid_search(residual);
    return fine_.coordinate_descent(residual, Hypothesis::from(seed)).path;
}

double Resolver::noise_floor(const ChannelTensor& residual) const {
    // For white noise of variance s2, Var(z) = s2 * N*M*T * sum_k |LTF_k|^4.
    double w2 = 0.0;
    for (cd v : tf_.ltf) w2 += std::norm(v) * std::norm(v);
    w2 *= static_cast<double>(geom_.n_tx * geom_.n_rx * residual.n_t());
    const double sigma_z = std::sqrt(residual.mean_power() * w2);
    return cfg_.detection_factor * sigma_z / fine_.kernel().normalization();
}

double Resolver::detection_floor(const ChannelTensor& residual, const std::vector<PathParams>& accepted) const {
    double strongest = 0.0;
    for (const auto& p : accepted) strongest = std::max(strongest, std::abs(p.atten));
    return std::max(noise_floor(residual), leak_ * strongest);
}

EstimateReport Resolver::sic_initialize(const ChannelTensor& tensor) const {
    EstimateReport rep;
    rep.input_energy = tensor.energy();
    ChannelTensor residual = tensor;
    if (rep.input_energy > 0.0) {
        while (rep.paths.size() < cfg_.max_paths &&
               residual.energy() >= cfg_.power_stop_threshold * rep.input_energy) {
            const PathParams p = strongest_path(residual);
            if (!(std::abs(p.atten) > 0.0) || std::abs(p.atten) < detection_floor(residual, rep.paths)) break;
            rep.paths.push_back(p);
            residual -= synthesize_path(p, geom_, tf_, sampling_);
            if (cfg_.interleave && rep.paths.size() >= 2) {
                for (std::size_t round = 0; round < cfg_.max_iterations; ++round)
                    if (refine_round(rep.paths, residual)) break;
                sort_by_strength(rep.paths);
                residual = tensor - reconstruct(rep.paths);
            }
        }
    }
    sort_by_strength(rep.paths);
    rep.noise_estimate = tensor - reconstruct(rep.paths);
    rep.trajectory.push_back(rep.paths);
    return rep;
}

bool Resolver::refine_round(std::vector<PathParams>& paths, ChannelTensor& noise) const {
    const SearchGrid& grid = fine_.grid();
    bool settled = true;
    for (auto& path : paths) {
        // y'_l = s_l + W, re-estimate, then fold the refined path back out.
        const PathParams before = path;
        ChannelTensor y = noise + synthesize_path(path, geom_, tf_, sampling_);
        path = fine_.coordinate_descent(y, Hypothesis::from(path)).path;
        noise = std::move(y);
        noise -= synthesize_path(path, geom_, tf_, sampling_);
        for (Dim d : kAllDims)
            if (grid[d].active && std::abs(get(Hypothesis::from(path), d) - get(Hypothesis::from(before), d)) >=
                                      cfg_.threshold(d, grid) * (1.0 - 1e-9))
                settled = false;
        if (cfg_.atten_convergence > 0.0 &&
            std::abs(path.atten - before.atten) > cfg_.atten_convergence * std::abs(before.atten))
            settled = false;
    }
    return settled;
}

EstimateReport Resolver::refine(const ChannelTensor& tensor, const EstimateReport& init) const {
    EstimateReport rep;
    rep.input_energy = tensor.energy();
    rep.paths = init.paths;
    sort_by_strength(rep.paths);
    rep.trajectory = init.trajectory.empty() ? std::vector<std::vector<PathParams>>{rep.paths} : init.trajectory;
    rep.converged = true;

    ChannelTensor noise = tensor - reconstruct(rep.paths);
    if (rep.paths.empty()) {
        rep.noise_estimate = std::move(noise);
        return rep;
    }

    rep.converged = false;
    for (std::size_t round = 1; round <= cfg_.max_iterations; ++round) {
        bool settled = refine_round(rep.paths, noise);

        const double floor = detection_floor(noise, rep.paths);
        const auto dead = std::remove_if(rep.paths.begin(), rep.paths.end(),
                                         [&](const PathParams& p) { return std::abs(p.atten) < floor; });
        if (dead != rep.paths.end()) settled = false;
        rep.paths.erase(dead, rep.paths.end());
        sort_by_strength(rep.paths);

        // Recompute exactly so paths + noise reproduces the input.
        noise = tensor - reconstruct(rep.paths);
        rep.trajectory.push_back(rep.paths);
        rep.iterations_used = round;
        if (settled || rep.paths.empty()) {
            rep.converged = true;
            break;
        }
    }
    rep.noise_estimate = std::move(noise);
    return rep;
}

EstimateReport Resolver::resolve(const ChannelTensor& tensor) const { return refine(tensor, sic_initialize(tensor)); }

EstimateReport sic_initialize(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                              const SearchGrid& grid, const ResolverConfig& cfg) {
    return Resolver(geom, tf, tensor.sampling(), grid, cfg).sic_initialize(tensor);
}

EstimateReport refine(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                      const SearchGrid& grid, const ResolverConfig& cfg, const EstimateReport& init) {
    return Resolver(geom, tf, tensor.sampling(), grid, cfg).refine(tensor, init);
}

ChannelTensor reconstruct(const std::vector<PathParams>& paths, const ArrayGeometry& geom,
                          const TrainingField& tf, const Sampling& sampling) {
    return superpose(paths, geom, tf, sampling);
}

}  // namespace mdtrack
