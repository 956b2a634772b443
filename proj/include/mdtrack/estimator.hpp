// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/search_grid.hpp"
#include "mdtrack/types.hpp"

#include <array>
#include <vector>

namespace mdtrack {

struct ZValue {
    cd value{};
    double magnitude = 0.0;
};

/// Result of a coordinate-descent search.
struct CdResult {
    PathParams path;
    /// |z| at the start and after every one-dimensional sweep.
    std::vector<double> z_trace;
    std::size_t cycles = 0;
};

/// The z-function
///
///   z = sum_{i,j,k,t} conj(g_i(aod)) conj(c_j(aoa)) |LTF_k|^2 e^{+j2pi f_k tof}
///       e^{-j2pi doppler t t_s} H[i][j][k][t]
///
/// i.e. receive and transmit beamforming, Doppler de-rotation across
/// snapshots and delay compensation across subcarriers, summed coherently
/// against the known training symbols. Tensors are packed to occupied bins
/// once per call and contracted one axis at a time.
class ZKernel {
public:
    ZKernel(const ArrayGeometry& geom, const TrainingField& tf, const Sampling& sampling);

    ZValue z(const ChannelTensor& tensor, const Hypothesis& hyp) const;
    /// z / normalization; the true attenuation for a noiseless single path.
    cd alpha(const ChannelTensor& tensor, const Hypothesis& hyp) const;
    /// N * M * T * sum_k |LTF_k|^2.
    double normalization() const { return norm_; }

    /// Weight vector applied along the tensor axis that carries dimension d.
    std::vector<cd> weights(Dim d, double value) const;
    /// Tensor extent along the axis that carries dimension d.
    std::size_t extent(Dim d) const { return ext_[axis_of(d)]; }

    static constexpr std::size_t axis_of(Dim d) {
        // Packed layout is [tx][rx][occupied subcarrier][time].
        switch (d) {
            case Dim::Aod: return 0;
            case Dim::Aoa: return 1;
            case Dim::Tof: return 2;
            case Dim::Doppler: return 3;
        }
        return 0;
    }

    /// Occupied-bin copy of the tensor; throws on shape mismatch.
    std::vector<cd> pack(const ChannelTensor& tensor) const;
    const std::array<std::size_t, 4>& packed_extents() const { return ext_; }

    const ArrayGeometry& geometry() const { return geom_; }
    const Sampling& sampling() const { return sampling_; }

private:
    ArrayGeometry geom_;
    Sampling sampling_;
    std::vector<std::size_t> occupied_;  // bin indices
    std::vector<double> freq_;           // baseband frequency per occupied bin
    std::vector<double> ltf_power_;      // |LTF_k|^2 per occupied bin
    std::array<std::size_t, 4> ext_{};
    std::size_t n_sc_ = 0;
    double norm_ = 0.0;
};

/// Grid search and coordinate descent over a fixed SearchGrid. Builds the
/// per-dimension phasor tables once so repeated searches reuse them.
class Estimator {
public:
    Estimator(const ArrayGeometry& geom, const TrainingField& tf, const Sampling& sampling, const SearchGrid& grid);

    const ZKernel& kernel() const { return kernel_; }
    const SearchGrid& grid() const { return grid_; }

    /// Exhaustive argmax of |z| over the grid (OpenMP over the outermost
    /// searched axis). Ties: smallest tof, then aoa, aod, doppler.
    PathParams grid_search(const ChannelTensor& tensor) const;
    /// Cyclic aoa -> aod -> tof -> doppler sweeps from init until a full cycle
    /// moves no parameter by a grid step or more.
    CdResult coordinate_descent(const ChannelTensor& tensor, const Hypothesis& init) const;

private:
    struct Table {
        std::size_t points = 0;
        std::size_t extent = 0;
        std::vector<cd> w;  // points x extent
        const cd* row(std::size_t p) const { return w.data() + p * extent; }
    };

    ZKernel kernel_;
    SearchGrid grid_;
    std::array<Table, 4> tables_;
};

// Free-function forms; each builds its kernel from the tensor's sampling.

ZValue z_function(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                  const Hypothesis& hyp);
cd estimate_alpha(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                  const Hypothesis& hyp);
PathParams estimate_grid(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                         const SearchGrid& grid);
PathParams estimate_cd(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                       const SearchGrid& grid, const PathParams& init);

/// Serial brute-force reference: evaluates the z-function independently at
/// every grid point straight from the steering vectors. Kept for testing the
/// separable kernel and as the benchmark baseline.
PathParams estimate_grid_reference(const ChannelTensor& tensor, const TrainingField& tf,
                                   const ArrayGeometry& geom, const SearchGrid& grid);
ZValue z_function_reference(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                            const Hypothesis& hyp);

}  // namespace mdtrack
