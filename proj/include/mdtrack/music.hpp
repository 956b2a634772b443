// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/search_grid.hpp"
#include "mdtrack/types.hpp"

#include <vector>

namespace mdtrack {

struct MusicConfig {
    std::size_t n_sources = 1;
    /// Forward-smoothing window length; 0 uses the full aperture.
    std::size_t smoothing = 0;
};

struct MusicSpectrum {
    std::vector<double> grid;
    std::vector<double> power;
    /// Indices of local maxima, highest first.
    std::vector<std::size_t> peaks;

    std::vector<double> peak_values(std::size_t count) const;
};

/// One-dimensional MUSIC over AoA (receive array as aperture, every tx,
/// subcarrier and snapshot as a sample) or ToF (occupied subcarriers as
/// aperture, every antenna pair and snapshot as a sample). The spectrum is
/// evaluated at the points of `axis`. Throws std::invalid_argument when the
/// sample covariance would be rank deficient; a smoothing window fixes that.
MusicSpectrum music_1d(const ChannelTensor& tensor, const ArrayGeometry& geom, Dim dim, const Axis& axis,
                       const MusicConfig& cfg = {});

}  // namespace mdtrack
