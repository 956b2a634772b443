// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/types.hpp"

#include <array>
#include <cstddef>
#include <string>

namespace mdtrack {

/// Estimation dimensions, in coordinate-descent sweep order.
enum class Dim : std::size_t { Aoa = 0, Aod = 1, Tof = 2, Doppler = 3 };

inline constexpr std::array<Dim, 4> kAllDims = {Dim::Aoa, Dim::Aod, Dim::Tof, Dim::Doppler};

std::string to_string(Dim d);

inline double get(const Hypothesis& h, Dim d) {
    switch (d) {
        case Dim::Aoa: return h.aoa;
        case Dim::Aod: return h.aod;
        case Dim::Tof: return h.tof;
        case Dim::Doppler: return h.doppler;
    }
    return 0.0;
}

inline void set(Hypothesis& h, Dim d, double v) {
    switch (d) {
        case Dim::Aoa: h.aoa = v; break;
        case Dim::Aod: h.aod = v; break;
        case Dim::Tof: h.tof = v; break;
        case Dim::Doppler: h.doppler = v; break;
    }
}

/// One search dimension. An inactive axis contributes the single point `fixed`.
struct Axis {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;
    bool active = false;
    double fixed = 0.0;

    std::size_t size() const;
    double value(std::size_t i) const { return active ? lo + static_cast<double>(i) * step : fixed; }
    /// Index of the grid point nearest to v (clamped to the range).
    std::size_t nearest(double v) const;
};

/// Per-dimension search ranges and step sizes.
struct SearchGrid {
    std::array<Axis, 4> axes{};

    Axis& operator[](Dim d) { return axes[static_cast<std::size_t>(d)]; }
    const Axis& operator[](Dim d) const { return axes[static_cast<std::size_t>(d)]; }

    /// Default ranges: angles (0, pi) at 0.02 rad, tof [0, 200 ns] at 0.5 ns,
    /// doppler [-20, 20] Hz at 0.1 Hz. dims selects the active set:
    /// 1 = {tof}, 2 = {aoa, tof}, 3 = {aoa, tof, doppler}, 4 = all.
    static SearchGrid defaults(int dims);

    void validate() const;
    std::size_t points() const;
    std::size_t active_count() const;
    /// Same ranges with each active step multiplied by factor[d]; the coarse
    /// points are a subset of this grid's points.
    SearchGrid coarsened(const std::array<std::size_t, 4>& factor) const;
    /// Restricts an active axis to [lo, hi] keeping its step.
    SearchGrid& restrict(Dim d, double lo, double hi);
    SearchGrid& set_step(Dim d, double step);
};

}  // namespace mdtrack
