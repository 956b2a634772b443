// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/search_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdtrack {

std::string to_string(Dim d) {
    switch (d) {
        case Dim::Aoa: return "aoa";
        case Dim::Aod: return "aod";
        case Dim::Tof: return "tof";
        case Dim::Doppler: return "doppler";
    }
    return "?";
}

std::size_t Axis::size() const {
    if (!active) return 1;
    return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

std::size_t Axis::nearest(double v) const {
    if (!active) return 0;
    const double i = std::round((v - lo) / step);
    if (i <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(i), size() - 1);
}

SearchGrid SearchGrid::defaults(int dims) {
    SearchGrid g;
    const double a_step = 0.02;
    g[Dim::Aoa] = {a_step, kPi - a_step, a_step, false, kPi / 2};
    g[Dim::Aod] = {a_step, kPi - a_step, a_step, false, kPi / 2};
    g[Dim::Tof] = {0.0, 200e-9, 0.5e-9, false, 0.0};
    g[Dim::Doppler] = {-20.0, 20.0, 0.1, false, 0.0};
    switch (dims) {
        case 4: g[Dim::Aod].active = true; [[fallthrough]];
        case 3: g[Dim::Doppler].active = true; [[fallthrough]];
        case 2: g[Dim::Aoa].active = true; [[fallthrough]];
        case 1: g[Dim::Tof].active = true; break;
        default: throw std::invalid_argument("search grid: dims must be 1..4");
    }
    return g;
}

void SearchGrid::validate() const {
    if (active_count() == 0) throw std::invalid_argument("search grid: no active dimension");
    for (Dim d : kAllDims) {
        const Axis& a = (*this)[d];
        if (!a.active) continue;
        if (!(a.step > 0.0)) throw std::invalid_argument("search grid: step must be positive for " + to_string(d));
        if (!(a.hi >= a.lo)) throw std::invalid_argument("search grid: empty range for " + to_string(d));
        if ((d == Dim::Aoa || d == Dim::Aod) && !(a.lo >= 0.0 && a.value(a.size() - 1) <= kPi))
            throw std::invalid_argument("search grid: angle range must lie in [0, pi] for " + to_string(d));
        if (d == Dim::Tof && a.lo < 0.0) throw std::invalid_argument("search grid: tof range must be >= 0");
    }
}

std::size_t SearchGrid::points() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
}

std::size_t SearchGrid::active_count() const {
    return static_cast<std::size_t>(std::count_if(axes.begin(), axes.end(), [](const Axis& a) { return a.active; }));
}

SearchGrid SearchGrid::coarsened(const std::array<std::size_t, 4>& factor) const {
    SearchGrid g = *this;
    for (std::size_t d = 0; d < 4; ++d)
        if (g.axes[d].active && factor[d] > 1) g.axes[d].step *= static_cast<double>(factor[d]);
    return g;
}

SearchGrid& SearchGrid::restrict(Dim d, double lo, double hi) {
    Axis& a = (*this)[d];
    a.lo = lo;
    a.hi = hi;
    return *this;
}

SearchGrid& SearchGrid::set_step(Dim d, double step) {
    (*this)[d].step = step;
    return *this;
}

}  // namespace mdtrack
