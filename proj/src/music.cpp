// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/music.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mdtrack {

namespace {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct Samples {
    Mat cov;
    std::size_t count = 0;
};

void accumulate(Samples& s, const Vec& x) {
    s.cov.noalias() += x * x.adjoint();
    ++s.count;
}

// Contiguous runs of occupied bins, as [first, last] pairs.
std::vector<std::pair<std::size_t, std::size_t>> occupied_runs(const ChannelTensor& t) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t k = 0; k < t.n_sc(); ++k) {
        if (!t.occupied(k)) continue;
        if (!runs.empty() && runs.back().second + 1 == k)
            runs.back().second = k;
        else
            runs.emplace_back(k, k);
    }
    return runs;
}

void rank_check(const Samples& s, std::size_t len) {
    if (s.count < len)
        throw std::invalid_argument("music: " + std::to_string(s.count) + " samples for a " + std::to_string(len) +
                                    "-element covariance is rank deficient; set a smoothing window");
}

}  // namespace

std::vector<double> MusicSpectrum::peak_values(std::size_t count) const {
    std::vector<double> v;
    for (std::size_t n = 0; n < std::min(count, peaks.size()); ++n) v.push_back(grid[peaks[n]]);
    return v;
}

MusicSpectrum music_1d(const ChannelTensor& tensor, const ArrayGeometry& geom, Dim dim, const Axis& axis,
                       const MusicConfig& cfg) {
    if (dim != Dim::Aoa && dim != Dim::Tof) throw std::invalid_argument("music: only aoa and tof are supported");
    if (!(axis.step > 0.0) || !(axis.hi >= axis.lo)) throw std::invalid_argument("music: invalid search axis");

    Samples s;
    std::size_t len = 0;
    std::vector<double> aperture;  // per-element phase coefficient
    const bool full_tof = dim == Dim::Tof && cfg.smoothing == 0;

    if (dim == Dim::Aoa) {
        const std::size_t m = tensor.n_rx();
        len = cfg.smoothing ? cfg.smoothing : m;
        if (len > m) throw std::invalid_argument("music: smoothing window longer than the array");
        s.cov = Mat::Zero(len, len);
        Vec x(len);
        for (std::size_t i = 0; i < tensor.n_tx(); ++i)
            for (std::size_t k = 0; k < tensor.n_sc(); ++k) {
                if (!tensor.occupied(k)) continue;
                for (std::size_t t = 0; t < tensor.n_t(); ++t)
                    for (std::size_t o = 0; o + len <= m; ++o) {
                        for (std::size_t e = 0; e < len; ++e) x[e] = tensor(i, o + e, k, t);
                        accumulate(s, x);
                    }
            }
        for (std::size_t e = 0; e < len; ++e) aperture.push_back(static_cast<double>(e));
    } else {
        const auto runs = occupied_runs(tensor);
        std::vector<std::pair<std::size_t, std::size_t>> windows;  // first bin, length
        if (full_tof) {
            std::vector<std::size_t> bins;
            for (std::size_t k = 0; k < tensor.n_sc(); ++k)
                if (tensor.occupied(k)) bins.push_back(k);
            len = bins.size();
            for (std::size_t k : bins) aperture.push_back(tensor.freq(k));
        } else {
            len = cfg.smoothing;
            for (const auto& [first, last] : runs)
                for (std::size_t k = first; k + len <= last + 1; ++k) windows.emplace_back(k, len);
            if (windows.empty()) throw std::invalid_argument("music: smoothing window longer than every occupied run");
            for (std::size_t e = 0; e < len; ++e)
                aperture.push_back(static_cast<double>(e) * tensor.sampling().subcarrier_spacing);
        }
        s.cov = Mat::Zero(len, len);
        Vec x(len);
        for (std::size_t i = 0; i < tensor.n_tx(); ++i)
            for (std::size_t j = 0; j < tensor.n_rx(); ++j)
                for (std::size_t t = 0; t < tensor.n_t(); ++t) {
                    if (full_tof) {
                        std::size_t e = 0;
                        for (std::size_t k = 0; k < tensor.n_sc(); ++k)
                            if (tensor.occupied(k)) x[e++] = tensor(i, j, k, t);
                        accumulate(s, x);
                    } else {
                        for (const auto& [first, n] : windows) {
                            for (std::size_t e = 0; e < n; ++e) x[e] = tensor(i, j, first + e, t);
                            accumulate(s, x);
                        }
                    }
                }
    }

    if (cfg.n_sources < 1 || cfg.n_sources >= len)
        throw std::invalid_argument("music: source count must lie in [1, aperture length)");
    rank_check(s, len);
    s.cov /= static_cast<double>(s.count);

    const Eigen::SelfAdjointEigenSolver<Mat> eig(s.cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("music: eigendecomposition failed");
    const Mat noise = eig.eigenvectors().leftCols(len - cfg.n_sources);

    MusicSpectrum out;
    const std::size_t n = axis.active ? axis.size() : 1;
    out.grid.resize(n);
    out.power.resize(n);
    Vec a(len);
    for (std::size_t p = 0; p < n; ++p) {
        const double v = axis.active ? axis.value(p) : axis.fixed;
        out.grid[p] = v;
        const double phase = dim == Dim::Aoa ? -2.0 * kPi * geom.spacing_ratio() * std::cos(v) : -2.0 * kPi * v;
        for (std::size_t e = 0; e < len; ++e) a[e] = std::polar(1.0, phase * aperture[e]);
        const double proj = (noise.adjoint() * a).squaredNorm();
        out.power[p] = 1.0 / std::max(proj, 1e-300);
    }

    for (std::size_t p = 0; p < n; ++p) {
        const bool left = p == 0 || out.power[p] > out.power[p - 1];
        const bool right = p + 1 == n || out.power[p] >= out.power[p + 1];
        if (left && right) out.peaks.push_back(p);
    }
    std::stable_sort(out.peaks.begin(), out.peaks.end(),
                     [&](std::size_t a_, std::size_t b_) { return out.power[a_] > out.power[b_]; });
    return out;
}

}  // namespace mdtrack
