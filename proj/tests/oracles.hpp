// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations for the tests. Nothing here calls into
// the library's numerical kernels; each routine evaluates the model from its
// closed form with plain loops.

#pragma once

#include "mdtrack/search_grid.hpp"
#include "mdtrack/types.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using mdtrack::cd;
using mdtrack::kPi;

// Steering vector by repeated multiplication with the inter-element phasor.
inline std::vector<cd> steering_loop(std::size_t n, double spacing_ratio, double angle) {
    std::vector<cd> v(n);
    const cd step = std::exp(cd(0.0, -2.0 * kPi * spacing_ratio * std::cos(angle)));
    cd acc(1.0, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        v[m] = acc;
        acc *= step;
    }
    return v;
}

inline double bin_freq(std::size_t k, std::size_t n_sc, double spacing) {
    return (static_cast<double>(k) - static_cast<double>(n_sc) / 2.0) * spacing;
}

// h[i][j][k][t] = a * g_i * c_j * exp(-j 2pi f_k tof) * exp(+j 2pi dop t ts), occupied bins only.
inline mdtrack::ChannelTensor synth(const std::vector<mdtrack::PathParams>& paths, const mdtrack::ArrayGeometry& g,
                                    const mdtrack::TrainingField& tf, const mdtrack::Sampling& s) {
    mdtrack::ChannelTensor out(g.n_tx, g.n_rx, tf.n_subcarriers(), s.n_snapshots, s, tf.mask());
    const double ratio = g.spacing / g.wavelength;
    for (const auto& p : paths) {
        const auto gt = steering_loop(g.n_tx, ratio, p.aod);
        const auto cr = steering_loop(g.n_rx, ratio, p.aoa);
        for (std::size_t i = 0; i < g.n_tx; ++i)
            for (std::size_t j = 0; j < g.n_rx; ++j)
                for (std::size_t k = 0; k < out.n_sc(); ++k) {
                    if (!out.occupied(k)) continue;
                    const double f = bin_freq(k, out.n_sc(), s.subcarrier_spacing);
                    for (std::size_t t = 0; t < out.n_t(); ++t) {
                        const double ph = -2.0 * kPi * f * p.tof +
                                          2.0 * kPi * p.doppler * static_cast<double>(t) * s.sample_interval;
                        out(i, j, k, t) += p.atten * gt[i] * cr[j] * std::exp(cd(0.0, ph));
                    }
                }
    }
    return out;
}

// z = sum conj(g) conj(c) |LTF|^2 exp(+j2pi f tof) exp(-j2pi dop t ts) H, straight from the definition.
inline cd z_direct(const mdtrack::ChannelTensor& h, const mdtrack::TrainingField& tf, const mdtrack::ArrayGeometry& g,
                   const mdtrack::Hypothesis& hyp) {
    const double ratio = g.spacing / g.wavelength;
    const auto gt = steering_loop(g.n_tx, ratio, hyp.aod);
    const auto cr = steering_loop(g.n_rx, ratio, hyp.aoa);
    const double ts = h.sampling().sample_interval;
    cd z{};
    for (std::size_t i = 0; i < h.n_tx(); ++i)
        for (std::size_t j = 0; j < h.n_rx(); ++j)
            for (std::size_t k = 0; k < h.n_sc(); ++k) {
                if (!h.occupied(k)) continue;
                const double f = bin_freq(k, h.n_sc(), h.sampling().subcarrier_spacing);
                for (std::size_t t = 0; t < h.n_t(); ++t) {
                    const double ph = 2.0 * kPi * f * hyp.tof - 2.0 * kPi * hyp.doppler * static_cast<double>(t) * ts;
                    z += std::conj(gt[i]) * std::conj(cr[j]) * std::norm(tf.ltf[k]) * std::exp(cd(0.0, ph)) *
                         h(i, j, k, t);
                }
            }
    return z;
}

inline double norm_direct(const mdtrack::ChannelTensor& h, const mdtrack::TrainingField& tf) {
    double w = 0.0;
    for (std::size_t k = 0; k < h.n_sc(); ++k)
        if (h.occupied(k)) w += std::norm(tf.ltf[k]);
    return static_cast<double>(h.n_tx() * h.n_rx() * h.n_t()) * w;
}

// Enumerates every grid point with z_direct; ties keep the first point found
// in tof-major, then aoa, aod, doppler order.
inline mdtrack::PathParams argmax_enumerate(const mdtrack::ChannelTensor& h, const mdtrack::TrainingField& tf,
                                            const mdtrack::ArrayGeometry& g, const mdtrack::SearchGrid& grid) {
    using mdtrack::Dim;
    const auto& A = grid[Dim::Aoa];
    const auto& D = grid[Dim::Aod];
    const auto& T = grid[Dim::Tof];
    const auto& F = grid[Dim::Doppler];
    double best = -1.0;
    mdtrack::PathParams out;
    for (std::size_t it = 0; it < T.size(); ++it)
        for (std::size_t ia = 0; ia < A.size(); ++ia)
            for (std::size_t id = 0; id < D.size(); ++id)
                for (std::size_t iff = 0; iff < F.size(); ++iff) {
                    const mdtrack::Hypothesis hyp{A.value(ia), D.value(id), T.value(it), F.value(iff)};
                    const cd z = z_direct(h, tf, g, hyp);
                    if (std::abs(z) > best * (1.0 + 1e-12)) {
                        best = std::abs(z);
                        out = hyp.with_atten(z / norm_direct(h, tf));
                    }
                }
    return out;
}

// Inverse DFT of n spectral samples ordered k = -n/2 .. n/2-1.
inline std::vector<cd> idft_centered(const std::vector<cd>& spec) {
    const std::size_t n = spec.size();
    std::vector<cd> x(n);
    for (std::size_t m = 0; m < n; ++m) {
        cd acc{};
        for (std::size_t b = 0; b < n; ++b) {
            const double k = static_cast<double>(b) - static_cast<double>(n) / 2.0;
            acc += spec[b] * std::exp(cd(0.0, 2.0 * kPi * k * static_cast<double>(m) / static_cast<double>(n)));
        }
        x[m] = acc / static_cast<double>(n);
    }
    return x;
}

inline mdtrack::ChannelTensor random_tensor(const mdtrack::ArrayGeometry& g, const mdtrack::TrainingField& tf,
                                            const mdtrack::Sampling& s, std::uint64_t seed) {
    mdtrack::ChannelTensor out(g.n_tx, g.n_rx, tf.n_subcarriers(), s.n_snapshots, s, tf.mask());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t i = 0; i < out.n_tx(); ++i)
        for (std::size_t j = 0; j < out.n_rx(); ++j)
            for (std::size_t k = 0; k < out.n_sc(); ++k)
                for (std::size_t t = 0; t < out.n_t(); ++t)
                    if (out.occupied(k)) out(i, j, k, t) = cd(n(rng), n(rng));
    return out;
}

// Least-squares slope of unwrapped phase against x.
inline double phase_slope(const std::vector<double>& x, const std::vector<cd>& v) {
    std::vector<double> ph(v.size());
    for (std::size_t n = 0; n < v.size(); ++n) {
        ph[n] = std::arg(v[n]);
        if (n > 0) {
            while (ph[n] - ph[n - 1] > kPi) ph[n] -= 2.0 * kPi;
            while (ph[n] - ph[n - 1] < -kPi) ph[n] += 2.0 * kPi;
        }
    }
    double mx = 0.0, mp = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        mx += x[n];
        mp += ph[n];
    }
    mx /= static_cast<double>(x.size());
    mp /= static_cast<double>(x.size());
    double sxx = 0.0, sxp = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        sxx += (x[n] - mx) * (x[n] - mx);
        sxp += (x[n] - mx) * (ph[n] - mp);
    }
    return sxp / sxx;
}

}  // namespace oracle
