// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace mdtrack {

using cd = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;

/// Parameters of one propagation path. Angles are measured from the array
/// axis and live in [0, pi]; tof in seconds; doppler in Hz.
struct PathParams {
    double aoa = kPi / 2;
    double aod = kPi / 2;
    double tof = 0.0;
    double doppler = 0.0;
    cd atten{1.0, 0.0};
};

/// A hypothesis for the z-function: a path without its attenuation.
struct Hypothesis {
    double aoa = kPi / 2;
    double aod = kPi / 2;
    double tof = 0.0;
    double doppler = 0.0;

    static Hypothesis from(const PathParams& p) { return {p.aoa, p.aod, p.tof, p.doppler}; }
    PathParams with_atten(cd a) const { return {aoa, aod, tof, doppler, a}; }
};

/// Uniform linear arrays at both ends of the link.
struct ArrayGeometry {
    std::size_t n_tx = 1;
    std::size_t n_rx = 1;
    double spacing = 0.0;     // meters
    double wavelength = 0.0;  // meters

    /// Half-wavelength arrays at the given carrier.
    static ArrayGeometry half_wavelength(std::size_t n_tx, std::size_t n_rx,
                                         double carrier_hz = 2.437e9);

    double spacing_ratio() const { return spacing / wavelength; }
    void validate() const;
};

/// Sampling metadata shared by every tensor of one trace.
struct Sampling {
    double subcarrier_spacing = 312.5e3;  // Hz
    double center_freq = 2.437e9;         // Hz
    double sample_interval = 25e-3;       // seconds between snapshots
    std::size_t n_snapshots = 1;
};

/// Known frequency-domain training symbols and the HT-LTF mapping matrix.
/// Bin b of the ltf vector is subcarrier index b - F/2; zero entries are
/// unoccupied bins. mapping is n_tx x n_slots, row-major.
struct TrainingField {
    std::vector<cd> ltf;
    std::vector<double> mapping;
    std::size_t mapping_rows = 1;
    std::size_t mapping_cols = 1;

    std::size_t n_subcarriers() const { return ltf.size(); }
    std::vector<std::uint8_t> mask() const;
    std::size_t occupied() const;
    /// Mean |ltf|^2 over occupied bins.
    double power() const;
    double map(std::size_t row, std::size_t col) const { return mapping[row * mapping_cols + col]; }

    /// 802.11n 20 MHz HT-LTF (64 bins, |k| in 1..28 occupied).
    static TrainingField ht20(std::size_t n_tx = 2);
    /// 40 MHz layout (128 bins, |k| in 2..58 occupied).
    static TrainingField ht40(std::size_t n_tx = 2);
    /// Standard HT-LTF mapping matrix rows for n_tx chains.
    static std::vector<double> htltf_mapping(std::size_t n_tx, std::size_t& rows, std::size_t& cols);
};

/// Baseband frequency of bin b for an F-bin layout.
inline double baseband_freq(std::size_t bin, std::size_t n_bins, double spacing) {
    return (static_cast<double>(bin) - static_cast<double>(n_bins / 2)) * spacing;
}

/// Complex channel samples indexed [tx][rx][subcarrier][time].
class ChannelTensor {
public:
    ChannelTensor() = default;
    ChannelTensor(std::size_t n_tx, std::size_t n_rx, std::size_t n_sc, std::size_t n_t,
                  Sampling sampling, std::vector<std::uint8_t> mask);

    /// Zero tensor shaped for the geometry, training field and sampling.
    static ChannelTensor zeros(const ArrayGeometry& geom, const TrainingField& tf, const Sampling& s);

    std::size_t n_tx() const { return n_tx_; }
    std::size_t n_rx() const { return n_rx_; }
    std::size_t n_sc() const { return n_sc_; }
    std::size_t n_t() const { return n_t_; }
    std::size_t size() const { return data_.size(); }

    const Sampling& sampling() const { return sampling_; }
    Sampling& sampling() { return sampling_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    bool occupied(std::size_t k) const { return mask_[k] != 0; }
    double freq(std::size_t k) const { return baseband_freq(k, n_sc_, sampling_.subcarrier_spacing); }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k, std::size_t t) const {
        return ((i * n_rx_ + j) * n_sc_ + k) * n_t_ + t;
    }
    cd& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t t) { return data_[index(i, j, k, t)]; }
    const cd& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t t) const {
        return data_[index(i, j, k, t)];
    }

    std::span<cd> data() { return data_; }
    std::span<const cd> data() const { return data_; }

    bool same_shape(const ChannelTensor& o) const;
    ChannelTensor& operator+=(const ChannelTensor& o);
    ChannelTensor& operator-=(const ChannelTensor& o);
    ChannelTensor& operator*=(cd c);

    /// Sum of |x|^2 over all entries.
    double energy() const;
    /// Mean |x|^2 over occupied entries.
    double mean_power() const;
    std::size_t occupied_elements() const;
    /// Max |a - b| elementwise.
    double max_abs_diff(const ChannelTensor& o) const;
    /// All values finite and masked bins exactly zero.
    bool well_formed() const;

private:
    std::size_t n_tx_ = 0, n_rx_ = 0, n_sc_ = 0, n_t_ = 0;
    Sampling sampling_{};
    std::vector<std::uint8_t> mask_;
    std::vector<cd> data_;
};

ChannelTensor operator+(ChannelTensor a, const ChannelTensor& b);
ChannelTensor operator-(ChannelTensor a, const ChannelTensor& b);

/// Circularly-symmetric complex Gaussian noise on occupied subcarriers.
struct NoiseSpec {
    double power = 0.0;
    std::uint64_t seed = 0;
};

inline double deg(double rad) { return rad * 180.0 / kPi; }
inline double rad(double deg) { return deg * kPi / 180.0; }

}  // namespace mdtrack
