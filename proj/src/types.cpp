// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mdtrack {

namespace {

// HT-LTF for subcarriers -28..28 (802.11n, 20 MHz).
constexpr int kHtLtf20[57] = {1,  1,  1,  1,  -1, -1, 1,  1,  -1, 1,  -1, 1,  1,  1,  1,  1,  1,  -1, -1,
                              1,  1,  -1, 1,  -1, 1,  1,  1,  1,  0,  1,  -1, -1, 1,  1,  -1, 1,  -1, 1,
                              -1, -1, -1, -1, -1, 1,  1,  -1, -1, 1,  -1, 1,  -1, 1,  1,  1,  1,  -1, -1};

}  // namespace

ArrayGeometry ArrayGeometry::half_wavelength(std::size_t n_tx, std::size_t n_rx, double carrier_hz) {
    const double lambda = kSpeedOfLight / carrier_hz;
    return {n_tx, n_rx, lambda / 2.0, lambda};
}

void ArrayGeometry::validate() const {
    if (n_tx < 1 || n_rx < 1) throw std::invalid_argument("array geometry: element counts must be >= 1");
    if (!(spacing > 0.0) || !(wavelength > 0.0))
        throw std::invalid_argument("array geometry: spacing and wavelength must be positive");
}

std::vector<std::uint8_t> TrainingField::mask() const {
    std::vector<std::uint8_t> m(ltf.size());
    for (std::size_t k = 0; k < ltf.size(); ++k) m[k] = ltf[k] != cd{} ? 1 : 0;
    return m;
}

std::size_t TrainingField::occupied() const {
    return static_cast<std::size_t>(std::count_if(ltf.begin(), ltf.end(), [](cd v) { return v != cd{}; }));
}

double TrainingField::power() const {
    double acc = 0.0;
    for (cd v : ltf) acc += std::norm(v);
    const auto n = occupied();
    return n ? acc / static_cast<double>(n) : 0.0;
}

std::vector<double> TrainingField::htltf_mapping(std::size_t n_tx, std::size_t& rows, std::size_t& cols) {
    static constexpr double p4[16] = {1, -1, 1, 1, 1, 1, -1, 1, 1, 1, 1, -1, -1, 1, 1, 1};
    if (n_tx == 1) {
        rows = cols = 1;
        return {1.0};
    }
    if (n_tx == 2) {
        rows = cols = 2;
        return {1, -1, 1, 1};
    }
    if (n_tx <= 4) {
        // Three streams still use four HT-LTF slots.
        rows = n_tx;
        cols = 4;
        return {p4, p4 + 4 * n_tx};
    }
    throw std::invalid_argument("HT-LTF mapping defined for 1..4 transmit chains, got " + std::to_string(n_tx));
}

TrainingField TrainingField::ht20(std::size_t n_tx) {
    TrainingField tf;
    tf.ltf.assign(64, cd{});
    for (int k = -28; k <= 28; ++k) tf.ltf[static_cast<std::size_t>(k + 32)] = kHtLtf20[k + 28];
    tf.mapping = htltf_mapping(n_tx, tf.mapping_rows, tf.mapping_cols);
    return tf;
}

TrainingField TrainingField::ht40(std::size_t n_tx) {
    // Unit-modulus BPSK over the 40 MHz occupancy, reusing the 20 MHz sequence.
    TrainingField tf;
    tf.ltf.assign(128, cd{});
    std::vector<int> seq;
    for (int v : kHtLtf20)
        if (v != 0) seq.push_back(v);
    std::size_t s = 0;
    for (int k = -58; k <= 58; ++k) {
        if (std::abs(k) < 2) continue;
        tf.ltf[static_cast<std::size_t>(k + 64)] = seq[s++ % seq.size()];
    }
    tf.mapping = htltf_mapping(n_tx, tf.mapping_rows, tf.mapping_cols);
    return tf;
}

ChannelTensor::ChannelTensor(std::size_t n_tx, std::size_t n_rx, std::size_t n_sc, std::size_t n_t,
                             Sampling sampling, std::vector<std::uint8_t> mask)
    : n_tx_(n_tx), n_rx_(n_rx), n_sc_(n_sc), n_t_(n_t), sampling_(sampling), mask_(std::move(mask)) {
    if (!n_tx || !n_rx || !n_sc || !n_t) throw std::invalid_argument("channel tensor: all extents must be >= 1");
    if (mask_.empty()) mask_.assign(n_sc, 1);
    if (mask_.size() != n_sc) throw std::invalid_argument("channel tensor: mask length must equal subcarrier count");
    sampling_.n_snapshots = n_t;
    data_.assign(n_tx * n_rx * n_sc * n_t, cd{});
}

ChannelTensor ChannelTensor::zeros(const ArrayGeometry& geom, const TrainingField& tf, const Sampling& s) {
    return {geom.n_tx, geom.n_rx, tf.n_subcarriers(), s.n_snapshots, s, tf.mask()};
}

bool ChannelTensor::same_shape(const ChannelTensor& o) const {
    return n_tx_ == o.n_tx_ && n_rx_ == o.n_rx_ && n_sc_ == o.n_sc_ && n_t_ == o.n_t_;
}

ChannelTensor& ChannelTensor::operator+=(const ChannelTensor& o) {
    if (!same_shape(o)) throw std::invalid_argument("channel tensor: shape mismatch in +=");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += o.data_[n];
    return *this;
}

ChannelTensor& ChannelTensor::operator-=(const ChannelTensor& o) {
    if (!same_shape(o)) throw std::invalid_argument("channel tensor: shape mismatch in -=");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= o.data_[n];
    return *this;
}

ChannelTensor& ChannelTensor::operator*=(cd c) {
    for (auto& v : data_) v *= c;
    return *this;
}

ChannelTensor operator+(ChannelTensor a, const ChannelTensor& b) { return a += b; }
ChannelTensor operator-(ChannelTensor a, const ChannelTensor& b) { return a -= b; }

double ChannelTensor::energy() const {
    double acc = 0.0;
    for (cd v : data_) acc += std::norm(v);
    return acc;
}

std::size_t ChannelTensor::occupied_elements() const {
    const auto occ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
    return n_tx_ * n_rx_ * n_t_ * occ;
}

double ChannelTensor::mean_power() const {
    const auto n = occupied_elements();
    return n ? energy() / static_cast<double>(n) : 0.0;
}

double ChannelTensor::max_abs_diff(const ChannelTensor& o) const {
    if (!same_shape(o)) throw std::invalid_argument("channel tensor: shape mismatch in max_abs_diff");
    double m = 0.0;
    for (std::size_t n = 0; n < data_.size(); ++n) m = std::max(m, std::abs(data_[n] - o.data_[n]));
    return m;
}

bool ChannelTensor::well_formed() const {
    for (std::size_t i = 0; i < n_tx_; ++i)
        for (std::size_t j = 0; j < n_rx_; ++j)
            for (std::size_t k = 0; k < n_sc_; ++k)
                for (std::size_t t = 0; t < n_t_; ++t) {
                    const cd v = (*this)(i, j, k, t);
                    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
                    if (!mask_[k] && v != cd{}) return false;
                }
    return true;
}

}  // namespace mdtrack
