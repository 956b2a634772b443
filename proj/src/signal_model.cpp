// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/signal_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace mdtrack {

namespace {

std::vector<cd> ula_steering(std::size_t n, double spacing_ratio, double angle, const char* what) {
    if (!(angle >= 0.0 && angle <= kPi))
        throw std::domain_error(std::string(what) + ": angle must lie in [0, pi], got " + std::to_string(angle));
    std::vector<cd> v(n);
    const double step = -2.0 * kPi * spacing_ratio * std::cos(angle);
    for (std::size_t m = 0; m < n; ++m) v[m] = std::polar(1.0, step * static_cast<double>(m));
    return v;
}

void check_path(const PathParams& p) {
    if (!(p.tof >= 0.0)) throw std::domain_error("path: tof must be >= 0");
    if (!std::isfinite(p.doppler)) throw std::domain_error("path: doppler must be finite");
}

void check_mapping(const TrainingField& tf, std::size_t n_tx) {
    if (tf.mapping_rows != n_tx)
        throw std::invalid_argument("HT-LTF: mapping has " + std::to_string(tf.mapping_rows) + " rows for " +
                                    std::to_string(n_tx) + " transmit chains");
    if (tf.mapping.size() != tf.mapping_rows * tf.mapping_cols)
        throw std::invalid_argument("HT-LTF: mapping storage does not match its extents");
}

// Scale s of P P^H = s I; throws if the rows are not orthogonal with equal norm.
double mapping_scale(const TrainingField& tf) {
    const double s = [&] {
        double acc = 0.0;
        for (std::size_t c = 0; c < tf.mapping_cols; ++c) acc += tf.map(0, c) * tf.map(0, c);
        return acc;
    }();
    if (!(s > 0.0)) throw std::invalid_argument("HT-LTF: singular mapping matrix");
    for (std::size_t a = 0; a < tf.mapping_rows; ++a)
        for (std::size_t b = 0; b < tf.mapping_rows; ++b) {
            double acc = 0.0;
            for (std::size_t c = 0; c < tf.mapping_cols; ++c) acc += tf.map(a, c) * tf.map(b, c);
            const double want = a == b ? s : 0.0;
            if (std::abs(acc - want) > 1e-12 * s)
                throw std::invalid_argument("HT-LTF: mapping matrix is not orthogonal up to scale");
        }
    return s;
}

}  // namespace

std::vector<cd> steering_rx(const ArrayGeometry& geom, double aoa) {
    geom.validate();
    return ula_steering(geom.n_rx, geom.spacing_ratio(), aoa, "steering_rx");
}

std::vector<cd> steering_tx(const ArrayGeometry& geom, double aod) {
    geom.validate();
    return ula_steering(geom.n_tx, geom.spacing_ratio(), aod, "steering_tx");
}

ChannelTensor synthesize_path(const PathParams& p, const ArrayGeometry& geom, const TrainingField& tf,
                              const Sampling& sampling) {
    check_path(p);
    const auto c = steering_rx(geom, p.aoa);
    const auto g = steering_tx(geom, p.aod);
    auto out = ChannelTensor::zeros(geom, tf, sampling);

    std::vector<cd> ramp(out.n_sc());
    for (std::size_t k = 0; k < out.n_sc(); ++k)
        ramp[k] = out.occupied(k) ? std::polar(1.0, -2.0 * kPi * out.freq(k) * p.tof) : cd{};
    std::vector<cd> rot(out.n_t());
    for (std::size_t t = 0; t < out.n_t(); ++t)
        rot[t] = std::polar(1.0, 2.0 * kPi * p.doppler * static_cast<double>(t) * sampling.sample_interval);

    for (std::size_t i = 0; i < out.n_tx(); ++i)
        for (std::size_t j = 0; j < out.n_rx(); ++j) {
            const cd spatial = p.atten * c[j] * g[i];
            for (std::size_t k = 0; k < out.n_sc(); ++k) {
                if (!out.occupied(k)) continue;
                const cd sk = spatial * ramp[k];
                for (std::size_t t = 0; t < out.n_t(); ++t) out(i, j, k, t) = sk * rot[t];
            }
        }
    return out;
}

void add_noise(ChannelTensor& tensor, const NoiseSpec& noise) {
    if (noise.power < 0.0) throw std::invalid_argument("noise power must be >= 0");
    if (noise.power == 0.0) return;
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise.power / 2.0));
    for (std::size_t i = 0; i < tensor.n_tx(); ++i)
        for (std::size_t j = 0; j < tensor.n_rx(); ++j)
            for (std::size_t k = 0; k < tensor.n_sc(); ++k) {
                if (!tensor.occupied(k)) continue;
                for (std::size_t t = 0; t < tensor.n_t(); ++t) {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    tensor(i, j, k, t) += cd{re, im};
                }
            }
}

ChannelTensor superpose(const std::vector<PathParams>& paths, const ArrayGeometry& geom,
                        const TrainingField& tf, const Sampling& sampling, const NoiseSpec& noise) {
    auto out = ChannelTensor::zeros(geom, tf, sampling);
    for (const auto& p : paths) out += synthesize_path(p, geom, tf, sampling);
    add_noise(out, noise);
    return out;
}

LtfObservations htltf_forward(const ChannelMatrices& h, std::size_t n_tx, std::size_t n_rx,
                              const TrainingField& tf) {
    check_mapping(tf, n_tx);
    if (h.size() != tf.n_subcarriers()) throw std::invalid_argument("HT-LTF: one channel matrix per subcarrier");
    const std::size_t slots = tf.mapping_cols;
    LtfObservations x(h.size(), std::vector<cd>(n_rx * slots));
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (h[k].size() != n_tx * n_rx) throw std::invalid_argument("HT-LTF: channel matrix has wrong size");
        for (std::size_t j = 0; j < n_rx; ++j)
            for (std::size_t s = 0; s < slots; ++s) {
                cd acc{};
                for (std::size_t i = 0; i < n_tx; ++i) acc += h[k][i * n_rx + j] * tf.map(i, s);
                x[k][j * slots + s] = acc * tf.ltf[k];
            }
    }
    return x;
}

ChannelMatrices estimate_channel_htltf(const LtfObservations& x, std::size_t n_tx, std::size_t n_rx,
                                       const TrainingField& tf) {
    check_mapping(tf, n_tx);
    const double scale = mapping_scale(tf);
    const std::size_t slots = tf.mapping_cols;
    if (x.size() != tf.n_subcarriers()) throw std::invalid_argument("HT-LTF: one observation per subcarrier");
    ChannelMatrices h(x.size(), std::vector<cd>(n_tx * n_rx));
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k].size() != n_rx * slots)
            throw std::invalid_argument("HT-LTF: observation slot count must equal mapping column count");
        if (tf.ltf[k] == cd{}) continue;
        const cd inv = 1.0 / (scale * tf.ltf[k]);
        for (std::size_t j = 0; j < n_rx; ++j)
            for (std::size_t i = 0; i < n_tx; ++i) {
                cd acc{};
                // The mapping is real, so its conjugate is itself.
                for (std::size_t s = 0; s < slots; ++s) acc += x[k][j * slots + s] * tf.map(i, s);
                h[k][i * n_rx + j] = acc * inv;
            }
    }
    return h;
}

ChannelMatrices remove_cyclic_delay(const ChannelMatrices& h, std::size_t n_tx, std::size_t n_rx,
                                    const std::vector<double>& csd, double subcarrier_spacing) {
    if (csd.size() != n_tx) throw std::invalid_argument("cyclic delay: one value per transmit chain");
    ChannelMatrices out = h;
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double f = baseband_freq(k, h.size(), subcarrier_spacing);
        for (std::size_t i = 0; i < n_tx; ++i) {
            const cd rot = std::polar(1.0, 2.0 * kPi * f * csd[i]);
            for (std::size_t j = 0; j < n_rx; ++j) out[k][i * n_rx + j] *= rot;
        }
    }
    return out;
}

ChannelTensor remove_cyclic_delay(const ChannelTensor& tensor, const std::vector<double>& csd) {
    if (csd.size() != tensor.n_tx()) throw std::invalid_argument("cyclic delay: one value per transmit chain");
    ChannelTensor out = tensor;
    for (std::size_t i = 0; i < out.n_tx(); ++i)
        for (std::size_t k = 0; k < out.n_sc(); ++k) {
            const cd rot = std::polar(1.0, 2.0 * kPi * out.freq(k) * csd[i]);
            for (std::size_t j = 0; j < out.n_rx(); ++j)
                for (std::size_t t = 0; t < out.n_t(); ++t) out(i, j, k, t) *= rot;
        }
    return out;
}

void store_snapshot(ChannelTensor& tensor, const ChannelMatrices& h, std::size_t t) {
    if (h.size() != tensor.n_sc()) throw std::invalid_argument("snapshot: subcarrier count mismatch");
    for (std::size_t k = 0; k < h.size(); ++k)
        for (std::size_t i = 0; i < tensor.n_tx(); ++i)
            for (std::size_t j = 0; j < tensor.n_rx(); ++j)
                tensor(i, j, k, t) = tensor.occupied(k) ? h[k][i * tensor.n_rx() + j] : cd{};
}

ChannelMatrices load_snapshot(const ChannelTensor& tensor, std::size_t t) {
    ChannelMatrices h(tensor.n_sc(), std::vector<cd>(tensor.n_tx() * tensor.n_rx()));
    for (std::size_t k = 0; k < tensor.n_sc(); ++k)
        for (std::size_t i = 0; i < tensor.n_tx(); ++i)
            for (std::size_t j = 0; j < tensor.n_rx(); ++j) h[k][i * tensor.n_rx() + j] = tensor(i, j, k, t);
    return h;
}

}  // namespace mdtrack
