// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/types.hpp"

#include <vector>

namespace mdtrack {

/// Receive steering vector c(aoa): element m = exp(-j 2 pi (d/lambda) m cos(aoa)).
/// Throws std::domain_error unless aoa is in [0, pi] (endfire included).
std::vector<cd> steering_rx(const ArrayGeometry& geom, double aoa);

/// Transmit steering vector g(aod), same closed form over n_tx elements.
std::vector<cd> steering_tx(const ArrayGeometry& geom, double aod);

/// Noiseless channel of a single path. Delay is a linear phase ramp across
/// subcarriers and Doppler a phase rotation between snapshots.
ChannelTensor synthesize_path(const PathParams& p, const ArrayGeometry& geom, const TrainingField& tf,
                              const Sampling& sampling);

/// Elementwise sum of single-path channels plus noise on occupied bins.
ChannelTensor superpose(const std::vector<PathParams>& paths, const ArrayGeometry& geom,
                        const TrainingField& tf, const Sampling& sampling, const NoiseSpec& noise = {});

/// Adds circularly-symmetric complex Gaussian noise to occupied entries.
void add_noise(ChannelTensor& tensor, const NoiseSpec& noise);

/// Per-subcarrier channel matrices; H[k] is n_tx x n_rx row-major, H[k][i*n_rx+j] = h_ij.
using ChannelMatrices = std::vector<std::vector<cd>>;

/// Received HT-LTF observations; X[k] is n_rx x n_slots row-major.
using LtfObservations = std::vector<std::vector<cd>>;

/// Forward HT-LTF model: x_{j,slot} = sum_i h_ij P[i][slot] LTF(k).
LtfObservations htltf_forward(const ChannelMatrices& h, std::size_t n_tx, std::size_t n_rx,
                              const TrainingField& tf);

/// Recovers H_k from observations by multiplying with the conjugate mapping
/// and dividing out the mapping scale and the known LTF symbol.
ChannelMatrices estimate_channel_htltf(const LtfObservations& x, std::size_t n_tx, std::size_t n_rx,
                                       const TrainingField& tf);

/// Multiplies subcarrier k of tx chain i by exp(+j 2 pi f_k csd_i).
ChannelMatrices remove_cyclic_delay(const ChannelMatrices& h, std::size_t n_tx, std::size_t n_rx,
                                    const std::vector<double>& csd, double subcarrier_spacing);

/// Tensor form of remove_cyclic_delay, applied to every snapshot.
ChannelTensor remove_cyclic_delay(const ChannelTensor& tensor, const std::vector<double>& csd);

/// Packs H_k matrices (for one snapshot) into a tensor column t.
void store_snapshot(ChannelTensor& tensor, const ChannelMatrices& h, std::size_t t);
ChannelMatrices load_snapshot(const ChannelTensor& tensor, std::size_t t);

}  // namespace mdtrack
