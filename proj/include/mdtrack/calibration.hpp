// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/resolver.hpp"
#include "mdtrack/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mdtrack {

/// Per-chain phase offsets in radians. Chain 0 on each side is the reference.
struct PhaseOffsets {
    std::vector<double> tx;
    std::vector<double> rx;

    static PhaseOffsets zeros(std::size_t n_tx, std::size_t n_rx);
    /// Offsets in (-pi, pi], reference entries exactly zero.
    void validate() const;
};

/// Multiplies tx chain i by exp(s*j*tx_i) and rx chain j by exp(s*j*rx_j),
/// with s = +1 to inject and s = -1 when invert is set.
ChannelTensor apply_phase_offsets(const ChannelTensor& tensor, const PhaseOffsets& po, bool invert = false);

/// Injects a per-snapshot timing error: snapshot t is multiplied by
/// exp(-j 2 pi f_k delay_t), a linear phase slope across subcarriers.
ChannelTensor inject_sfo_sto(const ChannelTensor& tensor, const std::vector<double>& delay);

/// Removes the linear phase slope of every snapshot relative to snapshot 0.
/// The slope is a weighted least-squares fit to the unwrapped phase of
/// sum_ij H_t conj(H_0) over occupied subcarriers; the intercept is kept, so
/// per-snapshot constant phases (Doppler) survive. Unwrapping needs the
/// per-bin phase step below pi, i.e. relative delays under 1 / (2 * spacing)
/// divided by the widest gap between occupied bins.
ChannelTensor align_sfo_sto(const ChannelTensor& tensor);

/// Fitted slope (radians per subcarrier index) of snapshot t against snapshot 0.
double relative_phase_slope(const ChannelTensor& tensor, std::size_t t);

struct CfoEstimate {
    double coarse = 0.0;          // Hz
    double residual_bound = 0.0;  // Hz, 1 / (2 t_s)

    static CfoEstimate with_sampling(double coarse_hz, const Sampling& s);
};

/// Multiplies snapshot t by exp(-j 2 pi coarse t t_s).
ChannelTensor remove_cfo(const ChannelTensor& tensor, const CfoEstimate& cfo);
/// Multiplies snapshot t by exp(+j 2 pi hz t t_s).
ChannelTensor inject_cfo(const ChannelTensor& tensor, double hz);

/// Applies per-tx cyclic delays (seconds); inverse of remove_cyclic_delay.
ChannelTensor inject_cyclic_delay(const ChannelTensor& tensor, const std::vector<double>& csd);

/// Index of the direct path: the largest |atten| among paths whose ToF is
/// within two ToF grid steps of the minimum. Throws on an empty list.
std::size_t select_direct_path(const std::vector<PathParams>& paths, double tof_step = 0.5e-9);

/// Shifts every path's ToF so the direct path sits at direct_truth_tof.
EstimateReport anchor_relative_tof(const EstimateReport& report, double direct_truth_tof, double tof_step = 0.5e-9);

/// Subtracts the direct path's Doppler from every path.
EstimateReport subtract_direct_doppler(const EstimateReport& report, double tof_step = 0.5e-9);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Everything needed to undo the known measurement errors of one link.
struct CalibrationProfile {
    PhaseOffsets offsets;
    std::vector<double> csd;  // seconds per tx chain
    double coarse_cfo = 0.0;  // Hz
    bool align = true;        // SFO/STO alignment when T >= 2
    std::optional<Point2> tx_pos;
    std::optional<Point2> rx_pos;
    double speed = kSpeedOfLight;

    /// Line-of-sight ToF, when both positions are known.
    std::optional<double> direct_truth_tof() const;
};

/// Measurement errors of an unsynchronized link, for synthetic traces.
struct Impairments {
    PhaseOffsets offsets;
    std::vector<double> csd;      // seconds per tx chain
    double cfo = 0.0;             // Hz
    double common_delay = 0.0;    // seconds, added to every snapshot
    double sfo_sto_max = 0.0;     // seconds, per-snapshot delay drawn from U(0, max)
};

/// Applies cyclic delays, phase offsets, per-snapshot timing errors and CFO.
/// Per-snapshot delays are drawn from `seed`; they are returned via `delays`
/// when non-null.
ChannelTensor inject_impairments(const ChannelTensor& tensor, const Impairments& imp, std::uint64_t seed,
                                 std::vector<double>* delays = nullptr);

/// Tensor-side corrections: phase offsets, cyclic delays, coarse CFO, SFO/STO.
ChannelTensor calibrate_tensor(const ChannelTensor& tensor, const CalibrationProfile& profile);

/// Report-side corrections: ToF anchoring (if the geometry is known) and
/// direct-path Doppler subtraction.
EstimateReport calibrate_report(const EstimateReport& report, const CalibrationProfile& profile,
                                double tof_step = 0.5e-9);

}  // namespace mdtrack
