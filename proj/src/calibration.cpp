// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/calibration.hpp"

#include "mdtrack/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mdtrack {

namespace {

// Multiplies snapshot t by exp(j * sign * 2 pi hz t t_s).
ChannelTensor rotate_snapshots(const ChannelTensor& tensor, double hz, double sign) {
    ChannelTensor out = tensor;
    const double ts = tensor.sampling().sample_interval;
    std::vector<cd> rot(tensor.n_t());
    for (std::size_t t = 0; t < rot.size(); ++t)
        rot[t] = std::polar(1.0, sign * 2.0 * kPi * hz * static_cast<double>(t) * ts);
    for (std::size_t i = 0; i < out.n_tx(); ++i)
        for (std::size_t j = 0; j < out.n_rx(); ++j)
            for (std::size_t k = 0; k < out.n_sc(); ++k)
                for (std::size_t t = 0; t < out.n_t(); ++t) out(i, j, k, t) *= rot[t];
    return out;
}

double subcarrier_index(const ChannelTensor& tensor, std::size_t k) {
    return static_cast<double>(k) - static_cast<double>(tensor.n_sc() / 2);
}

void check_offsets(const std::vector<double>& v, const char* side) {
    for (double x : v)
        if (!std::isfinite(x) || x <= -kPi || x > kPi)
            throw std::invalid_argument(std::string("phase offsets: ") + side + " offset outside (-pi, pi]");
    if (!v.empty() && v[0] != 0.0)
        throw std::invalid_argument(std::string("phase offsets: ") + side + " reference chain must be 0");
}

}  // namespace

PhaseOffsets PhaseOffsets::zeros(std::size_t n_tx, std::size_t n_rx) {
    return {std::vector<double>(n_tx, 0.0), std::vector<double>(n_rx, 0.0)};
}

void PhaseOffsets::validate() const {
    check_offsets(tx, "tx");
    check_offsets(rx, "rx");
}

ChannelTensor apply_phase_offsets(const ChannelTensor& tensor, const PhaseOffsets& po, bool invert) {
    if (po.tx.size() != tensor.n_tx() || po.rx.size() != tensor.n_rx())
        throw std::invalid_argument("phase offsets: expected " + std::to_string(tensor.n_tx()) + " tx and " +
                                    std::to_string(tensor.n_rx()) + " rx entries");
    const double s = invert ? -1.0 : 1.0;
    ChannelTensor out = tensor;
    for (std::size_t i = 0; i < out.n_tx(); ++i)
        for (std::size_t j = 0; j < out.n_rx(); ++j) {
            const cd r = std::polar(1.0, s * (po.tx[i] + po.rx[j]));
            for (std::size_t k = 0; k < out.n_sc(); ++k)
                for (std::size_t t = 0; t < out.n_t(); ++t) out(i, j, k, t) *= r;
        }
    return out;
}

ChannelTensor inject_sfo_sto(const ChannelTensor& tensor, const std::vector<double>& delay) {
    if (delay.size() != tensor.n_t()) throw std::invalid_argument("sfo/sto: one delay per snapshot required");
    ChannelTensor out = tensor;
    for (std::size_t k = 0; k < out.n_sc(); ++k)
        for (std::size_t t = 0; t < out.n_t(); ++t) {
            const cd r = std::polar(1.0, -2.0 * kPi * out.freq(k) * delay[t]);
            for (std::size_t i = 0; i < out.n_tx(); ++i)
                for (std::size_t j = 0; j < out.n_rx(); ++j) out(i, j, k, t) *= r;
        }
    return out;
}

double relative_phase_slope(const ChannelTensor& tensor, std::size_t t) {
    if (tensor.n_t() < 2) throw std::invalid_argument("sfo/sto alignment needs at least 2 snapshots");
    if (t >= tensor.n_t()) throw std::out_of_range("sfo/sto: snapshot index out of range");

    std::vector<double> x, phase, w;
    double prev = 0.0;
    for (std::size_t k = 0; k < tensor.n_sc(); ++k) {
        if (!tensor.occupied(k)) continue;
        cd c{};
        for (std::size_t i = 0; i < tensor.n_tx(); ++i)
            for (std::size_t j = 0; j < tensor.n_rx(); ++j) c += tensor(i, j, k, t) * std::conj(tensor(i, j, k, 0));
        const double mag = std::abs(c);
        if (!(mag > 0.0)) continue;
        double p = std::arg(c);
        if (!phase.empty()) p = prev + std::remainder(p - prev, 2.0 * kPi);
        prev = p;
        x.push_back(subcarrier_index(tensor, k));
        phase.push_back(p);
        w.push_back(mag);
    }
    if (x.size() < 2) return 0.0;

    double sw = 0.0, sx = 0.0, sp = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        sw += w[n];
        sx += w[n] * x[n];
        sp += w[n] * phase[n];
    }
    const double mx = sx / sw, mp = sp / sw;
    double sxx = 0.0, sxp = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        sxx += w[n] * (x[n] - mx) * (x[n] - mx);
        sxp += w[n] * (x[n] - mx) * (phase[n] - mp);
    }
    return sxx > 0.0 ? sxp / sxx : 0.0;
}

ChannelTensor align_sfo_sto(const ChannelTensor& tensor) {
    if (tensor.n_t() < 2) throw std::invalid_argument("sfo/sto alignment needs at least 2 snapshots");
    ChannelTensor out = tensor;
    for (std::size_t t = 1; t < tensor.n_t(); ++t) {
        const double slope = relative_phase_slope(tensor, t);
        for (std::size_t k = 0; k < out.n_sc(); ++k) {
            const cd r = std::polar(1.0, -slope * subcarrier_index(tensor, k));
            for (std::size_t i = 0; i < out.n_tx(); ++i)
                for (std::size_t j = 0; j < out.n_rx(); ++j) out(i, j, k, t) *= r;
        }
    }
    return out;
}

CfoEstimate CfoEstimate::with_sampling(double coarse_hz, const Sampling& s) {
    return {coarse_hz, 1.0 / (2.0 * s.sample_interval)};
}

ChannelTensor remove_cfo(const ChannelTensor& tensor, const CfoEstimate& cfo) {
    return rotate_snapshots(tensor, cfo.coarse, -1.0);
}

ChannelTensor inject_cfo(const ChannelTensor& tensor, double hz) { return rotate_snapshots(tensor, hz, 1.0); }

ChannelTensor inject_cyclic_delay(const ChannelTensor& tensor, const std::vector<double>& csd) {
    std::vector<double> neg(csd.size());
    std::transform(csd.begin(), csd.end(), neg.begin(), [](double v) { return -v; });
    return remove_cyclic_delay(tensor, neg);
}

std::size_t select_direct_path(const std::vector<PathParams>& paths, double tof_step) {
    if (paths.empty()) throw std::invalid_argument("direct path: empty path list");
    double min_tof = paths[0].tof;
    for (const auto& p : paths) min_tof = std::min(min_tof, p.tof);
    const double limit = min_tof + 2.0 * tof_step * (1.0 + 1e-9);
    std::size_t best = paths.size();
    for (std::size_t l = 0; l < paths.size(); ++l) {
        if (paths[l].tof > limit) continue;
        if (best == paths.size() || std::abs(paths[l].atten) > std::abs(paths[best].atten)) best = l;
    }
    return best;
}

EstimateReport anchor_relative_tof(const EstimateReport& report, double direct_truth_tof, double tof_step) {
    if (report.paths.empty()) throw std::invalid_argument("tof anchoring: report has no paths");
    EstimateReport out = report;
    const double shift = out.paths[select_direct_path(out.paths, tof_step)].tof - direct_truth_tof;
    for (auto& p : out.paths) p.tof -= shift;
    return out;
}

EstimateReport subtract_direct_doppler(const EstimateReport& report, double tof_step) {
    if (report.paths.empty()) throw std::invalid_argument("doppler calibration: report has no paths");
    EstimateReport out = report;
    const double ref = out.paths[select_direct_path(out.paths, tof_step)].doppler;
    for (auto& p : out.paths) p.doppler -= ref;
    return out;
}

ChannelTensor inject_impairments(const ChannelTensor& tensor, const Impairments& imp, std::uint64_t seed,
                                 std::vector<double>* delays) {
    ChannelTensor out = tensor;
    if (!imp.csd.empty()) out = inject_cyclic_delay(out, imp.csd);
    if (!imp.offsets.tx.empty() || !imp.offsets.rx.empty()) {
        imp.offsets.validate();
        out = apply_phase_offsets(out, imp.offsets);
    }
    std::vector<double> d(out.n_t(), imp.common_delay);
    if (imp.sfo_sto_max > 0.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, imp.sfo_sto_max);
        for (auto& v : d) v += u(rng);
    }
    if (imp.common_delay != 0.0 || imp.sfo_sto_max > 0.0) out = inject_sfo_sto(out, d);
    if (imp.cfo != 0.0) out = inject_cfo(out, imp.cfo);
    if (delays) *delays = std::move(d);
    return out;
}

std::optional<double> CalibrationProfile::direct_truth_tof() const {
    if (!tx_pos || !rx_pos) return std::nullopt;
    return std::hypot(tx_pos->x - rx_pos->x, tx_pos->y - rx_pos->y) / speed;
}

ChannelTensor calibrate_tensor(const ChannelTensor& tensor, const CalibrationProfile& profile) {
    ChannelTensor out = tensor;
    if (!profile.offsets.tx.empty() || !profile.offsets.rx.empty()) {
        profile.offsets.validate();
        out = apply_phase_offsets(out, profile.offsets, true);
    }
    if (!profile.csd.empty()) out = remove_cyclic_delay(out, profile.csd);
    if (profile.coarse_cfo != 0.0) out = remove_cfo(out, CfoEstimate::with_sampling(profile.coarse_cfo, out.sampling()));
    if (profile.align && out.n_t() >= 2) out = align_sfo_sto(out);
    return out;
}

EstimateReport calibrate_report(const EstimateReport& report, const CalibrationProfile& profile, double tof_step) {
    if (report.paths.empty()) return report;
    EstimateReport out = report;
    if (const auto truth = profile.direct_truth_tof()) out = anchor_relative_tof(out, *truth, tof_step);
    return subtract_direct_doppler(out, tof_step);
}

}  // namespace mdtrack
