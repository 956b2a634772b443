// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/estimator.hpp"

#include "mdtrack/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <omp.h>

namespace mdtrack {

namespace {

using Extents = std::array<std::size_t, 4>;

constexpr double kTieTol = 1e-12;

// Contracts axis `axis` of `in` with w; the result keeps the axis with extent 1.
void contract(const std::vector<cd>& in, const Extents& ext, std::size_t axis, const cd* w,
              std::vector<cd>& out, Extents& out_ext) {
    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= ext[a];
    for (std::size_t a = axis + 1; a < 4; ++a) inner *= ext[a];
    const std::size_t len = ext[axis];
    out.assign(outer * inner, cd{});
    for (std::size_t o = 0; o < outer; ++o) {
        cd* dst = out.data() + o * inner;
        for (std::size_t x = 0; x < len; ++x) {
            const cd wx = w[x];
            const cd* src = in.data() + (o * len + x) * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += wx * src[i];
        }
    }
    out_ext = ext;
    out_ext[axis] = 1;
}

cd dot(const cd* w, const cd* v, std::size_t n) {
    cd acc{};
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * v[i];
    return acc;
}

// Plain sqrt(re^2 + im^2); std::abs goes through hypot.
double magnitude(cd v) { return std::sqrt(v.real() * v.real() + v.imag() * v.imag()); }

struct Best {
    double mag = -1.0;
    cd value{};
    std::array<std::size_t, 4> idx{};  // indexed by Dim
};

// Strictly larger |z|, or a tie (relative kTieTol) resolved by smaller
// (tof, aoa, aod, doppler) index.
bool better(const Best& c, const Best& inc) {
    if (inc.mag < 0.0) return true;
    const double scale = std::max(c.mag, inc.mag);
    if (c.mag > inc.mag + kTieTol * scale) return true;
    if (c.mag < inc.mag - kTieTol * scale) return false;
    constexpr std::array<Dim, 4> order = {Dim::Tof, Dim::Aoa, Dim::Aod, Dim::Doppler};
    for (Dim d : order) {
        const auto a = c.idx[static_cast<std::size_t>(d)];
        const auto b = inc.idx[static_cast<std::size_t>(d)];
        if (a != b) return a < b;
    }
    return false;
}

void check_shape(const ChannelTensor& t, const ArrayGeometry& g, std::size_t n_sc) {
    if (t.n_tx() != g.n_tx || t.n_rx() != g.n_rx)
        throw std::invalid_argument("estimator: tensor antenna extents " + std::to_string(t.n_tx()) + "x" +
                                    std::to_string(t.n_rx()) + " do not match geometry " +
                                    std::to_string(g.n_tx) + "x" + std::to_string(g.n_rx));
    if (t.n_sc() != n_sc)
        throw std::invalid_argument("estimator: tensor has " + std::to_string(t.n_sc()) +
                                    " subcarriers, training field has " + std::to_string(n_sc));
}

}  // namespace

ZKernel::ZKernel(const ArrayGeometry& geom, const TrainingField& tf, const Sampling& sampling)
    : geom_(geom), sampling_(sampling), n_sc_(tf.n_subcarriers()) {
    geom_.validate();
    for (std::size_t k = 0; k < tf.ltf.size(); ++k) {
        if (tf.ltf[k] == cd{}) continue;
        occupied_.push_back(k);
        freq_.push_back(baseband_freq(k, n_sc_, sampling.subcarrier_spacing));
        ltf_power_.push_back(std::norm(tf.ltf[k]));
    }
    ext_ = {geom.n_tx, geom.n_rx, occupied_.size(), std::max<std::size_t>(sampling.n_snapshots, 1)};
    norm_ = static_cast<double>(geom.n_tx * geom.n_rx * ext_[3]) *
            std::accumulate(ltf_power_.begin(), ltf_power_.end(), 0.0);
}

std::vector<cd> ZKernel::pack(const ChannelTensor& tensor) const {
    check_shape(tensor, geom_, n_sc_);
    if (tensor.n_t() != ext_[3])
        throw std::invalid_argument("estimator: tensor has " + std::to_string(tensor.n_t()) +
                                    " snapshots, kernel expects " + std::to_string(ext_[3]));
    std::vector<cd> out(ext_[0] * ext_[1] * ext_[2] * ext_[3]);
    std::size_t n = 0;
    for (std::size_t i = 0; i < ext_[0]; ++i)
        for (std::size_t j = 0; j < ext_[1]; ++j)
            for (std::size_t k : occupied_)
                for (std::size_t t = 0; t < ext_[3]; ++t) out[n++] = tensor(i, j, k, t);
    return out;
}

std::vector<cd> ZKernel::weights(Dim d, double value) const {
    std::vector<cd> w(extent(d));
    switch (d) {
        case Dim::Aoa:
        case Dim::Aod: {
            const double step = 2.0 * kPi * geom_.spacing_ratio() * std::cos(value);
            for (std::size_t m = 0; m < w.size(); ++m) w[m] = std::polar(1.0, step * static_cast<double>(m));
            break;
        }
        case Dim::Tof:
            for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::polar(ltf_power_[k], 2.0 * kPi * freq_[k] * value);
            break;
        case Dim::Doppler:
            for (std::size_t t = 0; t < w.size(); ++t)
                w[t] = std::polar(1.0, -2.0 * kPi * value * static_cast<double>(t) * sampling_.sample_interval);
            break;
    }
    return w;
}

ZValue ZKernel::z(const ChannelTensor& tensor, const Hypothesis& hyp) const {
    std::vector<cd> buf = pack(tensor), next;
    Extents ext = ext_;
    // Largest axis first keeps the intermediate buffers small.
    for (Dim d : {Dim::Tof, Dim::Doppler, Dim::Aoa, Dim::Aod}) {
        const auto w = weights(d, get(hyp, d));
        contract(buf, ext, axis_of(d), w.data(), next, ext);
        buf.swap(next);
    }
    return {buf[0], std::abs(buf[0])};
}

cd ZKernel::alpha(const ChannelTensor& tensor, const Hypothesis& hyp) const {
    if (!(norm_ > 0.0)) throw std::domain_error("estimate_alpha: zero normalization");
    return z(tensor, hyp).value / norm_;
}

Estimator::Estimator(const ArrayGeometry& geom, const TrainingField& tf, const Sampling& sampling,
                     const SearchGrid& grid)
    : kernel_(geom, tf, sampling), grid_(grid) {
    grid_.validate();
    for (Dim d : kAllDims) {
        const Axis& a = grid_[d];
        Table& tb = tables_[static_cast<std::size_t>(d)];
        tb.points = a.size();
        tb.extent = kernel_.extent(d);
        tb.w.resize(tb.points * tb.extent);
        for (std::size_t p = 0; p < tb.points; ++p) {
            const auto w = kernel_.weights(d, a.value(p));
            std::copy(w.begin(), w.end(), tb.w.begin() + static_cast<std::ptrdiff_t>(p * tb.extent));
        }
    }
}

PathParams Estimator::grid_search(const ChannelTensor& tensor) const {
    std::vector<cd> base = kernel_.pack(tensor), tmp;
    Extents ext = kernel_.packed_extents();

    // Inactive axes collapse first; active ones go largest extent first so the
    // innermost level (cost = points searched x remaining extent) is cheapest.
    std::vector<Dim> active;
    for (Dim d : kAllDims) {
        if (grid_[d].active) {
            active.push_back(d);
        } else {
            contract(base, ext, ZKernel::axis_of(d), tables_[static_cast<std::size_t>(d)].row(0), tmp, ext);
            base.swap(tmp);
        }
    }
    std::stable_sort(active.begin(), active.end(),
                     [&](Dim a, Dim b) { return kernel_.extent(a) > kernel_.extent(b); });
    const std::size_t levels = active.size();

    Best global;
    const Dim outer = active.front();
    const Table& outer_tb = tables_[static_cast<std::size_t>(outer)];
    const long n_outer = static_cast<long>(outer_tb.points);

#pragma omp parallel
    {
        Best local;
        std::vector<std::vector<cd>> bufs(levels);
        std::vector<Extents> exts(levels);
        std::array<std::size_t, 4> idx{};

        // Recursion over levels 1..levels-1 written as an explicit lambda.
        auto descend = [&](auto&& self, std::size_t level) -> void {
            const Dim d = active[level];
            const Table& tb = tables_[static_cast<std::size_t>(d)];
            const std::vector<cd>& in = bufs[level - 1];
            if (level + 1 == levels) {
                // Only axis d remains; data is contiguous along it.
                for (std::size_t p = 0; p < tb.points; ++p) {
                    const cd v = dot(tb.row(p), in.data(), tb.extent);
                    const double m = magnitude(v);
                    // Cannot win or tie against the local incumbent.
                    if (m < local.mag * (1.0 - kTieTol)) continue;
                    Best c;
                    c.value = v;
                    c.mag = m;
                    c.idx = idx;
                    c.idx[static_cast<std::size_t>(d)] = p;
                    if (better(c, local)) local = c;
                }
                return;
            }
            for (std::size_t p = 0; p < tb.points; ++p) {
                idx[static_cast<std::size_t>(d)] = p;
                contract(in, exts[level - 1], ZKernel::axis_of(d), tb.row(p), bufs[level], exts[level]);
                self(self, level + 1);
            }
        };

#pragma omp for schedule(dynamic)
        for (long p = 0; p < n_outer; ++p) {
            idx[static_cast<std::size_t>(outer)] = static_cast<std::size_t>(p);
            if (levels == 1) {
                Best c;
                c.value = dot(outer_tb.row(static_cast<std::size_t>(p)), base.data(), outer_tb.extent);
                c.mag = magnitude(c.value);
                c.idx = idx;
                if (better(c, local)) local = c;
                continue;
            }
            contract(base, ext, ZKernel::axis_of(outer), outer_tb.row(static_cast<std::size_t>(p)), bufs[0],
                     exts[0]);
            descend(descend, 1);
        }

#pragma omp critical(mdtrack_grid_merge)
        {
            if (local.mag >= 0.0 && better(local, global)) global = local;
        }
    }

    Hypothesis h;
    for (Dim d : kAllDims) set(h, d, grid_[d].value(global.idx[static_cast<std::size_t>(d)]));
    return h.with_atten(global.value / kernel_.normalization());
}

CdResult Estimator::coordinate_descent(const ChannelTensor& tensor, const Hypothesis& init) const {
    constexpr std::size_t kMaxCycles = 100;
    const std::vector<cd> packed = kernel_.pack(tensor);

    Hypothesis cur = init;
    std::array<std::vector<cd>, 4> w;
    for (Dim d : kAllDims) {
        if (!grid_[d].active) set(cur, d, grid_[d].fixed);
        w[static_cast<std::size_t>(d)] = kernel_.weights(d, get(cur, d));
    }

    CdResult res;
    cd cur_z = kernel_.z(tensor, cur).value;
    double cur_mag = magnitude(cur_z);
    res.z_trace.push_back(cur_mag);

    std::vector<cd> buf, tmp;
    for (std::size_t cycle = 0; cycle < kMaxCycles; ++cycle) {
        bool moved = false;
        for (Dim d : kAllDims) {
            const Axis& axis = grid_[d];
            if (!axis.active) continue;
            // Collapse the other three axes at their current values.
            buf = packed;
            Extents ext = kernel_.packed_extents();
            for (Dim o : {Dim::Tof, Dim::Doppler, Dim::Aoa, Dim::Aod}) {
                if (o == d) continue;
                contract(buf, ext, ZKernel::axis_of(o), w[static_cast<std::size_t>(o)].data(), tmp, ext);
                buf.swap(tmp);
            }
            const Table& tb = tables_[static_cast<std::size_t>(d)];
            const cd inc = dot(w[static_cast<std::size_t>(d)].data(), buf.data(), tb.extent);
            const double inc_mag = magnitude(inc);

            std::size_t best_p = 0;
            double best_mag = -1.0;
            cd best_z{};
            for (std::size_t p = 0; p < tb.points; ++p) {
                const cd zp = dot(tb.row(p), buf.data(), tb.extent);
                const double m = magnitude(zp);
                if (m > best_mag + kTieTol * std::max(m, best_mag)) {
                    best_mag = m;
                    best_p = p;
                    best_z = zp;
                }
            }
            // The incumbent stays unless a grid point strictly beats it, so |z|
            // never decreases.
            if (best_mag > inc_mag + kTieTol * std::max(best_mag, inc_mag)) {
                const double old = get(cur, d);
                const double nv = axis.value(best_p);
                if (std::abs(nv - old) >= axis.step * (1.0 - 1e-9)) moved = true;
                set(cur, d, nv);
                w[static_cast<std::size_t>(d)].assign(tb.row(best_p), tb.row(best_p) + tb.extent);
                cur_z = best_z;
                cur_mag = best_mag;
            }
            // Otherwise the point is unchanged; keep its recorded value rather
            // than one re-summed in a different contraction order.
            res.z_trace.push_back(cur_mag);
        }
        res.cycles = cycle + 1;
        if (!moved) break;
    }
    res.path = cur.with_atten(cur_z / kernel_.normalization());
    return res;
}

ZValue z_function(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                  const Hypothesis& hyp) {
    return ZKernel(geom, tf, tensor.sampling()).z(tensor, hyp);
}

cd estimate_alpha(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                  const Hypothesis& hyp) {
    return ZKernel(geom, tf, tensor.sampling()).alpha(tensor, hyp);
}

PathParams estimate_grid(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                         const SearchGrid& grid) {
    return Estimator(geom, tf, tensor.sampling(), grid).grid_search(tensor);
}

PathParams estimate_cd(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                       const SearchGrid& grid, const PathParams& init) {
    return Estimator(geom, tf, tensor.sampling(), grid).coordinate_descent(tensor, Hypothesis::from(init)).path;
}

ZValue z_function_reference(const ChannelTensor& tensor, const TrainingField& tf, const ArrayGeometry& geom,
                            const Hypothesis& hyp) {
    check_shape(tensor, geom, tf.n_subcarriers());
    const auto c = steering_rx(geom, hyp.aoa);
    const auto g = steering_tx(geom, hyp.aod);
    const double ts = tensor.sampling().sample_interval;
    cd acc{};
    for (std::size_t i = 0; i < tensor.n_tx(); ++i)
        for (std::size_t j = 0; j < tensor.n_rx(); ++j)
            for (std::size_t k = 0; k < tensor.n_sc(); ++k) {
                if (tf.ltf[k] == cd{}) continue;
                // Received y = H * LTF correlated against the delayed training
                // symbol LTF * e^{-j2pi f tof}.
                const cd u = tf.ltf[k] * std::polar(1.0, -2.0 * kPi * tensor.freq(k) * hyp.tof);
                for (std::size_t t = 0; t < tensor.n_t(); ++t) {
                    const cd y = tensor(i, j, k, t) * tf.ltf[k];
                    const cd derot = std::polar(1.0, -2.0 * kPi * hyp.doppler * static_cast<double>(t) * ts);
                    acc += std::conj(g[i]) * std::conj(c[j]) * derot * y * std::conj(u);
                }
            }
    return {acc, std::abs(acc)};
}

PathParams estimate_grid_reference(const ChannelTensor& tensor, const TrainingField& tf,
                                   const ArrayGeometry& geom, const SearchGrid& grid) {
    grid.validate();
    double norm = 0.0;
    for (cd v : tf.ltf) norm += std::norm(v);
    norm *= static_cast<double>(tensor.n_tx() * tensor.n_rx() * tensor.n_t());

    Best best;
    const Axis& aa = grid[Dim::Aoa];
    const Axis& ad = grid[Dim::Aod];
    const Axis& at = grid[Dim::Tof];
    const Axis& ag = grid[Dim::Doppler];
    for (std::size_t ia = 0; ia < aa.size(); ++ia)
        for (std::size_t id = 0; id < ad.size(); ++id)
            for (std::size_t it = 0; it < at.size(); ++it)
                for (std::size_t ig = 0; ig < ag.size(); ++ig) {
                    const Hypothesis h{aa.value(ia), ad.value(id), at.value(it), ag.value(ig)};
                    Best c;
                    c.value = z_function_reference(tensor, tf, geom, h).value;
                    c.mag = std::abs(c.value);
                    c.idx = {ia, id, it, ig};
                    if (better(c, best)) best = c;
                }
    if (best.mag < 0.0) throw std::invalid_argument("estimate_grid: empty grid");
    const Hypothesis h{aa.value(best.idx[0]), ad.value(best.idx[1]), at.value(best.idx[2]), ag.value(best.idx[3])};
    return h.with_atten(best.value / norm);
}

}  // namespace mdtrack
