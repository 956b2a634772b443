// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mdtrack {

namespace {

constexpr char kMagic[8] = {'M', 'D', 'T', 'R', 'A', 'C', 'K', '1'};
constexpr std::size_t kMaxExtent = 1u << 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n)
            throw TraceFormatError(std::string("truncated trace while reading ") + what, pos_);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_ + b]) << (8 * b);
        pos_ += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

nlohmann::json point_json(const Point2& p) { return nlohmann::json::array({p.x, p.y}); }

Point2 point_from(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw std::invalid_argument(std::string(key) + ": expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

TraceFormatError::TraceFormatError(const std::string& what, std::size_t offset)
    : IoError(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

std::vector<std::uint8_t> encode_trace(const ChannelTensor& tensor) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kTraceVersion);
    put_u32(out, static_cast<std::uint32_t>(tensor.n_tx()));
    put_u32(out, static_cast<std::uint32_t>(tensor.n_rx()));
    put_u32(out, static_cast<std::uint32_t>(tensor.n_sc()));
    put_u32(out, static_cast<std::uint32_t>(tensor.n_t()));
    const Sampling& s = tensor.sampling();
    put_f64(out, s.subcarrier_spacing);
    put_f64(out, s.center_freq);
    put_f64(out, s.sample_interval);
    for (auto m : tensor.mask()) out.push_back(m ? 1 : 0);
    out.reserve(out.size() + 16 * tensor.size());
    for (const cd& v : tensor.data()) {
        put_f64(out, v.real());
        put_f64(out, v.imag());
    }
    return out;
}

ChannelTensor decode_trace(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    r.need(sizeof kMagic, "magic");
    if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw TraceFormatError("bad magic", 0);
    for (std::size_t n = 0; n < sizeof kMagic; ++n) r.u8("magic");

    const std::size_t at_version = r.offset();
    if (r.u32("version") != kTraceVersion) throw TraceFormatError("unsupported trace version", at_version);

    std::size_t ext[4];
    const char* names[4] = {"n_tx", "n_rx", "n_sc", "n_t"};
    for (int d = 0; d < 4; ++d) {
        const std::size_t at = r.offset();
        ext[d] = r.u32(names[d]);
        if (ext[d] == 0 || ext[d] > kMaxExtent)
            throw TraceFormatError(std::string("invalid extent ") + names[d], at);
    }

    Sampling s;
    const std::size_t at_sampling = r.offset();
    s.subcarrier_spacing = r.f64("subcarrier_spacing");
    s.center_freq = r.f64("center_freq");
    s.sample_interval = r.f64("sample_interval");
    if (!(s.subcarrier_spacing > 0.0) || !(s.center_freq > 0.0) || !(s.sample_interval > 0.0))
        throw TraceFormatError("sampling values must be positive", at_sampling);

    std::vector<std::uint8_t> mask(ext[2]);
    for (auto& m : mask) {
        const std::size_t at = r.offset();
        m = r.u8("mask");
        if (m > 1) throw TraceFormatError("mask entries must be 0 or 1", at);
    }

    ChannelTensor t(ext[0], ext[1], ext[2], ext[3], s, mask);
    r.need(16 * t.size(), "samples");
    for (cd& v : t.data()) {
        const std::size_t at = r.offset();
        const double re = r.f64("samples");
        const double im = r.f64("samples");
        if (!std::isfinite(re) || !std::isfinite(im)) throw TraceFormatError("non-finite sample", at);
        v = {re, im};
    }
    if (r.offset() != bytes.size()) throw TraceFormatError("trailing bytes after samples", r.offset());
    return t;
}

void write_trace(const std::filesystem::path& path, const ChannelTensor& tensor) {
    const auto bytes = encode_trace(tensor);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

ChannelTensor read_trace(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_trace(bytes);
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

nlohmann::json path_to_json(const PathParams& p) {
    return {{"aoa_deg", deg(p.aoa)},
            {"aod_deg", deg(p.aod)},
            {"tof_ns", p.tof * 1e9},
            {"doppler_hz", p.doppler},
            {"atten", {{"re", p.atten.real()}, {"im", p.atten.imag()}}}};
}

PathParams path_from_json(const nlohmann::json& j) {
    PathParams p;
    p.aoa = rad(j.value("aoa_deg", 90.0));
    p.aod = rad(j.value("aod_deg", 90.0));
    p.tof = j.value("tof_ns", 0.0) * 1e-9;
    p.doppler = j.value("doppler_hz", 0.0);
    if (j.contains("atten")) {
        const auto& a = j.at("atten");
        p.atten = {a.value("re", 0.0), a.value("im", 0.0)};
    } else if (j.contains("power_db")) {
        p.atten = std::polar(std::pow(10.0, j.at("power_db").get<double>() / 20.0), rad(j.value("phase_deg", 0.0)));
    }
    return p;
}

nlohmann::json paths_to_json(const std::vector<PathParams>& paths) {
    auto a = nlohmann::json::array();
    for (const auto& p : paths) a.push_back(path_to_json(p));
    return a;
}

std::vector<PathParams> paths_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("paths: expected an array");
    std::vector<PathParams> out;
    for (const auto& e : j) out.push_back(path_from_json(e));
    return out;
}

nlohmann::json report_to_json(const EstimateReport& report) {
    auto traj = nlohmann::json::array();
    for (const auto& step : report.trajectory) traj.push_back(paths_to_json(step));
    return {{"paths", paths_to_json(report.paths)},
            {"path_count", report.paths.size()},
            {"iterations_used", report.iterations_used},
            {"converged", report.converged},
            {"input_energy", report.input_energy},
            {"residual_energy", report.noise_estimate.size() ? report.residual_energy() : 0.0},
            {"trajectory", traj}};
}

EstimateReport report_from_json(const nlohmann::json& j) {
    EstimateReport r;
    r.paths = paths_from_json(j.at("paths"));
    r.iterations_used = j.value("iterations_used", std::size_t{0});
    r.converged = j.value("converged", true);
    r.input_energy = j.value("input_energy", 0.0);
    if (j.contains("trajectory"))
        for (const auto& step : j.at("trajectory")) r.trajectory.push_back(paths_from_json(step));
    return r;
}

Deployment deployment_from_json(const nlohmann::json& j) {
    Deployment d;
    d.tx = point_from(j, "tx");
    d.rx = point_from(j, "rx");
    if (j.contains("rx_axis")) d.rx_axis = point_from(j, "rx_axis");
    d.speed = j.value("speed", kSpeedOfLight);
    d.side = j.value("side", 1);
    d.validate();
    return d;
}

nlohmann::json deployment_to_json(const Deployment& d) {
    return {{"tx", point_json(d.tx)},
            {"rx", point_json(d.rx)},
            {"rx_axis", point_json(d.rx_axis)},
            {"speed", d.speed},
            {"side", d.side}};
}

CalibrationProfile profile_from_json(const nlohmann::json& j) {
    CalibrationProfile p;
    if (j.contains("phase_offsets")) {
        const auto& po = j.at("phase_offsets");
        p.offsets.tx = po.value("tx", std::vector<double>{});
        p.offsets.rx = po.value("rx", std::vector<double>{});
        p.offsets.validate();
    }
    for (double ns : j.value("csd_ns", std::vector<double>{})) p.csd.push_back(ns * 1e-9);
    p.coarse_cfo = j.value("coarse_cfo_hz", 0.0);
    p.align = j.value("align_sfo_sto", true);
    if (j.contains("tx_pos")) p.tx_pos = point_from(j, "tx_pos");
    if (j.contains("rx_pos")) p.rx_pos = point_from(j, "rx_pos");
    p.speed = j.value("speed", kSpeedOfLight);
    return p;
}

nlohmann::json profile_to_json(const CalibrationProfile& p) {
    nlohmann::json j;
    j["phase_offsets"] = {{"tx", p.offsets.tx}, {"rx", p.offsets.rx}};
    std::vector<double> ns;
    for (double s : p.csd) ns.push_back(s * 1e9);
    j["csd_ns"] = ns;
    j["coarse_cfo_hz"] = p.coarse_cfo;
    j["align_sfo_sto"] = p.align;
    if (p.tx_pos) j["tx_pos"] = point_json(*p.tx_pos);
    if (p.rx_pos) j["rx_pos"] = point_json(*p.rx_pos);
    j["speed"] = p.speed;
    return j;
}

nlohmann::json locate_to_json(const LocateResult& res) {
    auto fixes = nlohmann::json::array();
    for (const auto& f : res.fixes)
        fixes.push_back({{"position", point_json(f.position)},
                         {"mobility", f.mobility == Mobility::Mobile ? "mobile" : "static"},
                         {"path", path_to_json(f.source_path)}});
    auto rejected = nlohmann::json::array();
    for (const auto& r : res.rejected) rejected.push_back({{"path_index", r.index}, {"reason", r.reason}});
    return {{"direct_path_index", res.direct},
            {"fixes", fixes},
            {"rejected", rejected},
            {"association", "none: fixes are per packet and not associated with targets"}};
}

Scenario scenario_from_json(const nlohmann::json& j) {
    const std::string band = j.value("band", "ht20");
    if (band != "ht20" && band != "ht40") throw std::invalid_argument("scenario: band must be ht20 or ht40");
    Scenario s = Scenario::make(j.value("n_tx", std::size_t{1}), j.value("n_rx", std::size_t{8}),
                                j.value("n_snapshots", std::size_t{1}), band == "ht40");
    if (s.sampling.n_snapshots < 1) throw std::invalid_argument("scenario: n_snapshots must be >= 1");
    s.sampling.sample_interval = j.value("sample_interval", s.sampling.sample_interval);
    if (!(s.sampling.sample_interval > 0.0)) throw std::invalid_argument("scenario: sample_interval must be > 0");
    if (j.contains("snr_db") && !j.at("snr_db").is_null()) s.snr_db = j.at("snr_db").get<double>();
    s.paths = paths_from_json(j.value("paths", nlohmann::json::array()));
    return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j = {{"n_tx", s.geom.n_tx},
                        {"n_rx", s.geom.n_rx},
                        {"n_snapshots", s.sampling.n_snapshots},
                        {"band", s.tf.n_subcarriers() == 128 ? "ht40" : "ht20"},
                        {"sample_interval", s.sampling.sample_interval},
                        {"paths", paths_to_json(s.paths)}};
    j["snr_db"] = s.snr_db ? nlohmann::json(*s.snr_db) : nlohmann::json(nullptr);
    return j;
}

Impairments impairments_from_json(const nlohmann::json& j) {
    Impairments imp;
    imp.cfo = j.value("cfo_hz", 0.0);
    imp.common_delay = j.value("common_delay_ns", 0.0) * 1e-9;
    imp.sfo_sto_max = j.value("sfo_sto_max_ns", 0.0) * 1e-9;
    if (imp.sfo_sto_max < 0.0) throw std::invalid_argument("impairments: sfo_sto_max_ns must be >= 0");
    for (double ns : j.value("csd_ns", std::vector<double>{})) imp.csd.push_back(ns * 1e-9);
    if (j.contains("phase_offsets")) {
        const auto& po = j.at("phase_offsets");
        imp.offsets.tx = po.value("tx", std::vector<double>{});
        imp.offsets.rx = po.value("rx", std::vector<double>{});
        imp.offsets.validate();
    }
    return imp;
}

nlohmann::json impairments_to_json(const Impairments& imp) {
    std::vector<double> csd;
    for (double s : imp.csd) csd.push_back(s * 1e9);
    return {{"cfo_hz", imp.cfo},
            {"common_delay_ns", imp.common_delay * 1e9},
            {"sfo_sto_max_ns", imp.sfo_sto_max * 1e9},
            {"csd_ns", csd},
            {"phase_offsets", {{"tx", imp.offsets.tx}, {"rx", imp.offsets.rx}}}};
}

}  // namespace mdtrack
