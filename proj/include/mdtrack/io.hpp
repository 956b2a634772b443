// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/calibration.hpp"
#include "mdtrack/experiments.hpp"
#include "mdtrack/localization.hpp"
#include "mdtrack/resolver.hpp"
#include "mdtrack/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdtrack {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed trace container; offset is the byte where parsing failed.
class TraceFormatError : public IoError {
public:
    TraceFormatError(const std::string& what, std::size_t offset);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Trace container, all fields little-endian:
///   "MDTRACK1"                       8 bytes
///   version (=1)                     u32
///   n_tx, n_rx, n_sc, n_t            u32 x 4
///   subcarrier_spacing, center_freq,
///   sample_interval                  f64 x 3
///   mask                             u8 x n_sc
///   samples                          (re, im) f64 pairs in [tx][rx][sc][t] order
inline constexpr std::uint32_t kTraceVersion = 1;

std::vector<std::uint8_t> encode_trace(const ChannelTensor& tensor);
ChannelTensor decode_trace(const std::vector<std::uint8_t>& bytes);

void write_trace(const std::filesystem::path& path, const ChannelTensor& tensor);
ChannelTensor read_trace(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);

// Paths serialize in degrees, nanoseconds and Hz with a complex attenuation.
nlohmann::json path_to_json(const PathParams& p);
PathParams path_from_json(const nlohmann::json& j);
nlohmann::json paths_to_json(const std::vector<PathParams>& paths);
std::vector<PathParams> paths_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const EstimateReport& report);
/// Paths, iteration count and convergence flag; the noise tensor is not stored.
EstimateReport report_from_json(const nlohmann::json& j);

Deployment deployment_from_json(const nlohmann::json& j);
nlohmann::json deployment_to_json(const Deployment& d);

CalibrationProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const CalibrationProfile& p);

nlohmann::json locate_to_json(const LocateResult& res);

/// Scenario document:
///   {"n_tx": 1, "n_rx": 8, "n_snapshots": 1, "band": "ht20" | "ht40",
///    "sample_interval": 0.025, "snr_db": 20, "paths": [...]}
/// Paths take either "atten": {"re", "im"} or "power_db" and "phase_deg".
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

/// {"cfo_hz", "common_delay_ns", "sfo_sto_max_ns", "csd_ns": [...],
///  "phase_offsets": {"tx": [...], "rx": [...]}}; every key optional.
Impairments impairments_from_json(const nlohmann::json& j);
nlohmann::json impairments_to_json(const Impairments& imp);

}  // namespace mdtrack
