// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdtrack/calibration.hpp"
#include "mdtrack/resolver.hpp"

#include <string>
#include <vector>

namespace mdtrack {

/// Planar link geometry. AoA is measured at the receiver from rx_axis; the
/// array cannot tell the two sides of its axis apart, so `side` picks the
/// half-plane: +1 rotates the axis counter-clockwise by the AoA, -1 clockwise.
struct Deployment {
    Point2 tx;
    Point2 rx;
    Point2 rx_axis{1.0, 0.0};
    double speed = kSpeedOfLight;
    int side = 1;

    void validate() const;
    double baseline() const;
    double direct_tof() const { return baseline() / speed; }
};

enum class Mobility { Static, Mobile };

struct TargetFix {
    Point2 position;
    PathParams source_path;
    Mobility mobility = Mobility::Static;
};

/// Reflector position from a calibrated path: intersection of the ellipse
/// |x - tx| + |x - rx| = speed * tof with the AoA ray from rx. Throws
/// std::domain_error when the ellipse is degenerate (path not longer than
/// the baseline) or the angle is outside (0, pi).
TargetFix locate_reflector(const PathParams& path, const Deployment& dep);

/// AoA and ToF a reflector at `target` would produce. Throws if the target
/// is on the array axis line's other side than dep.side.
PathParams forward_path(const Point2& target, const Deployment& dep);

/// Static/mobile flag per path, in report order.
std::vector<Mobility> classify_mobility(const EstimateReport& report, double doppler_floor = 0.5);

struct LocateConfig {
    double doppler_floor = 0.5;
    double tof_step = 0.5e-9;
};

struct RejectedPath {
    std::size_t index = 0;
    std::string reason;
};

struct LocateResult {
    std::vector<TargetFix> fixes;
    std::vector<RejectedPath> rejected;
    /// Index of the direct path in the report (not located).
    std::size_t direct = 0;
};

/// Locates every non-direct path; per-path failures are collected.
LocateResult locate_all(const EstimateReport& report, const Deployment& dep, const LocateConfig& cfg = {});

}  // namespace mdtrack
