// Copyright (C) 2026 The mdtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "mdtrack/localization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdtrack {

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point2 rotate(const Point2& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace

void Deployment::validate() const {
    if (!(baseline() > 0.0)) throw std::invalid_argument("deployment: tx and rx positions coincide");
    if (std::abs(std::hypot(rx_axis.x, rx_axis.y) - 1.0) > 1e-9)
        throw std::invalid_argument("deployment: rx_axis must be a unit vector");
    if (side != 1 && side != -1) throw std::invalid_argument("deployment: side must be +1 or -1");
    if (!(speed > 0.0)) throw std::invalid_argument("deployment: speed must be positive");
}

double Deployment::baseline() const { return dist(tx, rx); }

TargetFix locate_reflector(const PathParams& path, const Deployment& dep) {
    dep.validate();
    if (!(path.aoa > 0.0 && path.aoa < kPi)) throw std::domain_error("aoa outside (0, pi)");
    const double s = dep.speed * path.tof;
    const double d = dep.baseline();
    if (!(s > d)) throw std::domain_error("degenerate ellipse: path length not longer than the baseline");

    const Point2 u = rotate(dep.rx_axis, dep.side * path.aoa);
    const double cos_rel = (u.x * (dep.tx.x - dep.rx.x) + u.y * (dep.tx.y - dep.rx.y)) / d;
    const double r = (s * s - d * d) / (2.0 * (s - d * cos_rel));
    if (!(r > 0.0) || !std::isfinite(r)) throw std::domain_error("ray does not meet the ellipse");

    TargetFix fix;
    fix.position = {dep.rx.x + r * u.x, dep.rx.y + r * u.y};
    fix.source_path = path;
    return fix;
}

PathParams forward_path(const Point2& target, const Deployment& dep) {
    dep.validate();
    const double r = dist(target, dep.rx);
    if (!(r > 0.0)) throw std::domain_error("target coincides with the receiver");
    const double ux = (target.x - dep.rx.x) / r, uy = (target.y - dep.rx.y) / r;
    const double cross = dep.rx_axis.x * uy - dep.rx_axis.y * ux;
    if (cross * dep.side <= 0.0) throw std::domain_error("target is not on the configured side of the array axis");
    PathParams p;
    p.aoa = std::acos(std::clamp(ux * dep.rx_axis.x + uy * dep.rx_axis.y, -1.0, 1.0));
    p.tof = (dist(target, dep.tx) + r) / dep.speed;
    return p;
}

std::vector<Mobility> classify_mobility(const EstimateReport& report, double doppler_floor) {
    std::vector<Mobility> out;
    out.reserve(report.paths.size());
    for (const auto& p : report.paths)
        out.push_back(std::abs(p.doppler) > doppler_floor ? Mobility::Mobile : Mobility::Static);
    return out;
}

LocateResult locate_all(const EstimateReport& report, const Deployment& dep, const LocateConfig& cfg) {
    LocateResult res;
    if (report.paths.empty()) return res;
    res.direct = select_direct_path(report.paths, cfg.tof_step);
    const auto mobility = classify_mobility(report, cfg.doppler_floor);
    for (std::size_t l = 0; l < report.paths.size(); ++l) {
        if (l == res.direct) continue;
        try {
            TargetFix fix = locate_reflector(report.paths[l], dep);
            fix.mobility = mobility[l];
            res.fixes.push_back(fix);
        } catch (const std::domain_error& e) {
            res.rejected.push_back({l, e.what()});
        }
    }
    return res;
}

}  // namespace mdtrack
