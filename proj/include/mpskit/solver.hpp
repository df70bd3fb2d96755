// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/image.hpp"
#include "mpskit/spectral.hpp"

#include <Eigen/QR>

namespace mpskit::solver {

/// Why a pixel has no normal.
enum class Reason : std::uint8_t {
    ok = 0,
    outside_mask,
    unlit,             ///< no positive observation
    under_determined,  ///< fewer than 3 lit observations, or lit directions coplanar
    trimmed_out,       ///< fewer than 3 observations left after thresholding
    back_facing,       ///< solution points away from the camera
};

inline const char* to_string(Reason r)
{
    switch (r) {
    case Reason::ok: return "ok";
    case Reason::outside_mask: return "outside_mask";
    case Reason::unlit: return "unlit";
    case Reason::under_determined: return "under_determined";
    case Reason::trimmed_out: return "trimmed_out";
    case Reason::back_facing: return "back_facing";
    }
    return "unknown";
}

struct SolveReport
{
    NormalMap normals;
    std::vector<double> residual;
    std::vector<std::uint8_t> bands_used;
    std::vector<Reason> reason;

    std::size_t count(Reason r) const { return std::size_t(std::count(reason.begin(), reason.end(), r)); }
};

struct RobustOptions
{
    double low_pct = 0.15;
    double high_pct = 0.15;
};

namespace detail {

inline void check_rig(const MultispectralImage& img, const LightingRig& rig)
{
    if (rig.size() != img.bands())
        throw ArgumentError("rig light count does not match image band count");
    if (img.bands() < 3)
        throw RigError("normal estimation needs at least 3 bands");
    Eigen::MatrixXd L(Eigen::Index(rig.size()), 3);
    for (std::size_t j = 0; j < rig.size(); ++j)
        L.row(Eigen::Index(j)) = rig.lights[j].direction.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(L);
    qr.setThreshold(1e-9);
    if (qr.rank() < 3)
        throw RigError("light directions are coplanar");
}

/// Number discarded from one end for a fraction of k observations.
inline std::size_t discard_count(double pct, std::size_t k)
{
    if (pct <= 0.0)
        return 0;
    return std::size_t(std::ceil(pct * double(k) - 1e-9));
}

struct PixelSolution
{
    Vec3 normal = Vec3::Zero();
    double residual = 0.0;
    std::uint8_t used = 0;
    Reason reason = Reason::ok;
};

inline PixelSolution solve_subset(const MultispectralImage& img, const LightingRig& rig, std::size_t pixel,
                                  std::span<const std::uint32_t> bands, Reason shortfall)
{
    PixelSolution s;
    s.used = std::uint8_t(std::min<std::size_t>(bands.size(), 255));
    if (bands.size() < 3) {
        s.reason = shortfall;
        return s;
    }
    const Eigen::Index k = Eigen::Index(bands.size());
    Eigen::MatrixXd L(k, 3);
    Eigen::VectorXd m(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        L.row(r) = rig.lights[bands[r]].direction.transpose();
        m(r) = img.at(bands[r], pixel);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(L);
    qr.setThreshold(1e-9);
    if (qr.rank() < 3) {
        s.reason = Reason::under_determined;
        return s;
    }
    Vec3 b = qr.solve(m);
    s.residual = (L * b - m).norm();
    double len = b.norm();
    if (!(len > 0.0) || !(b.z() > 0.0)) {
        s.reason = Reason::back_facing;
        return s;
    }
    s.normal = b / len;
    return s;
}

template <typename Select>
SolveReport solve_each(const MultispectralImage& img, const LightingRig& rig, unsigned threads, Select&& select)
{
    check_rig(img, rig);
    img.validate();
    const std::size_t N = img.pixels();
    SolveReport rep;
    rep.normals = NormalMap(img.width(), img.height());
    rep.residual.assign(N, 0.0);
    rep.bands_used.assign(N, 0);
    rep.reason.assign(N, Reason::outside_mask);
    std::vector<PixelSolution> sol(N);
    const auto rows = std::size_t(img.height());
    const auto width = std::size_t(img.width());
    parallel_for(rows, threads, [&](std::size_t y) {
        std::vector<std::uint32_t> lit;
        for (std::size_t x = 0; x < width; ++x) {
            std::size_t i = y * width + x;
            if (!img.mask()[i])
                continue;
            lit.clear();
            for (std::size_t j = 0; j < img.bands(); ++j)
                if (img.at(j, i) > 0.0)
                    lit.push_back(std::uint32_t(j));
            if (lit.empty()) {
                sol[i].reason = Reason::unlit;
                continue;
            }
            sol[i] = select(i, lit);
        }
    });
    for (std::size_t i = 0; i < N; ++i) {
        if (!img.mask()[i])
            continue;
        rep.reason[i] = sol[i].reason;
        rep.bands_used[i] = sol[i].used;
        rep.residual[i] = sol[i].residual;
        if (sol[i].reason == Reason::ok)
            rep.normals.set(i, sol[i].normal);
    }
    return rep;
}

}  // namespace detail

/// Per-pixel least squares over the lit (positive) observations.
inline SolveReport solve_lambertian(const MultispectralImage& imgN, const LightingRig& rig, unsigned threads = 1)
{
    return detail::solve_each(imgN, rig, threads, [&](std::size_t i, std::span<const std::uint32_t> lit) {
        return detail::solve_subset(imgN, rig, i, lit, Reason::under_determined);
    });
}

/// Position thresholding: per pixel, rank lit observations by value (ties by
/// band index), drop ceil(low_pct k) darkest and ceil(high_pct k) brightest,
/// then solve on the rest.
inline SolveReport solve_robust(const MultispectralImage& imgN, const LightingRig& rig, const RobustOptions& opts = {},
                                unsigned threads = 1)
{
    if (!(opts.low_pct >= 0.0 && opts.high_pct >= 0.0 && opts.low_pct + opts.high_pct < 1.0))
        throw ArgumentError("trim percentages must be >= 0 and sum below 1");
    return detail::solve_each(imgN, rig, threads, [&](std::size_t i, std::span<const std::uint32_t> lit) {
        if (lit.size() < 3)
            return detail::solve_subset(imgN, rig, i, lit, Reason::under_determined);
        std::vector<std::uint32_t> order(lit.begin(), lit.end());
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return imgN.at(a, i) < imgN.at(b, i); });
        std::size_t lo = detail::discard_count(opts.low_pct, order.size());
        std::size_t hi = detail::discard_count(opts.high_pct, order.size());
        std::vector<std::uint32_t> keep;
        if (lo + hi < order.size())
            keep.assign(order.begin() + std::ptrdiff_t(lo), order.end() - std::ptrdiff_t(hi));
        std::sort(keep.begin(), keep.end());
        return detail::solve_subset(imgN, rig, i, keep, Reason::trimmed_out);
    });
}

}  // namespace mpskit::solver
