// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/image.hpp"

#include <fftw3.h>

#include <memory>
#include <mutex>

namespace mpskit {

/// Height field in pixel units, zero-mean over its mask.
struct DepthMap
{
    int width = 0;
    int height = 0;
    std::vector<double> depth;
    Mask mask;

    double at(int x, int y) const { return depth[std::size_t(y) * width + x]; }
};

namespace integrate {

inline constexpr double kMinNormalZ = 0.05;

namespace detail {

// FFTW planning is not reentrant.
inline std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

/// In-place 2-D DCT-II (kind = FFTW_REDFT10) or DCT-III (FFTW_REDFT01),
/// unnormalized as in FFTW.
inline void dct2d(std::vector<double>& data, int width, int height, fftw_r2r_kind kind)
{
    std::unique_ptr<double, decltype(&fftw_free)> buf(
        static_cast<double*>(fftw_malloc(sizeof(double) * data.size())), &fftw_free);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_r2r_2d(height, width, buf.get(), buf.get(), kind, kind, FFTW_ESTIMATE);
    }
    std::copy(data.begin(), data.end(), buf.get());
    fftw_execute(plan);
    std::copy(buf.get(), buf.get() + data.size(), data.begin());
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

}  // namespace detail

/// Subtracts the mean over `mask` and zeroes pixels outside it.
inline void remove_mask_mean(std::vector<double>& z, const Mask& mask)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < z.size(); ++i)
        if (mask[i]) {
            sum += z[i];
            ++n;
        }
    double mean = n > 0 ? sum / double(n) : 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = mask[i] ? z[i] - mean : 0.0;
}

/// Least-squares depth from a gradient field on the full rectangle, solved in
/// the cosine basis (Frankot-Chellappa with even-symmetric extension).
/// gx(x, y) ~ z(x+1, y) - z(x, y) and gy(x, y) ~ z(x, y+1) - z(x, y), each of
/// size width*height; the last column of gx and the last row of gy are unused.
inline std::vector<double> poisson_dct(std::span<const double> gx, std::span<const double> gy, int width,
                                       int height)
{
    const std::size_t W = std::size_t(width), H = std::size_t(height);
    std::vector<double> div(W * H, 0.0);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
            std::size_t i = y * W + x;
            double d = 0.0;
            if (x + 1 < W)
                d += gx[i];
            if (x > 0)
                d -= gx[i - 1];
            if (y + 1 < H)
                d += gy[i];
            if (y > 0)
                d -= gy[i - W];
            div[i] = d;
        }
    detail::dct2d(div, width, height, FFTW_REDFT10);
    for (std::size_t l = 0; l < H; ++l)
        for (std::size_t k = 0; k < W; ++k) {
            double denom = (2.0 * std::cos(M_PI * double(k) / double(W)) - 2.0) +
                           (2.0 * std::cos(M_PI * double(l) / double(H)) - 2.0);
            div[l * W + k] = (k == 0 && l == 0) ? 0.0 : div[l * W + k] / denom;
        }
    detail::dct2d(div, width, height, FFTW_REDFT01);
    const double norm = 1.0 / (4.0 * double(W) * double(H));
    for (double& v : div)
        v *= norm;
    return div;
}

/// Depth from a normal map. Slopes are p = -n_x/n_z along columns and
/// +n_y/n_z along rows (world y points up). Pixels outside the mask carry
/// zero gradient, so edges crossing the mask boundary get half the inside
/// slope.
inline DepthMap integrate_fc(const NormalMap& normals)
{
    const int W = normals.width, H = normals.height;
    if (W < 1 || H < 1)
        throw ArgumentError("normal map is empty");
    std::vector<std::pair<int, int>> bad;
    std::vector<double> p(normals.size(), 0.0), q(normals.size(), 0.0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            std::size_t i = std::size_t(y) * W + x;
            if (!normals.valid(i))
                continue;
            const Vec3& n = normals.normals[i];
            if (!(n.z() >= kMinNormalZ)) {
                bad.emplace_back(x, y);
                continue;
            }
            p[i] = -n.x() / n.z();
            q[i] = n.y() / n.z();
        }
    if (!bad.empty()) {
        std::string msg = std::to_string(bad.size()) + " in-mask normals have n_z below " +
                          std::to_string(kMinNormalZ) + ", first at (" + std::to_string(bad[0].first) + ", " +
                          std::to_string(bad[0].second) + ")";
        throw DegenerateSlopeError(msg, std::move(bad));
    }
    std::vector<double> gx(normals.size(), 0.0), gy(normals.size(), 0.0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            std::size_t i = std::size_t(y) * W + x;
            if (x + 1 < W)
                gx[i] = 0.5 * (p[i] + p[i + 1]);
            if (y + 1 < H)
                gy[i] = 0.5 * (q[i] + q[i + std::size_t(W)]);
        }
    DepthMap out{W, H, poisson_dct(gx, gy, W, H), normals.mask};
    remove_mask_mean(out.depth, out.mask);
    return out;
}

}  // namespace integrate
}  // namespace mpskit
