// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/image.hpp"
#include "mpskit/render.hpp"

namespace mpskit::metrics {

/// Squared l2 distance between two intensity vectors. With `gauge` set both
/// are max-normalized first.
inline double intensity_error(const EquivalentIntensities& s, const EquivalentIntensities& s_hat, bool gauge = false)
{
    if (s.size() != s_hat.size())
        throw ArgumentError("intensity_error: length mismatch");
    const auto& a = gauge ? s.gauge_normalized() : s;
    const auto& b = gauge ? s_hat.gauge_normalized() : s_hat;
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double d = a.values[j] - b.values[j];
        acc += d * d;
    }
    return acc;
}

namespace detail {

/// Cosine of the angle, re-normalized so identical vectors give exactly 1,
/// and clamped to [-1, 1] against rounding overshoot.
inline double cos_angle(const Vec3& a, const Vec3& b)
{
    return std::clamp(a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm()), -1.0, 1.0);
}

template <typename Fn>
double mean_over_mask(const NormalMap& n, const NormalMap& n_hat, Fn&& term)
{
    if (n.width != n_hat.width || n.height != n_hat.height)
        throw ArgumentError("normal maps differ in size");
    if (!(n.mask == n_hat.mask))
        throw ArgumentError("normal maps differ in mask");
    double acc = 0.0;
    std::size_t p = 0;
    for (std::size_t i = 0; i < n.size(); ++i)
        if (n.valid(i)) {
            acc += term(n.normals[i], n_hat.normals[i]);
            ++p;
        }
    if (p == 0)
        throw ArgumentError("normal maps have an empty mask");
    return acc / double(p);
}

}  // namespace detail

/// Mean of 1 - n.n_hat over the mask.
inline double cosine_loss(const NormalMap& n, const NormalMap& n_hat)
{
    return detail::mean_over_mask(n, n_hat, [](const Vec3& a, const Vec3& b) { return 1.0 - detail::cos_angle(a, b); });
}

/// Mean angle in degrees. Zero exactly when cosine_loss is zero.
inline double mean_angular_error(const NormalMap& n, const NormalMap& n_hat)
{
    return detail::mean_over_mask(n, n_hat, [](const Vec3& a, const Vec3& b) {
        return std::acos(detail::cos_angle(a, b)) * 180.0 / M_PI;
    });
}

/// Copy of `n` restricted to pixels valid in both maps.
inline NormalMap restrict_to(const NormalMap& n, const NormalMap& other)
{
    NormalMap out = n;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!other.valid(i))
            out.clear(i);
    return out;
}

}  // namespace mpskit::metrics
