// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/image.hpp"
#include "mpskit/spectral.hpp"
#include "mpskit/srd.hpp"

#include <optional>
#include <variant>

namespace mpskit {

/// Per-band scalars absorbing radiance, light spectrum, camera sensitivity
/// and the material's spectral component.
struct EquivalentIntensities
{
    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    void validate() const
    {
        for (double v : values)
            if (!std::isfinite(v) || !(v > 0.0))
                throw ArgumentError("equivalent intensities must be finite and positive");
    }

    /// Copy scaled so the largest entry is 1.
    EquivalentIntensities gauge_normalized() const
    {
        if (values.empty())
            return *this;
        double m = *std::max_element(values.begin(), values.end());
        if (!(m > 0.0))
            throw ArgumentError("cannot gauge-normalize non-positive intensities");
        EquivalentIntensities out = *this;
        for (double& v : out.values)
            v /= m;
        return out;
    }

    static EquivalentIntensities ones(std::size_t n) { return {std::vector<double>(n, 1.0)}; }
};

namespace render {

struct SphereShape
{
    double cx = 64.0;
    double cy = 64.0;
    double radius = 60.0;
    int width = 128;
    int height = 128;
};

using Shape = std::variant<SphereShape, NormalMap>;

struct JitterRange
{
    double lo = 0.1;
    double hi = 1.0;
};

struct SceneSpec
{
    Shape shape;
    SpectralBrdfTable material;
    LightingRig rig;
    double noise_sigma = 0.0;
    JitterRange jitter{0.1, 1.0};

    void validate() const
    {
        if (!(jitter.lo > 0.0) || !(jitter.hi <= 1.0) || jitter.lo > jitter.hi)
            throw ArgumentError("jitter range must lie in (0, 1] with lo <= hi");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
            throw ArgumentError("noise sigma must be finite and >= 0");
        rig.validate();
        if (const auto* map = std::get_if<NormalMap>(&shape))
            map->validate();
    }
};

inline NormalMap shape_normals(const Shape& shape)
{
    if (const auto* s = std::get_if<SphereShape>(&shape))
        return sphere_normals(s->width, s->height, s->cx, s->cy, s->radius);
    return std::get<NormalMap>(shape);
}

/// Full image formation for one pixel and band, with the spectral integral
/// taken by the trapezoidal rule on the rig grid nodes inside the band.
inline double render_pixel(const Vec3& n, const LightingRig& rig, std::size_t j, const SpectralBrdfTable& material)
{
    if (j >= rig.size())
        throw ArgumentError("band index " + std::to_string(j) + " out of range");
    const Vec3& l = rig.lights[j].direction;
    double nl = n.dot(l);
    if (nl <= 0.0)
        return 0.0;
    double integral = band_integral(
        rig, j, [&](std::size_t k) { return sample_brdf(material, n, l, rig.view, rig.wavelengths[k]); });
    return nl * integral;
}

/// Reduced form: equivalent intensity times geometric reflectance times shading.
template <typename GeometricFn>
double render_pixel_reduced(const Vec3& n, const Vec3& l, double e_prime, GeometricFn&& r_g)
{
    double nl = n.dot(l);
    if (nl <= 0.0)
        return 0.0;
    return e_prime * r_g(n, l) * nl;
}

/// e_j times the band integral of spectral * C_j * E_j.
inline double equivalent_intensity(const LightingRig& rig, std::size_t j, std::span<const double> spectral)
{
    if (spectral.size() != rig.wavelengths.size())
        throw ArgumentError("spectral component must be tabulated on the rig grid");
    double v = band_integral(rig, j, [&](std::size_t k) { return spectral[k]; });
    if (!(v > 0.0))
        throw DegenerateBandError(j, "band " + std::to_string(j) + " has zero equivalent intensity");
    return v;
}

inline double equivalent_intensity(const LightingRig& rig, std::size_t j, const Eigen::VectorXd& spectral)
{
    return equivalent_intensity(rig, j, std::span<const double>(spectral.data(), std::size_t(spectral.size())));
}

/// Ground-truth equivalent intensities for a uniform material under `rig`.
inline EquivalentIntensities material_intensities(const SpectralBrdfTable& material, const LightingRig& rig)
{
    auto dirs = rig.directions();
    Eigen::VectorXd rs = srd::spectral_component(material, rig.wavelengths, dirs, rig.view);
    EquivalentIntensities e;
    for (std::size_t j = 0; j < rig.size(); ++j)
        e.values.push_back(equivalent_intensity(rig, j, rs));
    return e;
}

struct RenderResult
{
    MultispectralImage image;
    NormalMap normals;
    EquivalentIntensities e_prime;
    /// Rig after radiance jitter; e_prime is consistent with it.
    LightingRig rig;
    std::vector<double> jitter;
};

/// Renders all rig bands of `scene`. Random draws come from per-band streams,
/// so the output is independent of `threads`.
inline RenderResult render_image(const SceneSpec& scene, std::uint64_t seed, unsigned threads = 1)
{
    scene.validate();
    RenderResult out;
    out.normals = shape_normals(scene.shape);
    out.rig = scene.rig;
    const std::size_t f = scene.rig.size();
    for (std::size_t j = 0; j < f; ++j) {
        Rng rng = Rng::stream(seed, Stream::jitter, j);
        double m = scene.jitter.lo == scene.jitter.hi ? scene.jitter.lo
                                                      : rng.uniform(scene.jitter.lo, scene.jitter.hi);
        out.jitter.push_back(m);
        out.rig.lights[j].radiance *= m;
    }
    out.e_prime = material_intensities(scene.material, out.rig);

    out.image = MultispectralImage(f, out.normals.mask);
    const NormalMap& normals = out.normals;
    parallel_for(f, threads, [&](std::size_t j) {
        auto plane = out.image.band(j);
        for (std::size_t i = 0; i < normals.size(); ++i)
            if (normals.valid(i))
                plane[i] = render_pixel(normals.normals[i], out.rig, j, scene.material);
        if (scene.noise_sigma > 0.0) {
            Rng rng = Rng::stream(seed, Stream::noise, j);
            for (std::size_t i = 0; i < normals.size(); ++i)
                if (normals.valid(i))
                    plane[i] = std::max(0.0, plane[i] + scene.noise_sigma * rng.gaussian());
        }
    });
    return out;
}

/// Sorted uniformly random t-subset of {0, ..., f-1}.
inline std::vector<std::size_t> select_directions(std::size_t f, std::size_t t, std::uint64_t seed,
                                                  std::uint64_t stream_index = 0)
{
    if (t == 0 || t > f)
        throw ArgumentError("band count t=" + std::to_string(t) + " must lie in [1, f=" + std::to_string(f) + "]");
    std::vector<std::size_t> idx(f);
    for (std::size_t i = 0; i < f; ++i)
        idx[i] = i;
    Rng rng = Rng::stream(seed, Stream::select, stream_index);
    for (std::size_t i = 0; i < t; ++i) {
        std::size_t k = i + std::size_t(rng.below(f - i));
        std::swap(idx[i], idx[k]);
    }
    idx.resize(t);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace render
}  // namespace mpskit
