// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/core.hpp"

#include <vector>

namespace mpskit {

/// Boolean foreground mask, row-major, row 0 at the top.
struct Mask
{
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int w, int h, bool fill = false) : width(w), height(h), data(std::size_t(w) * h, fill ? 1 : 0) {}

    std::size_t size() const { return data.size(); }
    bool operator[](std::size_t i) const { return data[i] != 0; }
    bool at(int x, int y) const { return data[std::size_t(y) * width + x] != 0; }
    void set(std::size_t i, bool v) { data[i] = v ? 1 : 0; }

    std::size_t count() const
    {
        std::size_t c = 0;
        for (auto v : data)
            c += v != 0;
        return c;
    }

    bool operator==(const Mask&) const = default;
};

/// Per-band grayscale observations sharing one mask.
class MultispectralImage
{
public:
    MultispectralImage() = default;

    MultispectralImage(std::size_t bands, Mask mask)
        : bands_(bands), mask_(std::move(mask)), data_(bands * mask_.size(), 0.0)
    {
    }

    std::size_t bands() const { return bands_; }
    int width() const { return mask_.width; }
    int height() const { return mask_.height; }
    std::size_t pixels() const { return mask_.size(); }
    const Mask& mask() const { return mask_; }

    std::span<double> band(std::size_t j) { return {data_.data() + j * pixels(), pixels()}; }
    std::span<const double> band(std::size_t j) const { return {data_.data() + j * pixels(), pixels()}; }

    double& at(std::size_t j, std::size_t pixel) { return data_[j * pixels() + pixel]; }
    double at(std::size_t j, std::size_t pixel) const { return data_[j * pixels() + pixel]; }

    /// Throws ArgumentError unless all values are finite and >= 0.
    void validate() const
    {
        for (double v : data_)
            if (!std::isfinite(v) || v < 0.0)
                throw ArgumentError("image values must be finite and nonnegative");
    }

    MultispectralImage scaled(double alpha) const
    {
        MultispectralImage out = *this;
        for (double& v : out.data_)
            v *= alpha;
        return out;
    }

    /// Bands reordered so output band k is input band order[k].
    MultispectralImage permuted(std::span<const std::size_t> order) const
    {
        MultispectralImage out(order.size(), mask_);
        for (std::size_t k = 0; k < order.size(); ++k) {
            auto src = band(order[k]);
            std::copy(src.begin(), src.end(), out.band(k).begin());
        }
        return out;
    }

    bool operator==(const MultispectralImage&) const = default;

private:
    std::size_t bands_ = 0;
    Mask mask_;
    std::vector<double> data_;
};

/// Unit normals inside the mask; outside the mask the entry is unused (zero).
struct NormalMap
{
    int width = 0;
    int height = 0;
    std::vector<Vec3> normals;
    Mask mask;

    NormalMap() = default;
    NormalMap(int w, int h) : width(w), height(h), normals(std::size_t(w) * h, Vec3::Zero()), mask(w, h) {}

    std::size_t size() const { return normals.size(); }
    bool valid(std::size_t i) const { return mask[i]; }

    void set(std::size_t i, const Vec3& n)
    {
        normals[i] = n;
        mask.set(i, true);
    }

    void clear(std::size_t i)
    {
        normals[i] = Vec3::Zero();
        mask.set(i, false);
    }

    /// Invariant check: unit (1e-6) and camera-facing inside the mask.
    void validate() const
    {
        for (std::size_t i = 0; i < size(); ++i)
            if (mask[i] && (!is_unit(normals[i], 1e-6) || !(normals[i].z() > 0.0)))
                throw ArgumentError("normal map entry " + std::to_string(i) + " is not a camera-facing unit vector");
    }
};

/// Normals of a sphere viewed orthographically along -z. Pixel (x, y) has
/// center (x + 0.5, y + 0.5); world x runs right, world y runs up.
inline NormalMap sphere_normals(int width, int height, double cx, double cy, double radius)
{
    if (width <= 0 || height <= 0 || !(radius > 0.0))
        throw ArgumentError("sphere needs positive dimensions and radius");
    NormalMap map(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double u = (x + 0.5 - cx) / radius;
            double v = (cy - (y + 0.5)) / radius;
            double rr = u * u + v * v;
            if (rr < 1.0)
                map.set(std::size_t(y) * width + x, Vec3(u, v, std::sqrt(1.0 - rr)));
        }
    return map;
}

}  // namespace mpskit
