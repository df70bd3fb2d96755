// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpskit/metrics.hpp"

#include "test_util.hpp"

#include <Eigen/Geometry>
#include <gtest/gtest.h>

using namespace mpskit;

namespace {

NormalMap uniform_map(int w, int h, const Vec3& n)
{
    NormalMap m(w, h);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.set(i, n);
    return m;
}

NormalMap random_map(Rng& rng, int w, int h)
{
    NormalMap m(w, h);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (rng.uniform() < 0.8)
            m.set(i, (test::random_hemisphere(rng) + Vec3(0, 0, 0.2)).normalized());
    return m;
}

}  // namespace

TEST(IntensityError, Cases)
{
    EquivalentIntensities a{{1.0, 0.5, 0.25}};
    EXPECT_EQ(metrics::intensity_error(a, a), 0.0);
    EXPECT_EQ(metrics::intensity_error({{1.0, 0.0}}, {{0.0, 1.0}}), 2.0);
    EXPECT_THROW(metrics::intensity_error(a, {{1.0}}), ArgumentError);
    // Gauge flag removes global scale.
    EXPECT_NEAR(metrics::intensity_error(a, {{4.0, 2.0, 1.0}}, true), 0.0, 1e-30);

    Rng rng(8);
    for (int t = 0; t < 20; ++t) {
        EquivalentIntensities s, h;
        double acc = 0.0;
        for (int j = 0; j < 9; ++j) {
            s.values.push_back(rng.uniform(0.1, 1.0));
            h.values.push_back(rng.uniform(0.1, 1.0));
            acc += std::pow(s.values.back() - h.values.back(), 2);
        }
        EXPECT_NEAR(metrics::intensity_error(s, h), acc, 1e-14);
    }
}

TEST(CosineLoss, Extremes)
{
    Vec3 z(0, 0, 1), x(1, 0, 0);
    auto a = uniform_map(4, 3, z);
    EXPECT_EQ(metrics::cosine_loss(a, a), 0.0);
    EXPECT_EQ(metrics::mean_angular_error(a, a), 0.0);
    // Antipodal and orthogonal entries bypass the map invariant on purpose.
    auto b = a;
    for (auto& n : b.normals)
        n = -z;
    EXPECT_DOUBLE_EQ(metrics::cosine_loss(a, b), 2.0);
    auto c = a;
    for (auto& n : c.normals)
        n = x;
    EXPECT_DOUBLE_EQ(metrics::cosine_loss(a, c), 1.0);
    EXPECT_NEAR(metrics::mean_angular_error(a, c), 90.0, 1e-12);
}

TEST(AngularError, MatchesPerPixelArccos)
{
    Rng rng(31);
    auto a = random_map(rng, 16, 12);
    auto b = a;
    double sum = 0.0;
    std::size_t p = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (!b.valid(i))
            continue;
        Vec3 n = (b.normals[i] + 0.3 * test::random_unit(rng)).normalized();
        if (n.z() <= 0)
            n.z() = -n.z();
        b.normals[i] = n;
        sum += std::acos(std::min(1.0, a.normals[i].dot(n))) * 180.0 / M_PI;
        ++p;
    }
    EXPECT_NEAR(metrics::mean_angular_error(a, b), sum / double(p), 1e-9);
    EXPECT_GT(metrics::mean_angular_error(a, b), 0.0);
}

TEST(AngularError, RotationInvariant)
{
    Rng rng(2);
    auto a = random_map(rng, 10, 10);
    auto b = random_map(rng, 10, 10);
    b = metrics::restrict_to(b, a);
    a = metrics::restrict_to(a, b);
    Eigen::Matrix3d R = Eigen::AngleAxisd(1.1, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    auto ra = a, rb = b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ra.normals[i] = R * a.normals[i];
        rb.normals[i] = R * b.normals[i];
    }
    EXPECT_NEAR(metrics::mean_angular_error(a, b), metrics::mean_angular_error(ra, rb), 1e-9);
    EXPECT_NEAR(metrics::cosine_loss(a, b), metrics::cosine_loss(ra, rb), 1e-12);
}

TEST(AngularError, ZeroIffIdentical)
{
    Rng rng(4);
    auto a = random_map(rng, 8, 8);
    EXPECT_EQ(metrics::mean_angular_error(a, a), 0.0);
    EXPECT_EQ(metrics::cosine_loss(a, a), 0.0);
    auto b = a;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.valid(i)) {
            b.normals[i] = (b.normals[i] + Vec3(1e-3, 0, 0)).normalized();
            break;
        }
    EXPECT_GT(metrics::mean_angular_error(a, b), 0.0);
    EXPECT_GT(metrics::cosine_loss(a, b), 0.0);
}

TEST(Metrics, MaskErrors)
{
    auto a = uniform_map(4, 4, Vec3(0, 0, 1));
    auto b = a;
    b.clear(3);
    EXPECT_THROW(metrics::cosine_loss(a, b), ArgumentError);
    EXPECT_THROW(metrics::mean_angular_error(a, uniform_map(4, 5, Vec3(0, 0, 1))), ArgumentError);
    NormalMap empty(4, 4);
    EXPECT_THROW(metrics::mean_angular_error(empty, empty), ArgumentError);
    auto r = metrics::restrict_to(a, b);
    EXPECT_EQ(r.mask, b.mask);
    EXPECT_EQ(metrics::cosine_loss(r, b), 0.0);
}
