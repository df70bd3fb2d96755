// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpskit/render.hpp"

#include "test_util.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

using namespace mpskit;

namespace {

/// Single-band rig over [lo, hi] with C E given by `ce` at each grid node.
LightingRig one_band_rig(const WavelengthGrid& grid, double lo, double hi, const std::function<double(double)>& ce,
                         Vec3 dir = Vec3(0, 0, 1), double radiance = 1.0)
{
    LightingRig rig;
    rig.wavelengths = grid;
    Light L;
    L.direction = dir;
    L.radiance = radiance;
    L.band = {lo, hi};
    for (double l : grid.values()) {
        bool in = L.band.contains(l);
        L.spectrum.push_back(in ? 1.0 : 0.0);
        L.sensitivity.push_back(in ? ce(l) : 0.0);
    }
    rig.lights.push_back(L);
    rig.validate();
    return rig;
}

/// Trapezoid of f on a grid refined `factor` times inside [lo, hi].
double refined_trapezoid(double lo, double hi, std::size_t intervals, const std::function<double(double)>& f)
{
    double acc = 0.0, h = (hi - lo) / double(intervals);
    for (std::size_t i = 0; i < intervals; ++i) {
        double a = lo + h * double(i), b = a + h;
        acc += 0.5 * h * (f(a) + f(b));
    }
    return acc;
}

LightingRig orthogonal_rig()
{
    auto rig = make_uniform_rig(3, WavelengthGrid::uniform(400, 700, 31));
    rig.lights[0].direction = Vec3(1, 0, 0);
    rig.lights[1].direction = Vec3(0, 1, 0);
    rig.lights[2].direction = Vec3(0, 0, 1);
    return rig;
}

render::SceneSpec lambertian_sphere(LightingRig rig, int res = 64)
{
    render::SceneSpec s;
    s.shape = render::SphereShape{res / 2.0, res / 2.0, res * 0.45, res, res};
    s.material = make_lambertian_table("white", WavelengthGrid::uniform(360, 1000, 5), [](double) { return 1.0; });
    s.rig = std::move(rig);
    s.jitter = {1.0, 1.0};
    return s;
}

double gaussian_ce(double l) { return std::exp(-0.5 * std::pow((l - 550.0) / 15.0, 2)); }

}  // namespace

TEST(RenderPixel, UnitFactorsGiveOne)
{
    auto rig = make_uniform_rig(1, WavelengthGrid::uniform(400, 700, 11));
    auto white = make_lambertian_table("w", WavelengthGrid({400, 700}), [](double) { return 1.0; });
    EXPECT_NEAR(render::render_pixel(rig.lights[0].direction, rig, 0, white), 1.0, 1e-14);
}

TEST(RenderPixel, AttachedShadowIsZero)
{
    auto rig = orthogonal_rig();
    auto mat = make_phong_table("p", WavelengthGrid({360, 1000}), [](double) { return 0.5; },
                                [](double) { return 3.0; }, 10.0);
    EXPECT_EQ(render::render_pixel(Vec3(-1, 0, 0), rig, 0, mat), 0.0);
    EXPECT_EQ(render::render_pixel(Vec3(0, -0.6, 0.8), rig, 1, mat), 0.0);
    EXPECT_THROW(render::render_pixel(Vec3(0, 0, 1), rig, 3, mat), ArgumentError);
}

TEST(RenderPixel, MatchesRefinedQuadratureForSpecularLobe)
{
    // Table wavelength nodes coincide with rig nodes; C E is a Gaussian.
    WavelengthGrid table_wl = WavelengthGrid::uniform(500, 600, 11);
    auto mat = make_phong_table(
        "lobe", table_wl, [](double l) { return 0.05 + l / 6000.0; }, [](double l) { return 1.0 + (l - 500) / 50.0; },
        400.0, 33, 1025);
    WavelengthGrid grid = WavelengthGrid::uniform(500, 600, 401);
    auto rig = one_band_rig(grid, 500, 600, gaussian_ce,
                            Vec3(std::sin(20 * M_PI / 180), 0, std::cos(20 * M_PI / 180)), 1.7);
    Vec3 n(0, 0, 1);
    const Vec3& l = rig.lights[0].direction;
    double v = render::render_pixel(n, rig, 0, mat);
    double oracle = 1.7 * n.dot(l) * refined_trapezoid(500, 600, 4000, [&](double lam) {
                        return sample_brdf(mat, n, l, kFrontalView, lam) * gaussian_ce(lam);
                    });
    EXPECT_GT(v, 0.0);
    EXPECT_NEAR(v, oracle, 1e-6 * oracle);
}

TEST(RenderPixelReduced, Values)
{
    auto one = [](const Vec3&, const Vec3&) { return 1.0; };
    Vec3 n(0, 0, 1), l(std::sqrt(0.75), 0, 0.5);
    EXPECT_NEAR(render::render_pixel_reduced(n, l, 2.0, one), 1.0, 1e-15);
    EXPECT_EQ(render::render_pixel_reduced(n, Vec3(0, 0.6, -0.8), 2.0, one), 0.0);
}

TEST(RenderPixelReduced, EqualsFullRenderForSeparableMaterials)
{
    Rng rng(101);
    WavelengthGrid grid = WavelengthGrid::uniform(400, 700, 61);
    auto rig = make_uniform_rig(6, grid);
    for (int m = 0; m < 5; ++m) {
        double mu = rng.uniform(420, 680), sig = rng.uniform(30, 120), shin = rng.uniform(5, 80), ks = rng.uniform(0, 2);
        auto spectrum = [=](double l) { return 0.05 + std::exp(-0.5 * std::pow((l - mu) / sig, 2)); };
        auto mat = SpectralBrdfTable::tabulate("sep", WavelengthGrid::uniform(400, 700, 16), 9, 129,
                                               [&](double l, double a, double b) {
                                                   return spectrum(l) * (0.3 + 0.2 * a + ks * std::pow(b, shin));
                                               });
        auto e = render::material_intensities(mat, rig);
        auto rs = srd::spectral_component(mat, rig.wavelengths, rig.directions());
        srd::GeometricComponent rg(mat, rig.wavelengths, rs);
        for (int k = 0; k < 40; ++k) {
            Vec3 n = test::random_hemisphere(rng);
            std::size_t j = std::size_t(rng.below(rig.size()));
            double full = render::render_pixel(n, rig, j, mat);
            double reduced = render::render_pixel_reduced(n, rig.lights[j].direction, e.values[j], rg);
            if (full == 0.0) {
                EXPECT_EQ(reduced, 0.0);
                continue;
            }
            EXPECT_LT(std::abs(full - reduced) / full, 1e-9);
        }
    }
}

TEST(EquivalentIntensity, BoxcarAndDegenerate)
{
    WavelengthGrid grid = WavelengthGrid::uniform(400, 700, 31);
    auto rig = make_uniform_rig(2, grid, 30.0, 3.0);
    std::vector<double> ones(grid.size(), 1.0), zeros(grid.size(), 0.0);
    EXPECT_NEAR(render::equivalent_intensity(rig, 0, ones), 3.0, 1e-13);
    EXPECT_THROW(render::equivalent_intensity(rig, 1, zeros), DegenerateBandError);
    // Nonzero elsewhere but zero on the band is still degenerate.
    std::vector<double> off = zeros;
    for (std::size_t k = 0; k < grid.size(); ++k)
        off[k] = rig.lights[0].band.contains(grid[k]) ? 0.0 : 1.0;
    EXPECT_THROW(render::equivalent_intensity(rig, 0, off), DegenerateBandError);
}

TEST(EquivalentIntensity, MatchesRefinedQuadrature)
{
    WavelengthGrid grid = WavelengthGrid::uniform(500, 600, 401);
    auto rig = one_band_rig(grid, 500, 600, gaussian_ce, Vec3(0, 0, 1), 2.5);
    // Piecewise-linear spectral component with kinks at 520 and 575 nm.
    auto rs = [](double l) { return 0.2 + 0.004 * std::max(0.0, l - 520.0) - 0.003 * std::max(0.0, l - 575.0); };
    std::vector<double> samples;
    for (double l : grid.values())
        samples.push_back(rs(l));
    double v = render::equivalent_intensity(rig, 0, samples);
    double oracle = 2.5 * refined_trapezoid(500, 600, 4000, [&](double l) { return rs(l) * gaussian_ce(l); });
    EXPECT_NEAR(v, oracle, 1e-6 * oracle);
}

TEST(RenderImage, LambertianClosedForm)
{
    auto scene = lambertian_sphere(orthogonal_rig());
    auto out = render::render_image(scene, 0);
    srd::GeometricComponent rg(scene.material, out.rig.wavelengths,
                               srd::spectral_component(scene.material, out.rig.wavelengths, out.rig.directions()));
    double c = rg(Vec3(0, 0, 1), Vec3(0, 0, 1));
    std::size_t lit = 0;
    for (std::size_t i = 0; i < out.normals.size(); ++i) {
        if (!out.normals.valid(i))
            continue;
        const Vec3& n = out.normals.normals[i];
        for (std::size_t j = 0; j < 3; ++j) {
            double nl = std::max(0.0, n.dot(out.rig.lights[j].direction));
            EXPECT_NEAR(out.image.at(j, i), out.e_prime.values[j] * c * nl, 1e-13);
            lit += nl > 0;
        }
    }
    EXPECT_GT(lit, 1000u);
}

TEST(RenderImage, DeterministicAcrossRunsAndThreads)
{
    auto scene = lambertian_sphere(make_uniform_rig(8, WavelengthGrid::uniform(400, 700, 40)), 48);
    scene.jitter = {0.1, 1.0};
    scene.noise_sigma = 0.01;
    auto a = render::render_image(scene, 1234, 1);
    auto b = render::render_image(scene, 1234, 1);
    auto c = render::render_image(scene, 1234, 3);
    EXPECT_TRUE(a.image == b.image);
    EXPECT_TRUE(a.image == c.image);
    EXPECT_EQ(a.e_prime.values, c.e_prime.values);
    auto d = render::render_image(scene, 1235, 1);
    EXPECT_FALSE(a.image == d.image);
}

TEST(RenderImage, JitterAndNoiseContracts)
{
    auto scene = lambertian_sphere(make_uniform_rig(8, WavelengthGrid::uniform(400, 700, 40)), 32);
    scene.jitter = {0.1, 1.0};
    auto clean = render::render_image(scene, 9);
    for (std::size_t j = 0; j < 8; ++j) {
        EXPECT_GT(clean.jitter[j], 0.1);
        EXPECT_LT(clean.jitter[j], 1.0);
        EXPECT_NEAR(clean.rig.lights[j].radiance, scene.rig.lights[j].radiance * clean.jitter[j], 1e-15);
    }
    // Ground-truth e' tracks the jittered radiance.
    auto nominal = render::material_intensities(scene.material, scene.rig);
    for (std::size_t j = 0; j < 8; ++j)
        EXPECT_NEAR(clean.e_prime.values[j], nominal.values[j] * clean.jitter[j], 1e-12);

    scene.noise_sigma = 0.05;
    auto noisy = render::render_image(scene, 9);
    EXPECT_NO_THROW(noisy.image.validate());
    EXPECT_FALSE(noisy.image == clean.image);
    for (std::size_t i = 0; i < noisy.image.pixels(); ++i)
        if (!noisy.image.mask()[i]) {
            for (std::size_t j = 0; j < 8; ++j)
                EXPECT_EQ(noisy.image.at(j, i), 0.0);
        }

    scene.noise_sigma = -1.0;
    EXPECT_THROW(render::render_image(scene, 9), ArgumentError);
    scene.noise_sigma = 0.0;
    scene.jitter = {0.0, 1.0};
    EXPECT_THROW(render::render_image(scene, 9), ArgumentError);
}

TEST(RenderImage, LinearInRadianceAndShadowsExact)
{
    auto scene = lambertian_sphere(make_uniform_rig(5, WavelengthGrid::uniform(400, 700, 40), 70.0), 40);
    scene.material = make_phong_table("g", WavelengthGrid::uniform(360, 1000, 9), [](double) { return 0.4; },
                                      [](double l) { return l / 1000.0; }, 30.0);
    auto base = render::render_image(scene, 3);
    auto doubled_scene = scene;
    doubled_scene.rig.lights[2].radiance *= 2.0;
    auto doubled = render::render_image(doubled_scene, 3);
    for (std::size_t i = 0; i < base.image.pixels(); ++i) {
        EXPECT_EQ(doubled.image.at(2, i), 2.0 * base.image.at(2, i));
        EXPECT_EQ(doubled.image.at(1, i), base.image.at(1, i));
        if (base.normals.valid(i))
            for (std::size_t j = 0; j < 5; ++j)
                if (base.normals.normals[i].dot(base.rig.lights[j].direction) <= 0.0) {
                    EXPECT_EQ(base.image.at(j, i), 0.0);
                }
    }
}

TEST(RenderImage, HighlightSitsAtMirrorPixel)
{
    render::SceneSpec scene;
    scene.shape = render::SphereShape{64, 64, 60, 128, 128};
    scene.material = make_phong_table("shiny", WavelengthGrid::uniform(360, 1000, 9), [](double) { return 0.02; },
                                      [](double) { return 1.0; }, 200.0, 9, 1025);
    scene.rig = make_uniform_rig(6, WavelengthGrid::uniform(400, 700, 60), 50.0);
    scene.jitter = {1.0, 1.0};
    auto out = render::render_image(scene, 0);
    for (std::size_t j = 0; j < 6; ++j) {
        // Brute-force argmax over pixels.
        auto plane = out.image.band(j);
        std::size_t best = std::size_t(std::max_element(plane.begin(), plane.end()) - plane.begin());
        double bx = double(best % 128) + 0.5, by = double(best / 128) + 0.5;
        // Geometric prediction: the pixel whose normal is the half vector.
        Vec3 h = (out.rig.lights[j].direction + kFrontalView).normalized();
        double px = 64 + 60 * h.x(), py = 64 - 60 * h.y();
        EXPECT_LT(std::hypot(bx - px, by - py), 2.0) << "band " << j;
    }
}

TEST(SelectDirections, IdentityAndErrors)
{
    auto all = render::select_directions(7, 7, 5);
    EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
    EXPECT_THROW(render::select_directions(5, 6, 0), ArgumentError);
    EXPECT_THROW(render::select_directions(5, 0, 0), ArgumentError);
    auto one = render::select_directions(39, 1, 3);
    EXPECT_EQ(one.size(), 1u);
}

TEST(SelectDirections, ReproducibleAndUniform)
{
    EXPECT_EQ(render::select_directions(39, 12, 77), render::select_directions(39, 12, 77));
    const std::size_t f = 39, t = 12, draws = 10000;
    std::vector<double> counts(f, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
        auto s = render::select_directions(f, t, 2024, d);
        ASSERT_EQ(s.size(), t);
        ASSERT_TRUE(std::adjacent_find(s.begin(), s.end()) == s.end());
        for (auto i : s)
            counts[i] += 1.0;
    }
    double expected = double(draws * t) / double(f), chi2 = 0.0;
    for (double c : counts)
        chi2 += (c - expected) * (c - expected) / expected;
    boost::math::chi_squared dist(double(f - 1));
    double p = 1.0 - boost::math::cdf(dist, chi2);
    EXPECT_GT(p, 0.01) << "chi2 = " << chi2;
}
