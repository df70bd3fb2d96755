// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpskit/srd.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mpskit;
using mpskit::srd::SrdDecomposition;

namespace {

ReflectanceMatrix matrix(Eigen::MatrixXd v)
{
    ReflectanceMatrix R;
    R.values = std::move(v);
    return R;
}

double svd_error(const ReflectanceMatrix& R) { return srd::reconstruction_error(R, srd::reconstruct(srd::decompose(R))); }

double lambertian_error(const ReflectanceMatrix& R)
{
    return srd::reconstruction_error(R, srd::reconstruct(srd::lambertian_fit(R)));
}

}  // namespace

TEST(Decompose, SeparableInputReconstructsExactly)
{
    Eigen::MatrixXd v(2, 2);
    v << 2, 4, 1, 2;
    auto R = matrix(v);
    auto d = srd::decompose(R);
    Eigen::Vector2d expected(2.0 / std::sqrt(5.0), 1.0 / std::sqrt(5.0));
    EXPECT_LT((d.spectral - expected).norm(), 1e-12);
    EXPECT_LT(svd_error(R), 1e-12);
    EXPECT_NEAR(d.spectral.norm(), 1.0, 1e-9);
}

TEST(Decompose, IdentityHasUnitBestRank1Error)
{
    auto R = matrix(Eigen::MatrixXd::Identity(2, 2));
    auto d = srd::decompose(R);
    EXPECT_NEAR(d.sigma(0), 1.0, 1e-12);
    EXPECT_NEAR(d.sigma(1), 1.0, 1e-12);
    EXPECT_NEAR(svd_error(R), 1.0, 1e-12);
    EXPECT_NEAR(srd::energy_ratio(d), 0.5, 1e-12);
}

TEST(Decompose, MatchesPowerIterationOracle)
{
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        auto A = test::random_nonnegative(rng, 4, 6);
        auto d = srd::decompose(matrix(A));
        auto oracle = test::power_iteration(A, 200, 1e-12);
        double sign = oracle.u.dot(d.spectral) < 0 ? -1.0 : 1.0;
        for (int i = 0; i < 4; ++i)
            EXPECT_NEAR(d.spectral(i), sign * oracle.u(i), 1e-8);
        for (int k = 0; k < 6; ++k)
            EXPECT_NEAR(d.geometric(k), sign * oracle.sigma * oracle.v(k), 1e-8);
    }
}

TEST(Decompose, SignConventionAndInvariants)
{
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto A = test::random_nonnegative(rng, 5, 9);
        auto d = srd::decompose(matrix(A));
        EXPECT_NEAR(d.spectral.norm(), 1.0, 1e-9);
        EXPECT_GE(d.spectral.mean(), 0.0);
        for (int k = 1; k < d.sigma.size(); ++k)
            EXPECT_GE(d.sigma(k - 1), d.sigma(k));
        EXPECT_GE(d.sigma.minCoeff(), 0.0);
        // Deterministic: bitwise equal on repeat.
        auto again = srd::decompose(matrix(A));
        EXPECT_TRUE(d.spectral == again.spectral);
        EXPECT_TRUE(d.geometric == again.geometric);
        EXPECT_TRUE(d.sigma == again.sigma);
    }
}

TEST(Decompose, RejectsNonFinite)
{
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(2, 2);
    v(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(srd::decompose(matrix(v)), ArgumentError);
    EXPECT_THROW(srd::lambertian_fit(matrix(v)), ArgumentError);
    EXPECT_THROW(srd::decompose(matrix(Eigen::MatrixXd(0, 0))), ArgumentError);
}

TEST(Decompose, Rank1NonnegativeReconstructionIsNonnegative)
{
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd a = test::random_nonnegative(rng, 6, 1);
        Eigen::VectorXd b = test::random_nonnegative(rng, 10, 1);
        auto R = matrix(a * b.transpose());
        auto rec = srd::reconstruct(srd::decompose(R));
        EXPECT_GE(rec.values.minCoeff(), -1e-15);
        EXPECT_LT((rec.values - R.values).norm(), 1e-9);
    }
}

TEST(Decompose, ScaleSplit)
{
    Rng rng(9);
    auto A = test::random_nonnegative(rng, 5, 7);
    for (double alpha : {0.01, 3.0, 1e4}) {
        auto base = srd::reconstruct(srd::decompose(matrix(A))).values;
        auto scaled = srd::reconstruct(srd::decompose(matrix(alpha * A))).values;
        for (int i = 0; i < A.rows(); ++i)
            for (int k = 0; k < A.cols(); ++k)
                EXPECT_NEAR(scaled(i, k), alpha * base(i, k), 1e-9 * alpha * std::abs(base(i, k)) + 1e-300);
    }
}

TEST(Decompose, EckartYoungSpotCheck)
{
    Rng rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        auto A = test::random_nonnegative(rng, 5, 7);
        auto R = matrix(A);
        double best = svd_error(R);
        for (int c = 0; c < 1000; ++c) {
            Eigen::VectorXd u(5), v(7);
            for (int i = 0; i < 5; ++i)
                u(i) = rng.gaussian();
            for (int k = 0; k < 7; ++k)
                v(k) = rng.gaussian();
            // Optimal scale for the candidate direction pair.
            double s = u.dot(A * v) / (u.squaredNorm() * v.squaredNorm());
            double err = (A - s * u * v.transpose()).norm();
            EXPECT_LE(best, err + 1e-12);
        }
    }
}

TEST(LambertianFit, IdenticalColumnsAreExact)
{
    Eigen::MatrixXd v(3, 4);
    for (int k = 0; k < 4; ++k)
        v.col(k) = Eigen::Vector3d(0.2, 0.5, 0.9);
    auto R = matrix(v);
    EXPECT_LT(lambertian_error(R), 1e-12);
}

TEST(LambertianFit, TwoByTwoClosedForm)
{
    Eigen::MatrixXd v(2, 2);
    v << 1, 3, 1, 3;
    auto R = matrix(v);
    auto d = srd::lambertian_fit(R);
    EXPECT_LT((d.spectral - Eigen::Vector2d(1, 1).normalized()).norm(), 1e-12);
    // Least-squares oracle: each row fitted by a constant equals its mean, 2.
    auto rec = srd::reconstruct(d).values;
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
            EXPECT_NEAR(rec(i, k), 2.0, 1e-12);
    EXPECT_NEAR(d.geometric(0), d.geometric(1), 0.0);
    EXPECT_NEAR(d.sigma(0), 2.0 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(lambertian_error(R), 2.0, 1e-12);
}

TEST(LambertianFit, NonConstantColumnsLoseToSvd)
{
    Eigen::MatrixXd v(1, 2);
    v << 1, 2;
    auto R = matrix(v);
    EXPECT_GT(lambertian_error(R), 0.1);
    EXPECT_LT(svd_error(R), 1e-12);
}

TEST(LambertianFit, SvdIsNeverWorse)
{
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        auto R = matrix(test::random_nonnegative(rng, 6, 8));
        EXPECT_LE(svd_error(R), lambertian_error(R) + 1e-12);
    }
}

TEST(Reconstruct, OuterProducts)
{
    SrdDecomposition d{Eigen::Vector2d(1, 0), Eigen::Vector2d(3, 4), Eigen::VectorXd::Constant(1, 5.0)};
    Eigen::MatrixXd expected(2, 2);
    expected << 3, 4, 0, 0;
    EXPECT_EQ(srd::reconstruct(d).values, expected);
    SrdDecomposition z{Eigen::Vector3d(0, 1, 0), Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(1)};
    EXPECT_EQ(srd::reconstruct(z).values, Eigen::MatrixXd::Zero(3, 4));
}

TEST(Reconstruct, RoundTripOnRank1)
{
    Rng rng(10);
    Eigen::VectorXd a = test::random_nonnegative(rng, 7, 1), b = test::random_nonnegative(rng, 11, 1);
    auto R = matrix(a * b.transpose());
    EXPECT_LT(svd_error(R), 1e-9);
}

TEST(ReconstructionError, Values)
{
    Rng rng(12);
    auto A = matrix(test::random_nonnegative(rng, 3, 3));
    EXPECT_EQ(srd::reconstruction_error(A, A), 0.0);
    EXPECT_NEAR(srd::reconstruction_error(matrix(Eigen::MatrixXd::Constant(1, 1, 3.0)),
                                          matrix(Eigen::MatrixXd::Zero(1, 1))),
                3.0, 0.0);
    auto B = matrix(test::random_nonnegative(rng, 3, 3));
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            sum += (A.values(i, k) - B.values(i, k)) * (A.values(i, k) - B.values(i, k));
    EXPECT_NEAR(srd::reconstruction_error(A, B), std::sqrt(sum), 1e-14);
    EXPECT_THROW(srd::reconstruction_error(A, matrix(Eigen::MatrixXd::Zero(3, 2))), ArgumentError);
}

TEST(EnergyRatio, Values)
{
    Eigen::VectorXd a = Eigen::Vector3d(1, 2, 3), b = Eigen::Vector4d(1, 0.5, 2, 1);
    EXPECT_NEAR(srd::energy_ratio(srd::decompose(matrix(a * b.transpose()))), 1.0, 1e-12);
    SrdDecomposition zero{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)};
    EXPECT_EQ(srd::energy_ratio(zero), 0.0);

    Rng rng(13);
    auto A = test::random_nonnegative(rng, 4, 5);
    auto sv = test::deflated_singular_values(A, 4);
    double oracle = sv[0] / (sv[0] + sv[1] + sv[2] + sv[3]);
    EXPECT_NEAR(srd::energy_ratio(srd::decompose(matrix(A))), oracle, 1e-6);
}

TEST(FilterMaterials, ThresholdRule)
{
    std::vector<std::pair<std::string, double>> e{{"a", 0.01}, {"b", 0.06}};
    EXPECT_EQ(srd::filter_materials(e, 0.05), std::vector<std::string>{"a"});
    EXPECT_TRUE(srd::filter_materials({}, 0.05).empty());
    std::vector<std::pair<std::string, double>> tie{{"x", 0.05}, {"y", 0.0500001}, {"z", 0.0}};
    EXPECT_EQ(srd::filter_materials(tie), (std::vector<std::string>{"x", "z"}));
    std::vector<std::pair<std::string, double>> bad{{"n", std::nan("")}};
    EXPECT_THROW(srd::filter_materials(bad), ArgumentError);
}

TEST(GeometricComponent, ExactForSeparableTable)
{
    WavelengthGrid wl = WavelengthGrid::uniform(400, 700, 7);
    auto t = SpectralBrdfTable::tabulate("sep", wl, 9, 17, [](double l, double a, double b) {
        return (0.1 + l / 700.0) * (0.3 + a * a + 4.0 * std::pow(b, 8));
    });
    auto lights = fibonacci_cap(8, 1.0);
    Eigen::VectorXd rs = srd::spectral_component(t, wl, lights);
    srd::GeometricComponent rg(t, wl, rs);
    Rng rng(1);
    for (int k = 0; k < 30; ++k) {
        Vec3 n = test::random_hemisphere(rng), l = lights[k % lights.size()];
        if (n.dot(l) <= 0)
            continue;
        for (std::size_t i = 0; i < wl.size(); ++i)
            EXPECT_NEAR(sample_brdf(t, n, l, kFrontalView, wl[i]), rs(Eigen::Index(i)) * rg(n, l), 1e-12);
    }
}
