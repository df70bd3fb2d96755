// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/spectral.hpp"

#include <Eigen/SVD>

#include <string>
#include <utility>
#include <vector>

namespace mpskit::srd {

/// Rank-1 split of a reflectance matrix into a spectral vector (rows) and a
/// geometric vector (columns).
///
/// Scale and sign are pinned: `spectral` has unit length and nonnegative
/// mean, and the leading singular value is carried by `geometric`. `sigma`
/// holds every singular value of the input in descending order.
struct SrdDecomposition
{
    Eigen::VectorXd spectral;
    Eigen::VectorXd geometric;
    Eigen::VectorXd sigma;
};

namespace detail {

inline void check_matrix(const ReflectanceMatrix& R)
{
    if (R.rows() < 1 || R.cols() < 1)
        throw ArgumentError("reflectance matrix is empty");
    if (!R.values.allFinite())
        throw ArgumentError("reflectance matrix has non-finite entries");
}

}  // namespace detail

/// Best rank-1 Frobenius approximation via SVD.
inline SrdDecomposition decompose(const ReflectanceMatrix& R)
{
    detail::check_matrix(R);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(R.values, Eigen::ComputeThinU);
    SrdDecomposition d;
    d.sigma = svd.singularValues();
    Eigen::VectorXd u = svd.matrixU().col(0);
    if (u.mean() < 0.0)
        u = -u;
    double norm = u.norm();
    d.spectral = norm > 0.0 ? Eigen::VectorXd(u / norm) : u;
    // Projection onto the unit spectral vector; equals sigma_1 v_1.
    d.geometric = R.values.transpose() * d.spectral;
    return d;
}

/// Lambertian baseline: constant geometric component, spectral direction from
/// the row means, scalar fitted by least squares. sigma = [fitted scalar].
inline SrdDecomposition lambertian_fit(const ReflectanceMatrix& R)
{
    detail::check_matrix(R);
    Eigen::VectorXd row_mean = R.values.rowwise().mean();
    double norm = row_mean.norm();
    SrdDecomposition d;
    if (norm > 0.0) {
        d.spectral = row_mean / norm;
    } else {
        d.spectral = Eigen::VectorXd::Constant(R.rows(), 1.0 / std::sqrt(double(R.rows())));
    }
    // argmin_c ||R - s c 1^T||_F with |s| = 1 is c = s^T R 1 / g.
    double c = d.spectral.dot(row_mean);
    d.geometric = Eigen::VectorXd::Constant(R.cols(), c);
    d.sigma = Eigen::VectorXd::Constant(1, c);
    return d;
}

inline ReflectanceMatrix reconstruct(const SrdDecomposition& d)
{
    ReflectanceMatrix out;
    out.values = d.spectral * d.geometric.transpose();
    out.provenance = "rank-1 reconstruction";
    return out;
}

inline double reconstruction_error(const ReflectanceMatrix& R, const ReflectanceMatrix& Rp)
{
    if (R.rows() != Rp.rows() || R.cols() != Rp.cols())
        throw ArgumentError("reconstruction_error: shape mismatch");
    return (R.values - Rp.values).norm();
}

/// Share of the leading singular value in the singular-value sum.
inline double energy_ratio(const SrdDecomposition& d)
{
    if (d.sigma.size() == 0)
        throw ArgumentError("energy_ratio: empty singular-value list");
    double total = d.sigma.sum();
    return total > 0.0 ? d.sigma(0) / total : 0.0;
}

inline constexpr double kDefaultFilterThreshold = 0.05;

/// Names whose error is <= threshold, in input order.
inline std::vector<std::string> filter_materials(std::span<const std::pair<std::string, double>> errors,
                                                 double threshold = kDefaultFilterThreshold)
{
    std::vector<std::string> kept;
    for (const auto& [name, err] : errors) {
        if (!std::isfinite(err))
            throw ArgumentError("filter_materials: non-finite error for " + name);
        if (err <= threshold)
            kept.push_back(name);
    }
    return kept;
}

/// Spectral component of a material sampled on `wavelengths`, using the
/// default sphere-like geometry over `lights`.
inline Eigen::VectorXd spectral_component(const SpectralBrdfTable& table, const WavelengthGrid& wavelengths,
                                          std::span<const Vec3> lights, const Vec3& view = kFrontalView)
{
    auto pairs = default_geometry_pairs(lights);
    if (pairs.empty())
        throw ArgumentError("no lit geometry pairs for the given lights");
    return decompose(build_reflectance_matrix(table, pairs, wavelengths, view)).spectral;
}

/// Geometric component as a function of (n, l): the material's spectral
/// slice projected onto the unit spectral vector. Exact for separable tables.
class GeometricComponent
{
public:
    GeometricComponent(const SpectralBrdfTable& table, WavelengthGrid wavelengths, Eigen::VectorXd spectral,
                       Vec3 view = kFrontalView)
        : table_(&table), wavelengths_(std::move(wavelengths)), spectral_(std::move(spectral)), view_(view)
    {
        if (std::size_t(spectral_.size()) != wavelengths_.size())
            throw ArgumentError("spectral component length does not match wavelength grid");
    }
    GeometricComponent(SpectralBrdfTable&&, WavelengthGrid, Eigen::VectorXd, Vec3 = kFrontalView) = delete;

    double operator()(const Vec3& n, const Vec3& l) const
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < wavelengths_.size(); ++k)
            acc += spectral_(Eigen::Index(k)) * sample_brdf(*table_, n, l, view_, wavelengths_[k]);
        return acc;
    }

private:
    const SpectralBrdfTable* table_;
    WavelengthGrid wavelengths_;
    Eigen::VectorXd spectral_;
    Vec3 view_;
};

}  // namespace mpskit::srd
