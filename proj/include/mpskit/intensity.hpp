// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/image.hpp"
#include "mpskit/render.hpp"

#include <Eigen/Eigenvalues>

#include <numeric>

namespace mpskit::intensity {

enum class Method { oracle, factorize };

inline const char* to_string(Method m) { return m == Method::oracle ? "oracle" : "factorize"; }

struct IntensityEstimate
{
    EquivalentIntensities values;
    Method method = Method::factorize;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Intensities from the material's SVD spectral component.
inline IntensityEstimate estimate_oracle(const SpectralBrdfTable& material, const LightingRig& rig)
{
    IntensityEstimate est;
    est.method = Method::oracle;
    est.values = render::material_intensities(material, rig);
    return est;
}

struct FactorizeOptions
{
    std::size_t max_iters = 100;
    double tol = 1e-8;
    double trim_fraction = 0.2;
    unsigned threads = 1;
};

/// Per-iteration objective values, for monitoring monotonicity.
struct FactorizeTrace
{
    struct Step
    {
        double before = 0.0;       ///< objective on the kept set, previous iterate
        double after_normals = 0.0;
        double after_intensities = 0.0;
        std::size_t kept = 0;      ///< observations in the kept set
    };
    std::vector<Step> steps;
};

namespace detail {

/// Observations of one pixel: band indices with positive values.
struct PixelObs
{
    std::size_t pixel = 0;
    std::vector<std::uint32_t> bands;
};

inline std::vector<PixelObs> lit_observations(const MultispectralImage& img)
{
    std::vector<PixelObs> out;
    for (std::size_t i = 0; i < img.pixels(); ++i) {
        if (!img.mask()[i])
            continue;
        PixelObs p{i, {}};
        for (std::size_t j = 0; j < img.bands(); ++j)
            if (img.at(j, i) > 0.0)
                p.bands.push_back(std::uint32_t(j));
        if (p.bands.size() >= 3)
            out.push_back(std::move(p));
    }
    return out;
}

inline std::size_t trimmed_count(std::size_t lit, double fraction)
{
    return lit - std::min(lit, std::size_t(std::floor(fraction * double(lit) + 1e-9)));
}

/// Scaled normal b minimizing sum over `bands` of (m_j - e_j l_j^T b)^2.
inline std::optional<Vec3> solve_scaled_normal(const MultispectralImage& img, const std::vector<Vec3>& dirs,
                                               std::span<const double> e, std::size_t pixel,
                                               std::span<const std::uint32_t> bands)
{
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Vec3 rhs = Vec3::Zero();
    for (std::uint32_t j : bands) {
        Vec3 a = e[j] * dirs[j];
        A += a * a.transpose();
        rhs += a * img.at(j, pixel);
    }
    Eigen::LDLT<Eigen::Matrix3d> ldlt(A);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12)
        return std::nullopt;
    return ldlt.solve(rhs);
}

/// Closed-form start: with u_j = 1/e_j each pixel gives diag(m) u in the span
/// of its light directions, so u is the null vector of the accumulated
/// projector residuals.
inline std::optional<std::vector<double>> linear_initialization(const MultispectralImage& img,
                                                                const std::vector<Vec3>& dirs,
                                                                const std::vector<PixelObs>& obs)
{
    const std::size_t f = img.bands();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(Eigen::Index(f), Eigen::Index(f));
    for (const auto& p : obs) {
        const Eigen::Index k = Eigen::Index(p.bands.size());
        Eigen::MatrixXd L(k, 3);
        Eigen::VectorXd m(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            L.row(r) = dirs[p.bands[r]].transpose();
            m(r) = img.at(p.bands[r], p.pixel);
        }
        Eigen::Matrix3d G = L.transpose() * L;
        Eigen::LDLT<Eigen::Matrix3d> ldlt(G);
        if (ldlt.rcond() < 1e-12)
            continue;
        Eigen::MatrixXd P = L * ldlt.solve(L.transpose());
        Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(k, k) - P;
        Eigen::MatrixXd C = m.asDiagonal() * Q * m.asDiagonal();
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < k; ++c)
                A(p.bands[r], p.bands[c]) += C(r, c);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    if (eig.info() != Eigen::Success)
        return std::nullopt;
    Eigen::VectorXd u = eig.eigenvectors().col(0);
    if (u.sum() < 0.0)
        u = -u;
    std::vector<double> e(f);
    for (std::size_t j = 0; j < f; ++j) {
        if (!(u(Eigen::Index(j)) > 1e-12 * u.cwiseAbs().maxCoeff()))
            return std::nullopt;
        e[j] = 1.0 / u(Eigen::Index(j));
    }
    double mx = *std::max_element(e.begin(), e.end());
    for (double& v : e)
        v /= mx;
    return e;
}

inline std::vector<double> mean_initialization(const MultispectralImage& img, const std::vector<PixelObs>& obs)
{
    std::vector<double> sum(img.bands(), 0.0);
    std::vector<std::size_t> cnt(img.bands(), 0);
    for (const auto& p : obs)
        for (std::uint32_t j : p.bands) {
            sum[j] += img.at(j, p.pixel);
            ++cnt[j];
        }
    for (std::size_t j = 0; j < sum.size(); ++j)
        sum[j] = cnt[j] > 0 ? sum[j] / double(cnt[j]) : 0.0;
    return sum;
}

/// Per-band outlier gate: residuals above kGateWidth robust standard
/// deviations of their band (median absolute residual scaled to a Gaussian
/// sigma) are eligible for trimming. Without the gate the inliers of a
/// slightly mis-scaled band get trimmed everywhere and the band drifts low.
inline constexpr double kGateWidth = 3.0;

inline double residual_gate(std::vector<double>& abs_residuals, double peak)
{
    double floor = 1e-12 * peak;
    if (abs_residuals.empty())
        return floor;
    auto mid = abs_residuals.begin() + std::ptrdiff_t(abs_residuals.size() / 2);
    std::nth_element(abs_residuals.begin(), mid, abs_residuals.end());
    return std::max(floor, kGateWidth * 1.4826 * *mid);
}

}  // namespace detail

/// Equivalent intensities up to global scale from one multispectral image
/// with calibrated directions, by alternating trimmed least squares over
/// per-pixel scaled normals and per-band intensities.
///
/// Each outer iteration solves every pixel's scaled normal on its kept bands,
/// refits every band intensity in closed form, then re-ranks residuals and
/// drops up to `trim_fraction` of each pixel's lit observations for the next
/// round: the brightest ones that also clear their band's outlier gate.
/// Lit values that the current normal shades as back-facing are dropped too.
/// The result is gauge-fixed to max = 1.
inline IntensityEstimate estimate_factorize(const MultispectralImage& img, const LightingRig& rig,
                                            const FactorizeOptions& opts = {}, FactorizeTrace* trace = nullptr)
{
    const std::size_t f = img.bands();
    if (f < 4)
        throw UnderConstrainedError("intensity estimation needs at least 4 bands, got " + std::to_string(f));
    if (rig.size() != f)
        throw ArgumentError("rig light count does not match image band count");
    img.validate();
    const std::vector<Vec3> dirs = rig.directions();

    auto obs = detail::lit_observations(img);
    if (obs.size() < 4)
        throw UnderConstrainedError("intensity estimation needs at least 4 pixels lit in 3 or more bands");
    {
        std::vector<bool> seen(f, false);
        for (const auto& p : obs)
            for (auto j : p.bands)
                seen[j] = true;
        for (std::size_t j = 0; j < f; ++j)
            if (!seen[j])
                throw UnderConstrainedError("band " + std::to_string(j) + " has no usable observations");
    }

    std::vector<double> e;
    if (auto lin = detail::linear_initialization(img, dirs, obs))
        e = std::move(*lin);
    else
        e = detail::mean_initialization(img, obs);

    const std::size_t P = obs.size();
    std::vector<Vec3> b(P, Vec3::Zero());
    std::vector<std::uint8_t> solved(P, 0);
    // Kept bands per pixel; starts with all lit bands.
    std::vector<std::vector<std::uint32_t>> kept(P);
    for (std::size_t p = 0; p < P; ++p)
        kept[p] = obs[p].bands;

    auto solve_normals = [&] {
        parallel_for(P, opts.threads, [&](std::size_t p) {
            auto sol = detail::solve_scaled_normal(img, dirs, e, obs[p].pixel, kept[p]);
            solved[p] = sol.has_value();
            b[p] = sol.value_or(Vec3::Zero());
        });
    };
    auto objective = [&] {
        std::vector<double> per(P, 0.0);
        parallel_for(P, opts.threads, [&](std::size_t p) {
            if (!solved[p])
                return;
            double acc = 0.0;
            for (auto j : kept[p]) {
                double r = img.at(j, obs[p].pixel) - e[j] * dirs[j].dot(b[p]);
                acc += r * r;
            }
            per[p] = acc;
        });
        return std::accumulate(per.begin(), per.end(), 0.0);
    };
    auto update_intensities = [&] {
        std::vector<double> num(f, 0.0), den(f, 0.0);
        for (std::size_t p = 0; p < P; ++p) {
            if (!solved[p])
                continue;
            for (auto j : kept[p]) {
                double s = dirs[j].dot(b[p]);
                num[j] += img.at(j, obs[p].pixel) * s;
                den[j] += s * s;
            }
        }
        for (std::size_t j = 0; j < f; ++j)
            if (den[j] > 0.0 && num[j] > 0.0)
                e[j] = num[j] / den[j];
    };
    double peak = 0.0;
    for (const auto& p : obs)
        for (auto j : p.bands)
            peak = std::max(peak, img.at(j, p.pixel));
    std::vector<std::vector<double>> resid(P);
    constexpr double kShadowed = std::numeric_limits<double>::infinity();
    auto retrim = [&] {
        parallel_for(P, opts.threads, [&](std::size_t p) {
            resid[p].clear();
            for (auto j : obs[p].bands) {
                double shade = dirs[j].dot(b[p]);
                // A lit value the current normal places in shadow cannot be fit
                // by any positive intensity; it is always excluded.
                resid[p].push_back(shade > 0.0 ? img.at(j, obs[p].pixel) - e[j] * shade : kShadowed);
            }
        });
        std::vector<std::vector<double>> per_band(f);
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t k = 0; k < resid[p].size(); ++k)
                if (resid[p][k] != kShadowed)
                    per_band[obs[p].bands[k]].push_back(std::abs(resid[p][k]));
        std::vector<double> tau(f);
        for (std::size_t j = 0; j < f; ++j)
            tau[j] = detail::residual_gate(per_band[j], peak);
        parallel_for(P, opts.threads, [&](std::size_t p) {
            const auto& lit = obs[p].bands;
            std::size_t cap = lit.size() - detail::trimmed_count(lit.size(), opts.trim_fraction);
            // Standardized residuals; shadowed entries sort first.
            std::vector<std::pair<double, std::uint32_t>> order;
            order.reserve(lit.size());
            for (std::size_t k = 0; k < lit.size(); ++k)
                order.emplace_back(resid[p][k] == kShadowed ? kShadowed : resid[p][k] / tau[lit[k]], lit[k]);
            std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
            std::size_t drop = 0, shadowed = 0;
            while (drop < order.size() && order[drop].first == kShadowed)
                ++drop, ++shadowed;
            while (drop < order.size() && drop < shadowed + cap && order[drop].first > 1.0)
                ++drop;
            kept[p].clear();
            for (std::size_t k = drop; k < order.size(); ++k)
                kept[p].push_back(order[k].second);
            std::sort(kept[p].begin(), kept[p].end());
        });
    };

    solve_normals();
    retrim();

    double scale = 0.0;
    for (const auto& p : obs)
        for (auto j : p.bands)
            scale += img.at(j, p.pixel) * img.at(j, p.pixel);
    const double floor = 1e-28 * std::max(scale, 1e-300);

    auto kept_count = [&] {
        std::size_t n = 0;
        for (std::size_t p = 0; p < P; ++p)
            if (solved[p])
                n += kept[p].size();
        return std::max<std::size_t>(n, 1);
    };

    // Progress is judged within each outer iteration, where the kept set is
    // fixed; retrimming may raise the objective between iterations.
    int increases = 0;
    std::size_t it = 0;
    double current = objective();
    for (it = 1; it <= opts.max_iters; ++it) {
        FactorizeTrace::Step step;
        solve_normals();
        step.before = current;
        step.after_normals = objective();
        update_intensities();
        current = objective();
        step.after_intensities = current;
        step.kept = kept_count();
        if (trace)
            trace->steps.push_back(step);

        if (!std::isfinite(current) || current > step.before * (1.0 + 1e-12)) {
            if (++increases >= 3 || !std::isfinite(current))
                throw NonConvergenceError("intensity estimation diverged", e);
        } else {
            increases = 0;
        }
        if (current <= floor || step.before - current <= opts.tol * step.before)
            break;
        retrim();
        current = objective();
    }

    IntensityEstimate est;
    est.method = Method::factorize;
    est.values.values = e;
    est.values = est.values.gauge_normalized();
    est.iterations = std::min(it, opts.max_iters);
    est.residual = std::max(0.0, current);
    return est;
}

/// Divides each band by its intensity.
inline MultispectralImage normalize(const MultispectralImage& img, const EquivalentIntensities& est)
{
    if (est.size() != img.bands())
        throw ArgumentError("intensity count does not match band count");
    est.validate();
    MultispectralImage out = img;
    for (std::size_t j = 0; j < img.bands(); ++j)
        for (double& v : out.band(j))
            v /= est.values[j];
    return out;
}

}  // namespace mpskit::intensity
