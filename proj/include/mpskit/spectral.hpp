// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mpskit {

// ---------------------------------------------------------------------------
// SpectralBrdfTable
// ---------------------------------------------------------------------------

/// Isotropic spectral reflectance under a fixed view, tabulated over
/// (wavelength, n.l, n.h). Both geometry axes are uniform over [0, 1].
class SpectralBrdfTable
{
public:
    SpectralBrdfTable() = default;

    SpectralBrdfTable(std::string name, WavelengthGrid wavelengths, std::vector<double> cos_nl_axis,
                      std::vector<double> cos_nh_axis, std::vector<double> values)
        : name_(std::move(name)),
          wavelengths_(std::move(wavelengths)),
          cos_nl_(std::move(cos_nl_axis)),
          cos_nh_(std::move(cos_nh_axis)),
          values_(std::move(values))
    {
        check_axis(cos_nl_, "cosNL");
        check_axis(cos_nh_, "cosNH");
        if (values_.size() != wavelengths_.size() * cos_nl_.size() * cos_nh_.size())
            throw ArgumentError("table value count does not match grid dimensions");
        for (double v : values_)
            if (!std::isfinite(v) || v < 0.0)
                throw ArgumentError("table values must be finite and nonnegative");
    }

    /// Builds a table by evaluating fn(lambda, cos_nl, cos_nh) at every node.
    template <typename Fn>
    static SpectralBrdfTable tabulate(std::string name, WavelengthGrid wavelengths, std::size_t nl_count,
                                      std::size_t nh_count, Fn&& fn)
    {
        auto axis = [](std::size_t n) {
            std::vector<double> a(n);
            for (std::size_t i = 0; i < n; ++i)
                a[i] = double(i) / double(n - 1);
            return a;
        };
        if (nl_count < 2 || nh_count < 2)
            throw ArgumentError("geometry axes need at least 2 samples");
        std::vector<double> nl = axis(nl_count), nh = axis(nh_count);
        std::vector<double> vals;
        vals.reserve(wavelengths.size() * nl_count * nh_count);
        for (double lambda : wavelengths.values())
            for (double a : nl)
                for (double b : nh)
                    vals.push_back(fn(lambda, a, b));
        return SpectralBrdfTable(std::move(name), std::move(wavelengths), std::move(nl), std::move(nh),
                                 std::move(vals));
    }

    const std::string& name() const { return name_; }
    const WavelengthGrid& wavelengths() const { return wavelengths_; }
    std::span<const double> cos_nl_axis() const { return cos_nl_; }
    std::span<const double> cos_nh_axis() const { return cos_nh_; }
    /// Row-major (wavelength, cosNL, cosNH).
    std::span<const double> values() const { return values_; }

    double at(std::size_t w, std::size_t a, std::size_t b) const
    {
        return values_[(w * cos_nl_.size() + a) * cos_nh_.size() + b];
    }

    /// Trilinear lookup in (lambda, cos_nl, cos_nh); cosines are clamped to [0, 1].
    double lookup(double lambda, double cos_nl, double cos_nh) const
    {
        auto [w, tw] = wavelengths_.locate(lambda);
        auto [a, ta] = axis_cell(cos_nl_.size(), cos_nl);
        auto [b, tb] = axis_cell(cos_nh_.size(), cos_nh);
        auto bilinear = [&](std::size_t wi) {
            double v00 = at(wi, a, b), v01 = at(wi, a, b + 1);
            double v10 = at(wi, a + 1, b), v11 = at(wi, a + 1, b + 1);
            return (1 - ta) * ((1 - tb) * v00 + tb * v01) + ta * ((1 - tb) * v10 + tb * v11);
        };
        double lo = bilinear(w);
        if (tw == 0.0)
            return lo;
        return (1 - tw) * lo + tw * bilinear(w + 1);
    }

    /// Multiplies every sample by alpha >= 0.
    SpectralBrdfTable scaled(double alpha) const
    {
        SpectralBrdfTable out = *this;
        for (double& v : out.values_)
            v *= alpha;
        return out;
    }

private:
    static void check_axis(const std::vector<double>& axis, const char* label)
    {
        if (axis.size() < 2)
            throw ArgumentError(std::string(label) + " axis needs at least 2 samples");
        double step = 1.0 / double(axis.size() - 1);
        for (std::size_t i = 0; i < axis.size(); ++i)
            if (std::abs(axis[i] - step * double(i)) > 1e-9)
                throw ArgumentError(std::string(label) + " axis must be uniform over [0, 1]");
    }

    static std::pair<std::size_t, double> axis_cell(std::size_t n, double c)
    {
        c = std::clamp(c, 0.0, 1.0);
        double s = c * double(n - 1);
        std::size_t i = std::min<std::size_t>(std::size_t(s), n - 2);
        return {i, s - double(i)};
    }

    std::string name_;
    WavelengthGrid wavelengths_;
    std::vector<double> cos_nl_;
    std::vector<double> cos_nh_;
    std::vector<double> values_;
};

inline const Vec3 kFrontalView{0.0, 0.0, 1.0};

/// Reflectance of `table` for normal n, light l and view direction at lambda.
/// Backfacing light (n.l <= 0) yields 0.
inline double sample_brdf(const SpectralBrdfTable& table, const Vec3& n, const Vec3& l, const Vec3& view,
                          double lambda)
{
    if (!table.wavelengths().contains(lambda))
        throw RangeError("wavelength " + std::to_string(lambda) + " nm outside table range");
    double nl = n.dot(l);
    if (nl <= 0.0)
        return 0.0;
    Vec3 h = (l + view).normalized();
    return table.lookup(lambda, nl, n.dot(h));
}

// ---------------------------------------------------------------------------
// ReflectanceMatrix
// ---------------------------------------------------------------------------

struct GeometryPair
{
    Vec3 normal;
    Vec3 light;
};

/// Reflectance samples with rows = wavelengths, columns = geometry pairs.
struct ReflectanceMatrix
{
    Eigen::MatrixXd values;
    std::string material;
    std::string provenance;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Entry (i, k) is the table sampled at wavelengths[i] for geom_pairs[k].
/// Row and column order follow the inputs.
inline ReflectanceMatrix build_reflectance_matrix(const SpectralBrdfTable& table,
                                                  std::span<const GeometryPair> geom_pairs,
                                                  const WavelengthGrid& wavelengths,
                                                  const Vec3& view = kFrontalView)
{
    if (geom_pairs.empty())
        throw ArgumentError("geometry pair list is empty");
    for (const auto& g : geom_pairs)
        if (!(g.normal.dot(g.light) > 0.0))
            throw ArgumentError("every geometry pair needs n.l > 0");
    ReflectanceMatrix R;
    R.material = table.name();
    R.provenance = table.name() + ": " + std::to_string(wavelengths.size()) + " wavelengths [" +
                   std::to_string(wavelengths.front()) + ", " + std::to_string(wavelengths.back()) +
                   "] nm x " + std::to_string(geom_pairs.size()) + " geometry pairs";
    R.values.resize(Eigen::Index(wavelengths.size()), Eigen::Index(geom_pairs.size()));
    for (std::size_t k = 0; k < geom_pairs.size(); ++k)
        for (std::size_t i = 0; i < wavelengths.size(); ++i)
            R.values(Eigen::Index(i), Eigen::Index(k)) =
                sample_brdf(table, geom_pairs[k].normal, geom_pairs[k].light, view, wavelengths[i]);
    return R;
}

/// Near-uniform directions on the cap with polar angle <= max_polar (radians),
/// Fibonacci spiral ordering.
inline std::vector<Vec3> fibonacci_cap(std::size_t count, double max_polar)
{
    std::vector<Vec3> dirs;
    dirs.reserve(count);
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    double zmin = std::cos(max_polar);
    for (std::size_t i = 0; i < count; ++i) {
        double z = 1.0 - (1.0 - zmin) * (double(i) + 0.5) / double(count);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden * double(i);
        dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return dirs;
}

/// Sphere-like geometry sampling: `normal_count` hemisphere normals paired
/// with every light that illuminates them.
inline std::vector<GeometryPair> default_geometry_pairs(std::span<const Vec3> lights,
                                                        std::size_t normal_count = 256)
{
    std::vector<GeometryPair> pairs;
    for (const Vec3& n : fibonacci_cap(normal_count, M_PI / 2 * 0.95))
        for (const Vec3& l : lights)
            if (n.dot(l) > 1e-6)
                pairs.push_back({n, l});
    return pairs;
}

// ---------------------------------------------------------------------------
// LightingRig
// ---------------------------------------------------------------------------

struct Band
{
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double lambda) const { return lambda >= lo && lambda <= hi; }
};

/// One spectral light paired with its camera channel.
struct Light
{
    Vec3 direction;
    double radiance = 1.0;
    Band band;
    std::vector<double> spectrum;     ///< E_j on the rig grid
    std::vector<double> sensitivity;  ///< C_j on the rig grid
};

struct LightingRig
{
    WavelengthGrid wavelengths;
    std::vector<Light> lights;
    Vec3 view = kFrontalView;

    std::size_t size() const { return lights.size(); }

    std::vector<Vec3> directions() const
    {
        std::vector<Vec3> d;
        d.reserve(lights.size());
        for (const auto& l : lights)
            d.push_back(l.direction);
        return d;
    }

    /// Throws ArgumentError on any broken invariant.
    void validate() const
    {
        if (lights.empty())
            throw ArgumentError("rig has no lights");
        if (!is_unit(view, 1e-9))
            throw ArgumentError("view direction must be unit length");
        const std::size_t n = wavelengths.size();
        for (std::size_t j = 0; j < lights.size(); ++j) {
            const Light& L = lights[j];
            std::string tag = "light " + std::to_string(j) + ": ";
            if (!is_unit(L.direction, 1e-9))
                throw ArgumentError(tag + "direction must be unit length");
            if (!(L.radiance > 0.0) || !std::isfinite(L.radiance))
                throw ArgumentError(tag + "radiance must be positive");
            if (!(L.band.hi > L.band.lo))
                throw ArgumentError(tag + "band must have hi > lo");
            if (L.spectrum.size() != n || L.sensitivity.size() != n)
                throw ArgumentError(tag + "spectrum/sensitivity must be tabulated on the rig grid");
            for (std::size_t k = 0; k < n; ++k) {
                if (!(L.spectrum[k] >= 0.0) || !(L.sensitivity[k] >= 0.0) || !std::isfinite(L.spectrum[k]) ||
                    !std::isfinite(L.sensitivity[k]))
                    throw ArgumentError(tag + "spectra must be finite and nonnegative");
                if (!L.band.contains(wavelengths[k]) && L.sensitivity[k] != 0.0)
                    throw ArgumentError(tag + "camera sensitivity is nonzero outside its band");
            }
            for (std::size_t i = 0; i < j; ++i) {
                const Band& o = lights[i].band;
                if (!(L.band.hi < o.lo || o.hi < L.band.lo))
                    throw ArgumentError(tag + "band overlaps band of light " + std::to_string(i));
            }
        }
    }

    /// Rig restricted to the given light indices, in the given order.
    LightingRig subset(std::span<const std::size_t> indices) const
    {
        LightingRig out{wavelengths, {}, view};
        for (std::size_t idx : indices) {
            if (idx >= lights.size())
                throw ArgumentError("light index out of range");
            out.lights.push_back(lights[idx]);
        }
        return out;
    }
};

/// e_j * trapezoid over the grid nodes inside band j of f(k) C_j(k) E_j(k).
/// f is indexed by rig grid node.
template <typename Fn>
double band_integral(const LightingRig& rig, std::size_t j, Fn&& f)
{
    if (j >= rig.size())
        throw ArgumentError("band index " + std::to_string(j) + " out of range");
    const Light& L = rig.lights[j];
    double acc = 0.0;
    bool have_prev = false;
    double prev_x = 0.0, prev_y = 0.0;
    for (std::size_t k = 0; k < rig.wavelengths.size(); ++k) {
        double x = rig.wavelengths[k];
        if (!L.band.contains(x))
            continue;
        double y = f(k) * L.sensitivity[k] * L.spectrum[k];
        if (have_prev)
            acc += 0.5 * (x - prev_x) * (y + prev_y);
        prev_x = x;
        prev_y = y;
        have_prev = true;
    }
    return L.radiance * acc;
}

/// Rig of `count` lights on a Fibonacci cap, one contiguous run of grid nodes
/// per band, boxcar spectra scaled so each band's C E integrates to 1.
inline LightingRig make_uniform_rig(std::size_t count, WavelengthGrid grid, double max_polar_deg = 55.0,
                                    double radiance = 1.0)
{
    if (count == 0)
        throw ArgumentError("rig needs at least one light");
    if (grid.size() < 2 * count)
        throw ArgumentError("wavelength grid too coarse for the requested band count");
    LightingRig rig;
    rig.wavelengths = std::move(grid);
    auto dirs = fibonacci_cap(count, max_polar_deg * M_PI / 180.0);
    const std::size_t n = rig.wavelengths.size();
    for (std::size_t j = 0; j < count; ++j) {
        std::size_t first = j * n / count, last = (j + 1) * n / count - 1;
        Light L;
        L.direction = dirs[j];
        L.radiance = radiance;
        L.band = {rig.wavelengths[first], rig.wavelengths[last]};
        L.spectrum.assign(n, 0.0);
        L.sensitivity.assign(n, 0.0);
        double width = L.band.hi - L.band.lo;
        for (std::size_t k = first; k <= last; ++k) {
            L.spectrum[k] = 1.0;
            L.sensitivity[k] = 1.0 / width;
        }
        rig.lights.push_back(std::move(L));
    }
    return rig;
}

// ---------------------------------------------------------------------------
// Procedural materials
// ---------------------------------------------------------------------------

using SpectrumFn = std::function<double(double)>;

/// Diffuse plus Blinn-Phong lobe: kd(lambda) + ks(lambda) (n.h)^shininess.
/// Separable when ks is proportional to kd.
inline SpectralBrdfTable make_phong_table(std::string name, const WavelengthGrid& grid, SpectrumFn kd,
                                          SpectrumFn ks, double shininess, std::size_t nl_count = 33,
                                          std::size_t nh_count = 257)
{
    return SpectralBrdfTable::tabulate(std::move(name), grid, nl_count, nh_count,
                                       [&](double lambda, double, double nh) {
                                           return kd(lambda) + ks(lambda) * std::pow(nh, shininess);
                                       });
}

inline SpectralBrdfTable make_lambertian_table(std::string name, const WavelengthGrid& grid, SpectrumFn albedo)
{
    return SpectralBrdfTable::tabulate(std::move(name), grid, 2, 2,
                                       [&](double lambda, double, double) { return albedo(lambda); });
}

}  // namespace mpskit
