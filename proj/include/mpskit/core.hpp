// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace mpskit {

using Vec3 = Eigen::Vector3d;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Invalid argument, shape mismatch, malformed input.
struct ArgumentError : Error
{
    using Error::Error;
};

/// Query outside a tabulated domain (no extrapolation).
struct RangeError : Error
{
    using Error::Error;
};

/// A spectral band whose integral vanishes.
struct DegenerateBandError : Error
{
    DegenerateBandError(std::size_t band, const std::string& what)
        : Error(what), band(band)
    {
    }
    std::size_t band;
};

/// Light directions that cannot determine a normal.
struct RigError : Error
{
    using Error::Error;
};

struct UnderConstrainedError : Error
{
    using Error::Error;
};

/// Raised by iterative estimators; carries the last iterate.
struct NonConvergenceError : Error
{
    NonConvergenceError(const std::string& what, std::vector<double> last)
        : Error(what), last_iterate(std::move(last))
    {
    }
    std::vector<double> last_iterate;
};

struct DegenerateSlopeError : Error
{
    DegenerateSlopeError(const std::string& what, std::vector<std::pair<int, int>> px)
        : Error(what), pixels(std::move(px))
    {
    }
    /// (x, y) of offending pixels.
    std::vector<std::pair<int, int>> pixels;
};

struct IoError : Error
{
    using Error::Error;
};

/// Configuration document does not match its schema. `path` names the field.
struct SchemaError : Error
{
    SchemaError(std::string field, const std::string& what)
        : Error(field + ": " + what), path(std::move(field))
    {
    }
    std::string path;
};

// ---------------------------------------------------------------------------
// WavelengthGrid
// ---------------------------------------------------------------------------

/// Strictly increasing wavelengths in nanometers.
class WavelengthGrid
{
public:
    WavelengthGrid() = default;

    explicit WavelengthGrid(std::vector<double> values) : values_(std::move(values))
    {
        if (values_.size() < 2)
            throw ArgumentError("wavelength grid needs at least 2 samples");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i]) || values_[i] <= 0.0)
                throw ArgumentError("wavelengths must be finite and positive");
            if (i > 0 && !(values_[i] > values_[i - 1]))
                throw ArgumentError("wavelengths must be strictly increasing");
        }
    }

    /// `count` samples evenly spaced over [start, stop].
    static WavelengthGrid uniform(double start, double stop, std::size_t count)
    {
        if (count < 2)
            throw ArgumentError("wavelength grid needs at least 2 samples");
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i)
            v[i] = start + (stop - start) * double(i) / double(count - 1);
        return WavelengthGrid(std::move(v));
    }

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    bool contains(double lambda) const { return lambda >= front() && lambda <= back(); }

    /// Segment index i and weight w with lambda = (1-w) v[i] + w v[i+1].
    std::pair<std::size_t, double> locate(double lambda) const
    {
        if (!contains(lambda))
            throw RangeError("wavelength " + std::to_string(lambda) + " nm outside grid [" +
                             std::to_string(front()) + ", " + std::to_string(back()) + "]");
        auto it = std::upper_bound(values_.begin(), values_.end(), lambda);
        std::size_t hi = std::size_t(it - values_.begin());
        if (hi >= values_.size())
            hi = values_.size() - 1;
        std::size_t lo = hi - 1;
        double w = (lambda - values_[lo]) / (values_[hi] - values_[lo]);
        return {lo, w};
    }

    bool operator==(const WavelengthGrid&) const = default;

private:
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

inline bool is_unit(const Vec3& v, double tol) { return std::abs(v.norm() - 1.0) <= tol; }

/// Trapezoidal integral of samples y over abscissae x.
inline double trapezoid(std::span<const double> x, std::span<const double> y)
{
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return acc;
}

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

/// Purpose tags used to split the random stream.
enum class Stream : std::uint64_t { jitter = 1, noise = 2, select = 3, spikes = 4, test = 99 };

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Random source with portable distributions. The engine output is fixed by
/// the standard; the conversions below are ours so streams match on every
/// standard library.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Independent stream for (seed, purpose, index).
    static Rng stream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0)
    {
        std::uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ (std::uint64_t(purpose) * 0xd1b54a32d192ed03ULL));
        h = splitmix64(h ^ (index + 0x632be59bd9b4e019ULL));
        return Rng(h);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n)
    {
        std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % n;
    }

    /// Standard normal via Box-Muller.
    double gaussian()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0)
            u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Threading
// ---------------------------------------------------------------------------

inline unsigned resolve_threads(unsigned requested)
{
    if (requested > 0)
        return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, n) over contiguous chunks. fn must only write to
/// state owned by index i, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
    unsigned k = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (k <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(k);
    std::size_t chunk = (n + k - 1) / k;
    std::vector<std::exception_ptr> errors(k);
    for (unsigned t = 0; t < k; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        pool.emplace_back([&, t, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i)
                    fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    pool.clear();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

}  // namespace mpskit
