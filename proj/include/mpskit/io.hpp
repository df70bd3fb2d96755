// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/image.hpp"
#include "mpskit/integrate.hpp"
#include "mpskit/intensity.hpp"
#include "mpskit/spectral.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mpskit::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// PFM
// ---------------------------------------------------------------------------

/// Float image, row-major with row 0 at the top. PFM stores rows bottom-up;
/// read_pfm / write_pfm flip on the way in and out.
struct PfmImage
{
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data;

    float at(int x, int y, int c = 0) const { return data[(std::size_t(y) * width + x) * channels + c]; }
};

inline void write_pfm(const fs::path& path, const PfmImage& img)
{
    if (img.channels != 1 && img.channels != 3)
        throw ArgumentError("PFM supports 1 or 3 channels");
    if (img.data.size() != std::size_t(img.width) * img.height * img.channels)
        throw ArgumentError("PFM payload size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << (img.channels == 3 ? "PF" : "Pf") << '\n' << img.width << ' ' << img.height << '\n' << "-1.0\n";
    const std::size_t row = std::size_t(img.width) * img.channels;
    std::vector<char> bytes(row * sizeof(float));
    for (int y = img.height - 1; y >= 0; --y) {
        const float* src = img.data.data() + std::size_t(y) * row;
        for (std::size_t k = 0; k < row; ++k) {
            std::uint32_t u = std::bit_cast<std::uint32_t>(src[k]);
            if constexpr (std::endian::native == std::endian::big)
                u = __builtin_bswap32(u);
            std::memcpy(bytes.data() + 4 * k, &u, 4);
        }
        out.write(bytes.data(), std::streamsize(bytes.size()));
    }
    if (!out)
        throw IoError("failed writing " + path.string());
}

inline PfmImage read_pfm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string magic;
    PfmImage img;
    double scale = 0.0;
    if (!(in >> magic >> img.width >> img.height >> scale))
        throw IoError(path.string() + ": malformed PFM header");
    if (magic == "PF")
        img.channels = 3;
    else if (magic == "Pf")
        img.channels = 1;
    else
        throw IoError(path.string() + ": not a PFM file");
    if (img.width <= 0 || img.height <= 0 || scale == 0.0)
        throw IoError(path.string() + ": invalid PFM dimensions or scale");
    in.get();  // single whitespace byte after the scale
    const bool little = scale < 0.0;
    const bool swap = little != (std::endian::native == std::endian::little);
    const std::size_t row = std::size_t(img.width) * img.channels;
    img.data.resize(row * img.height);
    std::vector<char> bytes(row * 4);
    for (int y = img.height - 1; y >= 0; --y) {
        if (!in.read(bytes.data(), std::streamsize(bytes.size())))
            throw IoError(path.string() + ": truncated PFM payload");
        float* dst = img.data.data() + std::size_t(y) * row;
        for (std::size_t k = 0; k < row; ++k) {
            std::uint32_t u;
            std::memcpy(&u, bytes.data() + 4 * k, 4);
            if (swap)
                u = __builtin_bswap32(u);
            dst[k] = std::bit_cast<float>(u);
        }
    }
    return img;
}

inline PfmImage to_pfm(std::span<const double> plane, int width, int height)
{
    PfmImage img{width, height, 1, std::vector<float>(plane.begin(), plane.end())};
    return img;
}

inline void write_mask(const fs::path& path, const Mask& mask)
{
    PfmImage img{mask.width, mask.height, 1, std::vector<float>(mask.size())};
    for (std::size_t i = 0; i < mask.size(); ++i)
        img.data[i] = mask[i] ? 1.0f : 0.0f;
    write_pfm(path, img);
}

inline Mask read_mask(const fs::path& path)
{
    PfmImage img = read_pfm(path);
    if (img.channels != 1)
        throw IoError(path.string() + ": mask must be single-channel");
    Mask m(img.width, img.height);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.set(i, img.data[i] > 0.5f);
    return m;
}

/// 3-channel PFM; pixels outside the mask are written as (0, 0, 0).
inline void write_normals(const fs::path& path, const NormalMap& n)
{
    PfmImage img{n.width, n.height, 3, std::vector<float>(n.size() * 3, 0.0f)};
    for (std::size_t i = 0; i < n.size(); ++i)
        if (n.valid(i))
            for (int c = 0; c < 3; ++c)
                img.data[3 * i + c] = float(n.normals[i](c));
    write_pfm(path, img);
}

/// Zero vectors read back as outside the mask; others are renormalized.
inline NormalMap read_normals(const fs::path& path)
{
    PfmImage img = read_pfm(path);
    if (img.channels != 3)
        throw IoError(path.string() + ": normal map must be 3-channel");
    NormalMap n(img.width, img.height);
    for (std::size_t i = 0; i < n.size(); ++i) {
        Vec3 v(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
        if (v.squaredNorm() > 0.0)
            n.set(i, v.normalized());
    }
    return n;
}

inline void write_depth(const fs::path& path, const DepthMap& d) { write_pfm(path, to_pfm(d.depth, d.width, d.height)); }

/// Height-field mesh over in-mask pixels, one quad (two triangles) per 2x2
/// block of valid pixels. World y points up.
inline void write_obj(const fs::path& path, const DepthMap& d)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    std::vector<std::size_t> vid(d.depth.size(), 0);
    std::size_t next = 1;
    out << "# height field " << d.width << "x" << d.height << "\n";
    char buf[96];
    for (int y = 0; y < d.height; ++y)
        for (int x = 0; x < d.width; ++x) {
            std::size_t i = std::size_t(y) * d.width + x;
            if (!d.mask[i])
                continue;
            std::snprintf(buf, sizeof buf, "v %d %d %.9g\n", x, d.height - 1 - y, d.depth[i]);
            out << buf;
            vid[i] = next++;
        }
    for (int y = 0; y + 1 < d.height; ++y)
        for (int x = 0; x + 1 < d.width; ++x) {
            std::size_t a = vid[std::size_t(y) * d.width + x], b = vid[std::size_t(y) * d.width + x + 1];
            std::size_t c = vid[std::size_t(y + 1) * d.width + x], e = vid[std::size_t(y + 1) * d.width + x + 1];
            if (a && b && c && e)
                out << "f " << a << ' ' << c << ' ' << e << "\nf " << a << ' ' << e << ' ' << b << '\n';
        }
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

inline json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

/// Typed field access that reports the failing field path.
template <typename T>
T field(const json& j, const std::string& key, const std::string& path)
{
    std::string where = path.empty() ? key : path + "." + key;
    if (!j.is_object() || !j.contains(key))
        throw SchemaError(where, "missing required field");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(where, std::string("wrong type: ") + e.what());
    }
}

template <typename T>
T field_or(const json& j, const std::string& key, const std::string& path, T fallback)
{
    if (!j.is_object() || !j.contains(key))
        return fallback;
    return field<T>(j, key, path);
}

inline Vec3 to_vec3(const std::vector<double>& v, const std::string& path)
{
    if (v.size() != 3)
        throw SchemaError(path, "expected 3 components");
    return {v[0], v[1], v[2]};
}

// ---------------------------------------------------------------------------
// SpectralBrdfTable container: <stem>.sbrdf.json + <stem>.sbrdf.bin
// ---------------------------------------------------------------------------

inline fs::path sbrdf_payload_path(const fs::path& header)
{
    std::string s = header.string();
    const std::string suffix = ".json";
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
        s.resize(s.size() - suffix.size());
    return fs::path(s + ".bin");
}

/// Writes the JSON header and the little-endian float32 payload next to it.
inline void write_sbrdf(const fs::path& header, const SpectralBrdfTable& t)
{
    fs::path bin = sbrdf_payload_path(header);
    json j;
    j["format"] = "sbrdf";
    j["version"] = 1;
    j["name"] = t.name();
    j["wavelengths"] = std::vector<double>(t.wavelengths().values().begin(), t.wavelengths().values().end());
    j["cosNL_axis"] = std::vector<double>(t.cos_nl_axis().begin(), t.cos_nl_axis().end());
    j["cosNH_axis"] = std::vector<double>(t.cos_nh_axis().begin(), t.cos_nh_axis().end());
    j["values_row_major"] = {{"file", bin.filename().string()},
                             {"dtype", "float32le"},
                             {"order", {"wavelength", "cosNL", "cosNH"}},
                             {"shape", {t.wavelengths().size(), t.cos_nl_axis().size(), t.cos_nh_axis().size()}}};
    write_json(header, j);
    std::ofstream out(bin, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + bin.string() + " for writing");
    for (double v : t.values()) {
        std::uint32_t u = std::bit_cast<std::uint32_t>(float(v));
        if constexpr (std::endian::native == std::endian::big)
            u = __builtin_bswap32(u);
        out.write(reinterpret_cast<const char*>(&u), 4);
    }
}

inline SpectralBrdfTable read_sbrdf(const fs::path& header)
{
    json j = read_json(header);
    const std::string p = header.filename().string();
    auto wl = field<std::vector<double>>(j, "wavelengths", p);
    auto nl = field<std::vector<double>>(j, "cosNL_axis", p);
    auto nh = field<std::vector<double>>(j, "cosNH_axis", p);
    auto name = field<std::string>(j, "name", p);
    const json& payload = j.contains("values_row_major") ? j["values_row_major"] : json();
    std::vector<double> values;
    const std::size_t expected = wl.size() * nl.size() * nh.size();
    if (payload.is_array()) {
        values = payload.get<std::vector<double>>();
    } else {
        auto file = field<std::string>(payload, "file", p + ".values_row_major");
        fs::path bin = header.parent_path() / file;
        std::ifstream in(bin, std::ios::binary);
        if (!in)
            throw IoError("cannot open " + bin.string());
        values.resize(expected);
        for (std::size_t k = 0; k < expected; ++k) {
            std::uint32_t u;
            if (!in.read(reinterpret_cast<char*>(&u), 4))
                throw IoError(bin.string() + ": truncated payload");
            if constexpr (std::endian::native == std::endian::big)
                u = __builtin_bswap32(u);
            values[k] = double(std::bit_cast<float>(u));
        }
    }
    if (values.size() != expected)
        throw IoError(p + ": payload has " + std::to_string(values.size()) + " values, expected " +
                      std::to_string(expected));
    return SpectralBrdfTable(std::move(name), WavelengthGrid(std::move(wl)), std::move(nl), std::move(nh),
                             std::move(values));
}

// ---------------------------------------------------------------------------
// LightingRig JSON
// ---------------------------------------------------------------------------

inline json rig_to_json(const LightingRig& rig)
{
    json j;
    j["wavelengths"] = std::vector<double>(rig.wavelengths.values().begin(), rig.wavelengths.values().end());
    j["view"] = {rig.view.x(), rig.view.y(), rig.view.z()};
    j["lights"] = json::array();
    for (const auto& L : rig.lights)
        j["lights"].push_back({{"direction", {L.direction.x(), L.direction.y(), L.direction.z()}},
                               {"radiance", L.radiance},
                               {"band", {L.band.lo, L.band.hi}},
                               {"spectrum", L.spectrum},
                               {"sensitivity", L.sensitivity}});
    return j;
}

inline LightingRig rig_from_json(const json& j, const std::string& path = "rig")
{
    LightingRig rig;
    try {
        rig.wavelengths = WavelengthGrid(field<std::vector<double>>(j, "wavelengths", path));
    } catch (const ArgumentError& e) {
        throw SchemaError(path + ".wavelengths", e.what());
    }
    if (j.contains("view"))
        rig.view = to_vec3(field<std::vector<double>>(j, "view", path), path + ".view");
    if (!j.contains("lights") || !j["lights"].is_array())
        throw SchemaError(path + ".lights", "missing light array");
    for (std::size_t k = 0; k < j["lights"].size(); ++k) {
        const json& lj = j["lights"][k];
        std::string lp = path + ".lights[" + std::to_string(k) + "]";
        Light L;
        L.direction = to_vec3(field<std::vector<double>>(lj, "direction", lp), lp + ".direction");
        L.radiance = field<double>(lj, "radiance", lp);
        auto band = field<std::vector<double>>(lj, "band", lp);
        if (band.size() != 2)
            throw SchemaError(lp + ".band", "expected [lo, hi]");
        L.band = {band[0], band[1]};
        L.spectrum = field<std::vector<double>>(lj, "spectrum", lp);
        L.sensitivity = field<std::vector<double>>(lj, "sensitivity", lp);
        rig.lights.push_back(std::move(L));
    }
    try {
        rig.validate();
    } catch (const ArgumentError& e) {
        throw SchemaError(path, e.what());
    }
    return rig;
}

inline void write_rig(const fs::path& path, const LightingRig& rig) { write_json(path, rig_to_json(rig)); }
inline LightingRig read_rig(const fs::path& path) { return rig_from_json(read_json(path), path.filename().string()); }

// ---------------------------------------------------------------------------
// Intensity estimates
// ---------------------------------------------------------------------------

inline json estimate_to_json(const intensity::IntensityEstimate& e)
{
    return {{"values", e.values.values},
            {"method", intensity::to_string(e.method)},
            {"iterations", e.iterations},
            {"residual", e.residual}};
}

inline intensity::IntensityEstimate estimate_from_json(const json& j, const std::string& path = "est")
{
    intensity::IntensityEstimate e;
    e.values.values = field<std::vector<double>>(j, "values", path);
    auto m = field_or<std::string>(j, "method", path, "factorize");
    if (m == "oracle")
        e.method = intensity::Method::oracle;
    else if (m == "factorize")
        e.method = intensity::Method::factorize;
    else
        throw SchemaError(path + ".method", "unknown method '" + m + "'");
    e.iterations = field_or<std::size_t>(j, "iterations", path, 0);
    e.residual = field_or<double>(j, "residual", path, 0.0);
    return e;
}

}  // namespace mpskit::io
