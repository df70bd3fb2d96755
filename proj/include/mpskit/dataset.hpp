// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/io.hpp"
#include "mpskit/render.hpp"

#include <cstdio>
#include <cstdlib>

namespace mpskit::dataset {

using io::json;
namespace fs = std::filesystem;

/// Directory relative asset paths resolve against: MPSKIT_DATA_DIR when set,
/// otherwise `fallback` (usually the directory of the referencing document).
inline fs::path asset_dir(const fs::path& fallback)
{
    if (const char* env = std::getenv("MPSKIT_DATA_DIR"); env && *env)
        return fs::path(env);
    return fallback;
}

inline fs::path resolve(const fs::path& p, const fs::path& base)
{
    return p.is_absolute() ? p : asset_dir(base) / p;
}

// ---------------------------------------------------------------------------
// Procedural definitions
// ---------------------------------------------------------------------------

/// Spectrum as a number, {"type": "gaussian", mean, sigma, scale, offset},
/// or {"type": "linear", wavelengths, values} (clamped at the ends).
inline SpectrumFn parse_spectrum(const json& j, const std::string& path)
{
    if (j.is_number()) {
        double c = j.get<double>();
        if (c < 0.0)
            throw SchemaError(path, "spectrum must be nonnegative");
        return [c](double) { return c; };
    }
    auto type = io::field<std::string>(j, "type", path);
    if (type == "gaussian") {
        double mean = io::field<double>(j, "mean", path), sigma = io::field<double>(j, "sigma", path);
        double scale = io::field_or<double>(j, "scale", path, 1.0), offset = io::field_or<double>(j, "offset", path, 0.0);
        if (!(sigma > 0.0) || scale < 0.0 || offset < 0.0)
            throw SchemaError(path, "gaussian needs sigma > 0 and nonnegative scale/offset");
        return [=](double l) { return offset + scale * std::exp(-0.5 * (l - mean) * (l - mean) / (sigma * sigma)); };
    }
    if (type == "linear") {
        auto xs = io::field<std::vector<double>>(j, "wavelengths", path);
        auto ys = io::field<std::vector<double>>(j, "values", path);
        if (xs.size() != ys.size() || xs.empty())
            throw SchemaError(path, "linear spectrum needs matching nonempty wavelengths/values");
        for (double y : ys)
            if (y < 0.0)
                throw SchemaError(path + ".values", "spectrum must be nonnegative");
        for (std::size_t k = 1; k < xs.size(); ++k)
            if (!(xs[k] > xs[k - 1]))
                throw SchemaError(path + ".wavelengths", "must be strictly increasing");
        return [xs, ys](double l) {
            if (l <= xs.front())
                return ys.front();
            if (l >= xs.back())
                return ys.back();
            auto it = std::upper_bound(xs.begin(), xs.end(), l);
            std::size_t hi = std::size_t(it - xs.begin()), lo = hi - 1;
            double w = (l - xs[lo]) / (xs[hi] - xs[lo]);
            return (1 - w) * ys[lo] + w * ys[hi];
        };
    }
    throw SchemaError(path + ".type", "unknown spectrum type '" + type + "'");
}

inline WavelengthGrid parse_grid(const json& j, const std::string& path, WavelengthGrid fallback)
{
    if (!j.is_object() || !j.contains("wavelengths"))
        return fallback;
    const json& g = j["wavelengths"];
    try {
        if (g.is_array())
            return WavelengthGrid(g.get<std::vector<double>>());
        return WavelengthGrid::uniform(io::field<double>(g, "start", path + ".wavelengths"),
                                       io::field<double>(g, "stop", path + ".wavelengths"),
                                       io::field<std::size_t>(g, "count", path + ".wavelengths"));
    } catch (const ArgumentError& e) {
        throw SchemaError(path + ".wavelengths", e.what());
    }
}

inline SpectralBrdfTable material_from_json(const json& j, const std::string& path, const fs::path& base)
{
    if (j.is_string()) {
        // A path names either a tabulated .sbrdf header or a procedural spec.
        fs::path file = resolve(j.get<std::string>(), base);
        json doc = io::read_json(file);
        if (!doc.is_object() || !doc.contains("type"))
            return io::read_sbrdf(file);
        return material_from_json(doc, file.filename().string(), file.parent_path());
    }
    auto type = io::field<std::string>(j, "type", path);
    WavelengthGrid grid = parse_grid(j, path, WavelengthGrid::uniform(360.0, 1000.0, 65));
    std::string name = io::field_or<std::string>(j, "name", path, type);
    try {
        if (type == "lambertian") {
            auto albedo = parse_spectrum(j.contains("albedo") ? j["albedo"] : json(1.0), path + ".albedo");
            return make_lambertian_table(name, grid, albedo);
        }
        if (type == "phong") {
            auto kd = parse_spectrum(j.contains("kd") ? j["kd"] : json(0.5), path + ".kd");
            auto ks = parse_spectrum(j.contains("ks") ? j["ks"] : json(0.5), path + ".ks");
            double shin = io::field_or<double>(j, "shininess", path, 50.0);
            auto nl = io::field_or<std::size_t>(j, "cosNL_samples", path, 33);
            auto nh = io::field_or<std::size_t>(j, "cosNH_samples", path, 257);
            return make_phong_table(name, grid, kd, ks, shin, nl, nh);
        }
    } catch (const ArgumentError& e) {
        throw SchemaError(path, e.what());
    }
    throw SchemaError(path + ".type", "unknown material type '" + type + "'");
}

inline LightingRig rig_from_spec(const json& j, const std::string& path, const fs::path& base)
{
    if (j.is_string()) {
        fs::path file = resolve(j.get<std::string>(), base);
        json doc = io::read_json(file);
        if (doc.is_object() && doc.contains("lights"))
            return io::rig_from_json(doc, file.filename().string());
        return rig_from_spec(doc, file.filename().string(), file.parent_path());
    }
    if (j.contains("lights"))
        return io::rig_from_json(j, path);
    auto type = io::field<std::string>(j, "type", path);
    if (type != "uniform")
        throw SchemaError(path + ".type", "unknown rig type '" + type + "'");
    WavelengthGrid grid = parse_grid(j, path, WavelengthGrid::uniform(360.0, 1000.0, 195));
    try {
        return make_uniform_rig(io::field<std::size_t>(j, "count", path), grid,
                                io::field_or<double>(j, "max_polar_deg", path, 55.0),
                                io::field_or<double>(j, "radiance", path, 1.0));
    } catch (const ArgumentError& e) {
        throw SchemaError(path, e.what());
    }
}

/// Parsed scene plus the source documents needed to reproduce it.
struct Scene
{
    std::string name;
    render::SceneSpec spec;
    json material_source;
};

inline Scene scene_from_json(const json& j, const std::string& path, const fs::path& base)
{
    if (!j.is_object())
        throw SchemaError(path, "scene must be an object");
    Scene s;
    s.name = io::field_or<std::string>(j, "name", path, "scene");
    if (!j.contains("shape"))
        throw SchemaError(path + ".shape", "missing required field");
    const json& sh = j["shape"];
    const std::string sp = path + ".shape";
    auto type = io::field<std::string>(sh, "type", sp);
    if (type == "sphere") {
        render::SphereShape sphere;
        auto res = io::field_or<std::vector<int>>(sh, "resolution", sp, {128, 128});
        if (res.size() != 2 || res[0] <= 0 || res[1] <= 0)
            throw SchemaError(sp + ".resolution", "expected [width, height] > 0");
        sphere.width = res[0];
        sphere.height = res[1];
        auto c = io::field_or<std::vector<double>>(sh, "center", sp, {res[0] / 2.0, res[1] / 2.0});
        if (c.size() != 2)
            throw SchemaError(sp + ".center", "expected [cx, cy]");
        sphere.cx = c[0];
        sphere.cy = c[1];
        sphere.radius = io::field_or<double>(sh, "radius", sp, 0.47 * std::min(res[0], res[1]));
        if (!(sphere.radius > 0.0))
            throw SchemaError(sp + ".radius", "must be positive");
        s.spec.shape = sphere;
    } else if (type == "normal_map") {
        s.spec.shape = io::read_normals(resolve(io::field<std::string>(sh, "path", sp), base));
    } else {
        throw SchemaError(sp + ".type", "unknown shape type '" + type + "'");
    }
    if (!j.contains("material"))
        throw SchemaError(path + ".material", "missing required field");
    s.material_source = j["material"];
    if (s.material_source.is_string())
        s.material_source = fs::absolute(resolve(s.material_source.get<std::string>(), base)).string();
    s.spec.material = material_from_json(j["material"], path + ".material", base);
    if (!j.contains("rig"))
        throw SchemaError(path + ".rig", "missing required field");
    s.spec.rig = rig_from_spec(j["rig"], path + ".rig", base);
    s.spec.noise_sigma = io::field_or<double>(j, "noise_sigma", path, 0.0);
    auto jr = io::field_or<std::vector<double>>(j, "jitter_range", path, {0.1, 1.0});
    if (jr.size() != 2)
        throw SchemaError(path + ".jitter_range", "expected [lo, hi]");
    s.spec.jitter = {jr[0], jr[1]};
    try {
        s.spec.validate();
    } catch (const ArgumentError& e) {
        throw SchemaError(path, e.what());
    }
    return s;
}

inline Scene read_scene(const fs::path& path)
{
    return scene_from_json(io::read_json(path), "scene", path.parent_path());
}

// ---------------------------------------------------------------------------
// Stacks on disk
// ---------------------------------------------------------------------------

inline std::string band_file(std::size_t j)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "band_%03zu.pfm", j);
    return buf;
}

struct Stack
{
    MultispectralImage image;
    LightingRig rig;
    NormalMap normals_gt;
    EquivalentIntensities e_prime_gt;
    json meta;
};

/// Writes band_NNN.pfm, mask.pfm, normals_gt.pfm and meta.json.
inline void write_stack(const fs::path& dir, const render::RenderResult& r, const json& meta_extra)
{
    fs::create_directories(dir);
    for (std::size_t j = 0; j < r.image.bands(); ++j)
        io::write_pfm(dir / band_file(j), io::to_pfm(r.image.band(j), r.image.width(), r.image.height()));
    io::write_mask(dir / "mask.pfm", r.image.mask());
    io::write_normals(dir / "normals_gt.pfm", r.normals);
    json meta = meta_extra;
    meta["bands"] = r.image.bands();
    meta["width"] = r.image.width();
    meta["height"] = r.image.height();
    meta["e_prime_gt"] = r.e_prime.values;
    meta["jitter"] = r.jitter;
    meta["rig"] = io::rig_to_json(r.rig);
    io::write_json(dir / "meta.json", meta);
}

inline Stack load_stack(const fs::path& dir)
{
    Stack s;
    s.meta = io::read_json(dir / "meta.json");
    auto bands = io::field<std::size_t>(s.meta, "bands", "meta");
    s.rig = io::rig_from_json(io::field<json>(s.meta, "rig", "meta"), "meta.rig");
    if (s.rig.size() != bands)
        throw SchemaError("meta.rig", "light count does not match band count");
    Mask mask = io::read_mask(dir / "mask.pfm");
    s.image = MultispectralImage(bands, mask);
    for (std::size_t j = 0; j < bands; ++j) {
        io::PfmImage p = io::read_pfm(dir / band_file(j));
        if (p.channels != 1 || p.width != mask.width || p.height != mask.height)
            throw IoError(band_file(j) + ": dimensions differ from mask");
        auto plane = s.image.band(j);
        for (std::size_t i = 0; i < plane.size(); ++i)
            plane[i] = mask[i] ? std::max(0.0, double(p.data[i])) : 0.0;
    }
    if (fs::exists(dir / "normals_gt.pfm"))
        s.normals_gt = io::read_normals(dir / "normals_gt.pfm");
    s.e_prime_gt.values = io::field_or<std::vector<double>>(s.meta, "e_prime_gt", "meta", {});
    return s;
}

/// Renders `scene` under a seeded t-subset of its rig and writes the stack.
inline render::RenderResult render_stack(const Scene& scene, std::size_t t, std::uint64_t seed, const fs::path& dir,
                                         unsigned threads = 1, std::uint64_t stream_index = 0)
{
    auto idx = render::select_directions(scene.spec.rig.size(), t, seed, stream_index);
    render::SceneSpec sub = scene.spec;
    sub.rig = scene.spec.rig.subset(idx);
    std::uint64_t render_seed = splitmix64(seed ^ splitmix64(stream_index + 1));
    auto result = render::render_image(sub, render_seed, threads);
    json meta;
    meta["scene"] = scene.name;
    meta["material"] = {{"name", scene.spec.material.name()}, {"source", scene.material_source}};
    meta["seed"] = seed;
    meta["render_seed"] = render_seed;
    meta["pool_size"] = scene.spec.rig.size();
    meta["selected_indices"] = idx;
    meta["noise_sigma"] = scene.spec.noise_sigma;
    write_stack(dir, result, meta);
    return result;
}

/// One stack per scene under out/scene_NNN plus out/manifest.json.
inline json make_dataset(std::span<const Scene> scenes, std::size_t t, std::uint64_t seed, const fs::path& out,
                         unsigned threads = 1)
{
    json manifest;
    manifest["seed"] = seed;
    manifest["bands"] = t;
    manifest["stacks"] = json::array();
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        if (t > scenes[s].spec.rig.size())
            throw ArgumentError("scene " + scenes[s].name + ": t exceeds direction pool size");
        char buf[32];
        std::snprintf(buf, sizeof buf, "scene_%03zu", s);
        render_stack(scenes[s], t, seed, out / buf, threads, s);
        json meta = io::read_json(out / buf / "meta.json");
        manifest["stacks"].push_back({{"dir", buf}, {"scene", scenes[s].name}, {"selected_indices", meta["selected_indices"]}});
    }
    fs::create_directories(out);
    io::write_json(out / "manifest.json", manifest);
    return manifest;
}

}  // namespace mpskit::dataset
