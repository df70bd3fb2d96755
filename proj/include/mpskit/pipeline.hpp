// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/dataset.hpp"
#include "mpskit/integrate.hpp"
#include "mpskit/intensity.hpp"
#include "mpskit/metrics.hpp"
#include "mpskit/solver.hpp"

#include <fmt/format.h>

namespace mpskit::pipeline {

using io::json;
namespace fs = std::filesystem;

/// A stage failed; `stage` is one of render, estimate, normalize, solve,
/// integrate, eval.
struct StageError : Error
{
    StageError(std::string s, const std::string& what) : Error(s + ": " + what), stage(std::move(s)) {}
    std::string stage;
};

enum class SolverMethod { lambertian, robust };

struct Config
{
    fs::path output_dir;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> bands;
    std::vector<dataset::Scene> scenes;
    intensity::Method estimator = intensity::Method::factorize;
    intensity::FactorizeOptions factorize;
    SolverMethod solver = SolverMethod::robust;
    solver::RobustOptions robust;
    bool integrate = true;
};

/// Config document:
///   output_dir  string, relative to the config file
///   seeds       [int]             (default: [default_seed])
///   bands       [int]             band counts t; default: full pool
///   scenes      [scene]           nonempty, see dataset::scene_from_json
///   estimator   {method: factorize|oracle, max_iters, tol, trim_fraction}
///   solver      {method: robust|lambertian, low, high}
///   integrate   bool
inline Config config_from_json(const json& j, const fs::path& base, std::uint64_t default_seed = 0)
{
    if (!j.is_object())
        throw SchemaError("$", "config must be an object");
    Config c;
    c.output_dir = base / io::field<std::string>(j, "output_dir", "");
    c.seeds = io::field_or<std::vector<std::uint64_t>>(j, "seeds", "", {default_seed});
    if (c.seeds.empty())
        throw SchemaError("seeds", "must not be empty");
    if (!j.contains("scenes") || !j["scenes"].is_array())
        throw SchemaError("scenes", "missing scene array");
    if (j["scenes"].empty())
        throw SchemaError("scenes", "must not be empty");
    for (std::size_t k = 0; k < j["scenes"].size(); ++k)
        c.scenes.push_back(dataset::scene_from_json(j["scenes"][k], "scenes[" + std::to_string(k) + "]", base));
    c.bands = io::field_or<std::vector<std::size_t>>(j, "bands", "", {});
    for (std::size_t k = 0; k < c.bands.size(); ++k)
        for (const auto& s : c.scenes)
            if (c.bands[k] == 0 || c.bands[k] > s.spec.rig.size())
                throw SchemaError("bands[" + std::to_string(k) + "]", "must lie in [1, pool size of " + s.name + "]");
    if (j.contains("estimator")) {
        const json& e = j["estimator"];
        auto m = io::field_or<std::string>(e, "method", "estimator", "factorize");
        if (m == "factorize")
            c.estimator = intensity::Method::factorize;
        else if (m == "oracle")
            c.estimator = intensity::Method::oracle;
        else
            throw SchemaError("estimator.method", "unknown estimator '" + m + "'");
        c.factorize.max_iters = io::field_or<std::size_t>(e, "max_iters", "estimator", c.factorize.max_iters);
        c.factorize.tol = io::field_or<double>(e, "tol", "estimator", c.factorize.tol);
        c.factorize.trim_fraction = io::field_or<double>(e, "trim_fraction", "estimator", c.factorize.trim_fraction);
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        auto m = io::field_or<std::string>(s, "method", "solver", "robust");
        if (m == "robust")
            c.solver = SolverMethod::robust;
        else if (m == "lambertian")
            c.solver = SolverMethod::lambertian;
        else
            throw SchemaError("solver.method", "unknown solver '" + m + "'");
        c.robust.low_pct = io::field_or<double>(s, "low", "solver", c.robust.low_pct);
        c.robust.high_pct = io::field_or<double>(s, "high", "solver", c.robust.high_pct);
    }
    c.integrate = io::field_or<bool>(j, "integrate", "", true);
    return c;
}

inline Config read_config(const fs::path& path, std::uint64_t default_seed = 0)
{
    json j;
    try {
        j = io::read_json(path);
    } catch (const IoError& e) {
        throw SchemaError("$", e.what());
    }
    return config_from_json(j, path.parent_path(), default_seed);
}

struct Row
{
    std::string scene;
    std::string material;
    std::size_t bands = 0;
    std::uint64_t seed = 0;
    double mae_estimated = 0.0;
    double mae_ones = 0.0;
    double cosine_estimated = 0.0;
    double intensity_l2 = 0.0;
    double coverage_estimated = 0.0;
    double coverage_ones = 0.0;
    std::size_t iterations = 0;
};

struct Report
{
    std::vector<Row> rows;
    std::string csv;
};

inline std::string format_number(double v)
{
    if (!std::isfinite(v))
        return "nan";
    return fmt::format("{:.6f}", v);
}

inline std::string report_csv(const std::vector<Row>& rows, const char* estimator, const char* solver)
{
    std::string out =
        "scene,material,bands,seed,estimator,solver,mae_deg_estimated,mae_deg_ones,cosine_loss_estimated,"
        "intensity_l2,coverage_estimated,coverage_ones,iterations\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.scene, r.material, r.bands, r.seed, estimator,
                           solver, format_number(r.mae_estimated), format_number(r.mae_ones),
                           format_number(r.cosine_estimated), format_number(r.intensity_l2),
                           format_number(r.coverage_estimated), format_number(r.coverage_ones), r.iterations);
    return out;
}

/// Fraction of ground-truth pixels with a prediction, and the metrics over them.
struct NormalScore
{
    double mae = std::numeric_limits<double>::quiet_NaN();
    double cosine = std::numeric_limits<double>::quiet_NaN();
    double coverage = 0.0;
};

inline NormalScore score_normals(const NormalMap& gt, const NormalMap& pred)
{
    NormalScore s;
    NormalMap g = metrics::restrict_to(gt, pred);
    NormalMap p = metrics::restrict_to(pred, gt);
    std::size_t total = gt.mask.count(), covered = g.mask.count();
    s.coverage = total > 0 ? double(covered) / double(total) : 0.0;
    if (covered > 0) {
        s.mae = metrics::mean_angular_error(g, p);
        s.cosine = metrics::cosine_loss(g, p);
    }
    return s;
}

inline solver::SolveReport run_solver(const Config& c, const MultispectralImage& img, const LightingRig& rig,
                                      unsigned threads)
{
    return c.solver == SolverMethod::robust ? solver::solve_robust(img, rig, c.robust, threads)
                                            : solver::solve_lambertian(img, rig, threads);
}

/// Normal map with pixels too steep to integrate removed.
inline NormalMap integrable_part(const NormalMap& n)
{
    NormalMap out = n;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out.valid(i) && out.normals[i].z() < integrate::kMinNormalZ)
            out.clear(i);
    return out;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

/// render -> estimate -> normalize -> solve -> integrate -> eval for every
/// (scene, band count, seed). Writes one directory per run and report.csv.
/// Output does not depend on `threads`.
inline Report run(const Config& c, unsigned threads = 1, bool quiet = true)
{
    Report rep;
    fs::create_directories(c.output_dir);
    const char* est_name = intensity::to_string(c.estimator);
    const char* solver_name = c.solver == SolverMethod::robust ? "robust" : "lambertian";
    for (std::size_t si = 0; si < c.scenes.size(); ++si) {
        const auto& scene = c.scenes[si];
        std::vector<std::size_t> bands = c.bands.empty() ? std::vector<std::size_t>{scene.spec.rig.size()} : c.bands;
        for (std::size_t t : bands)
            for (std::uint64_t seed : c.seeds) {
                fs::path dir = c.output_dir / fmt::format("{:03d}_{}", si, scene.name) / fmt::format("t{}_s{}", t, seed);
                stage("render", [&] { return dataset::render_stack(scene, t, seed, dir / "stack", threads, si); });
                dataset::Stack stack = stage("render", [&] { return dataset::load_stack(dir / "stack"); });

                intensity::IntensityEstimate est = stage("estimate", [&] {
                    if (c.estimator == intensity::Method::oracle)
                        return intensity::estimate_oracle(scene.spec.material, stack.rig);
                    auto opts = c.factorize;
                    opts.threads = threads;
                    return intensity::estimate_factorize(stack.image, stack.rig, opts);
                });
                io::write_json(dir / "est.json", io::estimate_to_json(est));

                auto normalized = stage("normalize", [&] { return intensity::normalize(stack.image, est.values); });
                auto with_est = stage("solve", [&] { return run_solver(c, normalized, stack.rig, threads); });
                auto with_ones = stage("solve", [&] { return run_solver(c, stack.image, stack.rig, threads); });
                io::write_normals(dir / "normals.pfm", with_est.normals);
                io::write_normals(dir / "normals_ones.pfm", with_ones.normals);

                if (c.integrate)
                    stage("integrate", [&] {
                        NormalMap usable = integrable_part(with_est.normals);
                        if (usable.mask.count() > 0)
                            io::write_depth(dir / "depth.pfm", integrate::integrate_fc(usable));
                        return 0;
                    });

                Row row = stage("eval", [&] {
                    Row r;
                    r.scene = scene.name;
                    r.material = scene.spec.material.name();
                    r.bands = t;
                    r.seed = seed;
                    NormalScore se = score_normals(stack.normals_gt, with_est.normals);
                    NormalScore so = score_normals(stack.normals_gt, with_ones.normals);
                    r.mae_estimated = se.mae;
                    r.mae_ones = so.mae;
                    r.cosine_estimated = se.cosine;
                    r.coverage_estimated = se.coverage;
                    r.coverage_ones = so.coverage;
                    r.intensity_l2 = metrics::intensity_error(stack.e_prime_gt, est.values, true);
                    r.iterations = est.iterations;
                    return r;
                });
                if (!quiet)
                    fmt::print(stderr, "[pipeline] {} t={} seed={}: MAE {} deg (ones: {} deg)\n", scene.name, t, seed,
                               format_number(row.mae_estimated), format_number(row.mae_ones));
                rep.rows.push_back(std::move(row));
            }
    }
    rep.csv = report_csv(rep.rows, est_name, solver_name);
    std::ofstream out(c.output_dir / "report.csv", std::ios::binary);
    if (!out)
        throw IoError("cannot write report.csv");
    out << rep.csv;
    return rep;
}

}  // namespace mpskit::pipeline
