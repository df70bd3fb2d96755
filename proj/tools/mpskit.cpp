// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: render, decompose, estimate, solve, integrate,
// eval, pipeline, generate.

#include "mpskit/mpskit.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <iostream>

namespace fs = std::filesystem;
using namespace mpskit;
using io::json;

namespace {

struct Globals
{
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool quiet = false;
};

void note(const Globals& g, const std::string& msg)
{
    if (!g.quiet)
        fmt::print(stderr, "{}\n", msg);
}

int cmd_render(const Globals& g, const fs::path& scene_path, const fs::path& out, std::optional<std::size_t> bands)
{
    auto scene = dataset::read_scene(scene_path);
    std::size_t t = bands.value_or(scene.spec.rig.size());
    auto r = dataset::render_stack(scene, t, g.seed, out, g.threads);
    note(g, fmt::format("rendered {} bands at {}x{} into {}", r.image.bands(), r.image.width(), r.image.height(),
                        out.string()));
    return 0;
}

int cmd_decompose(const Globals& g, const std::vector<std::string>& files, const std::string& rig_path,
                  std::size_t normal_count, const std::string& out_path, double threshold)
{
    std::optional<LightingRig> rig;
    if (!rig_path.empty())
        rig = io::read_rig(rig_path);
    std::string csv = "name,t,g,E_r_svd,E_r_lambertian,energy_ratio\n";
    std::vector<std::pair<std::string, double>> errors;
    for (const auto& f : files) {
        SpectralBrdfTable table = io::read_sbrdf(f);
        WavelengthGrid wl = rig ? rig->wavelengths : table.wavelengths();
        std::vector<Vec3> lights = rig ? rig->directions() : fibonacci_cap(39, 55.0 * M_PI / 180.0);
        auto pairs = default_geometry_pairs(lights, normal_count);
        auto R = build_reflectance_matrix(table, pairs, wl, rig ? rig->view : kFrontalView);
        auto d = srd::decompose(R);
        auto lam = srd::lambertian_fit(R);
        double e_svd = srd::reconstruction_error(R, srd::reconstruct(d));
        double e_lam = srd::reconstruction_error(R, srd::reconstruct(lam));
        errors.emplace_back(table.name(), e_svd);
        csv += fmt::format("{},{},{},{:.9g},{:.9g},{:.9g}\n", table.name(), R.rows(), R.cols(), e_svd, e_lam,
                           srd::energy_ratio(d));
    }
    if (out_path.empty())
        std::cout << csv;
    else {
        std::ofstream(out_path, std::ios::binary) << csv;
    }
    auto kept = srd::filter_materials(errors, threshold);
    note(g, fmt::format("{} of {} materials have E_r <= {}", kept.size(), errors.size(), threshold));
    if (!kept.empty())
        note(g, "retained: " + fmt::format("{}", fmt::join(kept, " ")));
    return 0;
}

int cmd_estimate(const Globals& g, const fs::path& stack_dir, const std::string& method, const fs::path& out,
                 intensity::FactorizeOptions opts)
{
    auto stack = dataset::load_stack(stack_dir);
    intensity::IntensityEstimate est;
    if (method == "oracle") {
        const json& src = stack.meta.at("material").at("source");
        auto material = dataset::material_from_json(src, "meta.material.source", stack_dir);
        est = intensity::estimate_oracle(material, stack.rig);
    } else {
        opts.threads = g.threads;
        est = intensity::estimate_factorize(stack.image, stack.rig, opts);
    }
    io::write_json(out, io::estimate_to_json(est));
    note(g, fmt::format("{} estimate after {} iterations, residual {:.3g}", intensity::to_string(est.method),
                        est.iterations, est.residual));
    return 0;
}

int cmd_solve(const Globals& g, const fs::path& stack_dir, const std::string& est_path, const std::string& method,
              solver::RobustOptions robust, const fs::path& out)
{
    auto stack = dataset::load_stack(stack_dir);
    EquivalentIntensities e = est_path.empty() ? EquivalentIntensities::ones(stack.image.bands())
                                               : io::estimate_from_json(io::read_json(est_path)).values;
    auto normalized = intensity::normalize(stack.image, e);
    auto rep = method == "lambertian" ? solver::solve_lambertian(normalized, stack.rig, g.threads)
                                      : solver::solve_robust(normalized, stack.rig, robust, g.threads);
    io::write_normals(out, rep.normals);
    std::size_t inmask = stack.image.mask().count(), ok = rep.count(solver::Reason::ok);
    note(g, fmt::format("solved {} of {} pixels ({} under-determined, {} trimmed out, {} unlit)", ok, inmask,
                        rep.count(solver::Reason::under_determined), rep.count(solver::Reason::trimmed_out),
                        rep.count(solver::Reason::unlit)));
    return 0;
}

int cmd_integrate(const Globals& g, const fs::path& normals_path, const fs::path& out, const std::string& obj,
                  bool drop_steep)
{
    NormalMap normals = io::read_normals(normals_path);
    if (drop_steep)
        normals = pipeline::integrable_part(normals);
    auto depth = integrate::integrate_fc(normals);
    io::write_depth(out, depth);
    if (!obj.empty())
        io::write_obj(obj, depth);
    note(g, "wrote " + out.string());
    return 0;
}

std::vector<double> intensities_from(const json& j)
{
    if (j.contains("values"))
        return j["values"].get<std::vector<double>>();
    if (j.contains("e_prime_gt"))
        return j["e_prime_gt"].get<std::vector<double>>();
    throw SchemaError("$", "no 'values' or 'e_prime_gt' field");
}

int cmd_eval(const fs::path& pred_path, const fs::path& gt_path, const std::string& est, const std::string& gt_est)
{
    auto score = pipeline::score_normals(io::read_normals(gt_path), io::read_normals(pred_path));
    double l2 = std::numeric_limits<double>::quiet_NaN();
    if (!est.empty() && !gt_est.empty())
        l2 = metrics::intensity_error({intensities_from(io::read_json(gt_est))}, {intensities_from(io::read_json(est))},
                                      true);
    std::cout << pipeline::format_number(score.mae) << ',' << pipeline::format_number(score.cosine) << ','
              << pipeline::format_number(l2) << '\n';
    return 0;
}

int cmd_pipeline(const Globals& g, const fs::path& config)
{
    auto cfg = pipeline::read_config(config, g.seed);
    auto rep = pipeline::run(cfg, g.threads, g.quiet);
    note(g, fmt::format("{} runs, report at {}", rep.rows.size(), (cfg.output_dir / "report.csv").string()));
    return 0;
}

int cmd_generate(const Globals& g, const std::string& material, const std::string& rig, const fs::path& out)
{
    if (material.empty() == rig.empty())
        throw ArgumentError("generate needs exactly one of --material or --rig");
    if (!material.empty()) {
        fs::path p(material);
        auto table = dataset::material_from_json(io::read_json(p), "material", p.parent_path());
        io::write_sbrdf(out, table);
    } else {
        fs::path p(rig);
        io::write_rig(out, dataset::rig_from_spec(io::read_json(p), "rig", p.parent_path()));
    }
    note(g, "wrote " + out.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mpskit: multispectral photometric stereo toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores); output does not depend on it")
        ->capture_default_str();
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");

    std::function<int()> action;

    auto* render = app.add_subcommand("render", "Render a multispectral stack from a scene description");
    fs::path scene, render_out;
    std::optional<std::size_t> bands;
    render->add_option("--scene", scene, "Scene JSON")->required();
    render->add_option("--out", render_out, "Output stack directory")->required();
    render->add_option("--bands", bands, "Number of bands t drawn from the direction pool");
    render->callback([&] { action = [&] { return cmd_render(g, scene, render_out, bands); }; });

    auto* decompose = app.add_subcommand("decompose", "SVD vs Lambertian reflectance decomposition per material");
    std::vector<std::string> files;
    std::string dec_rig, dec_out;
    std::size_t normal_count = 256;
    double threshold = srd::kDefaultFilterThreshold;
    decompose->add_option("files", files, ".sbrdf.json files")->required();
    decompose->add_option("--rig", dec_rig, "Rig JSON supplying wavelengths and light directions");
    decompose->add_option("--normals", normal_count, "Hemisphere normals in the geometry sampling")->capture_default_str();
    decompose->add_option("--threshold", threshold, "Material filter threshold on E_r")->capture_default_str();
    decompose->add_option("--out", dec_out, "CSV output (default stdout)");
    decompose->callback([&] { action = [&] { return cmd_decompose(g, files, dec_rig, normal_count, dec_out, threshold); }; });

    auto* estimate = app.add_subcommand("estimate", "Estimate equivalent light intensities for a stack");
    fs::path est_stack, est_out;
    std::string est_method = "factorize";
    intensity::FactorizeOptions fopts;
    estimate->add_option("--stack", est_stack, "Stack directory")->required();
    estimate->add_option("--method", est_method, "factorize|oracle")
        ->check(CLI::IsMember({"factorize", "oracle"}))
        ->capture_default_str();
    estimate->add_option("--max-iters", fopts.max_iters)->capture_default_str();
    estimate->add_option("--tol", fopts.tol)->capture_default_str();
    estimate->add_option("--trim", fopts.trim_fraction, "Fraction of brightest residuals dropped per pixel")
        ->capture_default_str();
    estimate->add_option("--out", est_out, "Output est.json")->required();
    estimate->callback([&] { action = [&] { return cmd_estimate(g, est_stack, est_method, est_out, fopts); }; });

    auto* solve = app.add_subcommand("solve", "Recover a normal map from a stack and intensity estimate");
    fs::path solve_stack, solve_out;
    std::string solve_est, solve_method = "robust";
    solver::RobustOptions ropts;
    solve->add_option("--stack", solve_stack, "Stack directory")->required();
    solve->add_option("--est", solve_est, "est.json (omit for all-ones intensities)");
    solve->add_option("--method", solve_method, "lambertian|robust")
        ->check(CLI::IsMember({"lambertian", "robust"}))
        ->capture_default_str();
    solve->add_option("--low", ropts.low_pct)->capture_default_str();
    solve->add_option("--high", ropts.high_pct)->capture_default_str();
    solve->add_option("--out", solve_out, "Output normals.pfm")->required();
    solve->callback([&] { action = [&] { return cmd_solve(g, solve_stack, solve_est, solve_method, ropts, solve_out); }; });

    auto* integ = app.add_subcommand("integrate", "Integrate a normal map into a depth map");
    fs::path int_normals, int_out;
    std::string int_obj;
    integ->add_option("--normals", int_normals)->required();
    integ->add_option("--out", int_out, "Output depth.pfm")->required();
    integ->add_option("--obj", int_obj, "Optional height-field mesh");
    bool drop_steep = false;
    integ->add_flag("--drop-steep", drop_steep, "Mask out normals too steep to integrate instead of failing");
    integ->callback([&] { action = [&] { return cmd_integrate(g, int_normals, int_out, int_obj, drop_steep); }; });

    auto* eval = app.add_subcommand("eval", "Print mae_deg,cosine_loss,intensity_l2");
    fs::path pred, gt;
    std::string ev_est, ev_gt_est;
    eval->add_option("--pred", pred)->required();
    eval->add_option("--gt", gt)->required();
    eval->add_option("--est", ev_est, "Estimated intensities (est.json)");
    eval->add_option("--gt-est", ev_gt_est, "Ground-truth intensities (meta.json or est.json)");
    eval->callback([&] { action = [&] { return cmd_eval(pred, gt, ev_est, ev_gt_est); }; });

    auto* pipe = app.add_subcommand("pipeline", "Run the full experiment described by a config");
    fs::path config;
    pipe->add_option("--config", config)->required();
    pipe->callback([&] { action = [&] { return cmd_pipeline(g, config); }; });

    auto* gen = app.add_subcommand("generate", "Write a procedural material (.sbrdf) or rig (JSON) to disk");
    std::string gen_material, gen_rig;
    fs::path gen_out;
    gen->add_option("--material", gen_material, "Procedural material JSON");
    gen->add_option("--rig", gen_rig, "Procedural rig JSON");
    gen->add_option("--out", gen_out)->required();
    gen->callback([&] { action = [&] { return cmd_generate(g, gen_material, gen_rig, gen_out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return action();
    } catch (const SchemaError& e) {
        fmt::print(stderr, "error: invalid document at {}: {}\n", e.path, e.what());
        return 2;
    } catch (const pipeline::StageError& e) {
        fmt::print(stderr, "error: stage {} failed: {}\n", e.stage, e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
}
