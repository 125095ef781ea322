// mhgs - CPU Gaussian splatting with Metropolis-Hastings density control.
//
// Subcommands: synth, train, render, eval, ablate, probe.
// Exit codes: 0 success, 1 contract/config error, 2 numerical failure.

#include <CLI11.hpp>

#include "mhgs/config.hpp"
#include "mhgs/metrics.hpp"
#include "mhgs/ply.hpp"
#include "mhgs/probe.hpp"
#include "mhgs/trainer.hpp"

#include <cstdio>
#include <iostream>

namespace {

using namespace mhgs;

struct GlobalFlags {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    int threads = 1;
    bool dump_importance = false;
    bool seed_given = false;
    bool threads_given = false;
};

TrainConfig make_train_config(const GlobalFlags& flags) {
    TrainConfig config;
    if (!flags.config_path.empty()) config = parse_config_file(flags.config_path, config);
    if (flags.seed_given) config.seed = flags.seed;
    if (flags.threads_given) config.threads = flags.threads;
    if (flags.dump_importance) config.dump_importance = true;
    return config;
}

GaussianCloud load_model(const std::string& ply_path, const std::string& ckpt_path) {
    if (!ply_path.empty() && !ckpt_path.empty())
        throw contract_error("give either --ply or --checkpoint, not both");
    if (!ply_path.empty()) return load_ply(ply_path);
    if (!ckpt_path.empty()) return checkpoint_load(ckpt_path).cloud;
    throw contract_error("a model is required: --ply or --checkpoint");
}

void print_eval(const EvalReport& report) {
    std::printf("test views: %zu\n", report.view_indices.size());
    for (std::size_t i = 0; i < report.view_indices.size(); ++i)
        std::printf("  view %3d  psnr %7.3f dB  ssim %.4f\n", report.view_indices[i],
                    report.view_psnr[i], report.view_ssim[i]);
    std::printf("mean psnr: %.3f dB\nmean ssim: %.4f\n", report.mean_psnr, report.mean_ssim);
    std::printf("gaussians: %zu  storage: %zu bytes\n", report.n_gaussians,
                report.storage_bytes);
    if (report.iteration_at_98pct >= 0)
        std::printf("iteration at 98%% of final psnr: %lld\n",
                    static_cast<long long>(report.iteration_at_98pct));
}

void write_eval_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "view,psnr,ssim\n";
    char buf[96];
    for (std::size_t i = 0; i < report.view_indices.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", report.view_indices[i],
                      report.view_psnr[i], report.view_ssim[i]);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "mean,%.17g,%.17g\n", report.mean_psnr, report.mean_ssim);
    out << buf;
}

int run(int argc, char** argv) {
    CLI::App app{"CPU Gaussian splatting with Metropolis-Hastings density control"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "key=value config file");
    app.add_option("--out-dir", flags.out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", flags.seed, "rng seed");
    auto* threads_opt = app.add_option("--threads", flags.threads, "worker threads");
    app.add_flag("--dump-importance", flags.dump_importance,
                 "write the importance field per densification step");

    // synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    SceneSpec spec;
    int n_cameras = 16, resolution = 64, test_every = 8;
    double rig_radius = 3.0, elev_lo = 10.0, elev_hi = 35.0;
    std::string layout = "clustered", colors = "position";
    synth->add_option("--gaussians", spec.n_gaussians, "splat count");
    synth->add_option("--extent", spec.extent, "bounding-cube half width");
    synth->add_option("--layout", layout, "uniform|clustered|shell");
    synth->add_option("--colors", colors, "position|random|palette");
    synth->add_option("--opacity-min", spec.opacity_min);
    synth->add_option("--opacity-max", spec.opacity_max);
    synth->add_option("--cameras", n_cameras, "rig size");
    synth->add_option("--resolution", resolution, "square image size");
    synth->add_option("--radius", rig_radius, "rig radius (in extents)");
    synth->add_option("--elev-lo", elev_lo, "lowest rig elevation, degrees");
    synth->add_option("--elev-hi", elev_hi, "highest rig elevation, degrees");
    synth->add_option("--test-every", test_every, "every k-th camera goes to the test split");

    // train ------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "optimize a cloud against a dataset");
    std::string data_dir, resume_path, init_ply;
    int iterations_override = 0;
    std::string strategy_override;
    train_cmd->add_option("--data", data_dir, "dataset directory")->required();
    train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
    train_cmd->add_option("--init-ply", init_ply, "initial cloud (default: random init)");
    train_cmd->add_option("--iterations", iterations_override, "override config iterations");
    train_cmd->add_option("--strategy", strategy_override, "mh|baseline|none");

    // render -----------------------------------------------------------
    auto* render_cmd = app.add_subcommand("render", "render one dataset view");
    std::string render_ply, render_ckpt, render_out = "render.ppm";
    int view_index = 0;
    render_cmd->add_option("--data", data_dir, "dataset directory")->required();
    render_cmd->add_option("--ply", render_ply, "model PLY");
    render_cmd->add_option("--checkpoint", render_ckpt, "model checkpoint");
    render_cmd->add_option("--view", view_index, "camera index");
    render_cmd->add_option("--out", render_out, "output PPM path");

    // eval ---------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM over the test split");
    std::string eval_ply, eval_ckpt, metrics_csv;
    bool no_triptychs = false;
    eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
    eval_cmd->add_option("--ply", eval_ply, "model PLY");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint");
    eval_cmd->add_option("--metrics", metrics_csv, "metrics.csv for the convergence point");
    eval_cmd->add_flag("--no-triptychs", no_triptychs, "skip the comparison images");

    // ablate -------------------------------------------------------------
    auto* ablate_cmd = app.add_subcommand("ablate", "importance-component and relocation ablations");
    int ablate_seeds = 3;
    int ablate_iterations = 0;
    ablate_cmd->add_option("--data", data_dir, "dataset directory")->required();
    ablate_cmd->add_option("--seeds", ablate_seeds, "seeds per variant");
    ablate_cmd->add_option("--iterations", ablate_iterations, "override config iterations");

    // probe --------------------------------------------------------------
    auto* probe_cmd = app.add_subcommand("probe", "surrogate-correlation experiment");
    std::string probe_ply, probe_ckpt;
    int n_probes = 200, probe_t = 0;
    probe_cmd->add_option("--data", data_dir, "dataset directory")->required();
    probe_cmd->add_option("--ply", probe_ply, "model PLY");
    probe_cmd->add_option("--checkpoint", probe_ckpt, "model checkpoint");
    probe_cmd->add_option("--probes", n_probes, "number of insertion probes");
    probe_cmd->add_option("--t", probe_t, "schedule position (default: window midpoint)");

    CLI11_PARSE(app, argc, argv);
    flags.seed_given = seed_opt->count() > 0;
    flags.threads_given = threads_opt->count() > 0;
    const std::filesystem::path out_dir = flags.out_dir;

    if (synth->parsed()) {
        spec.seed = flags.seed;
        if (layout == "uniform") spec.layout = SceneLayout::uniform;
        else if (layout == "clustered") spec.layout = SceneLayout::clustered;
        else if (layout == "shell") spec.layout = SceneLayout::shell;
        else throw contract_error("synth: layout must be uniform|clustered|shell");
        if (colors == "position") spec.color_scheme = ColorScheme::position;
        else if (colors == "random") spec.color_scheme = ColorScheme::random;
        else if (colors == "palette") spec.color_scheme = ColorScheme::palette;
        else throw contract_error("synth: colors must be position|random|palette");

        const GaussianCloud cloud = generate_scene(spec);
        const std::vector<Camera> rig =
            camera_rig(n_cameras, rig_radius * spec.extent, Vec3::Zero(), elev_lo, elev_hi,
                       resolution, resolution);
        RenderSettings settings;
        settings.threads = flags.threads;
        const Dataset dataset = bake_dataset(cloud, rig, test_every, settings);
        save_dataset(dataset, out_dir);
        std::printf("dataset: %d views (%zu train / %zu test), %d gaussians, extent %.3f\n",
                    n_cameras, dataset.train_indices.size(), dataset.test_indices.size(),
                    spec.n_gaussians, spec.extent);
        std::printf("written to %s\n", out_dir.string().c_str());
        return 0;
    }

    if (train_cmd->parsed()) {
        TrainConfig config = make_train_config(flags);
        if (iterations_override > 0) config.iterations = iterations_override;
        if (!strategy_override.empty())
            apply_config_entry(config, "strategy", strategy_override);
        const Dataset dataset = load_dataset(data_dir);
        std::optional<GaussianCloud> init;
        if (!init_ply.empty()) init = load_ply(init_ply);
        TrainIO io;
        io.out_dir = out_dir;
        io.resume_from = resume_path;
        const TrainResult result = train(config, dataset, std::move(init), io);
        write_config_file(config, out_dir / "config_used.txt");
        const MetricsRow& last = result.metrics.back();
        std::printf("finished %d iterations: loss %.6f, train psnr %.2f dB, %zu gaussians\n",
                    last.iter, last.loss, last.psnr_train, last.n_gaussians);
        std::printf("outputs in %s (final.ply, metrics.csv, densify.csv, checkpoint_final.bin)\n",
                    out_dir.string().c_str());
        return 0;
    }

    if (render_cmd->parsed()) {
        const Dataset dataset = load_dataset(data_dir);
        const GaussianCloud cloud = load_model(render_ply, render_ckpt);
        if (view_index < 0 || view_index >= static_cast<int>(dataset.cameras.size()))
            throw contract_error("render: view index out of range");
        RenderSettings settings;
        settings.threads = flags.threads;
        const RenderOutput out =
            render(cloud, dataset.cameras[static_cast<std::size_t>(view_index)], settings);
        write_ppm(out.image, render_out);
        std::printf("view %d -> %s (psnr vs target: %.2f dB)\n", view_index,
                    render_out.c_str(),
                    psnr(out.image, dataset.images[static_cast<std::size_t>(view_index)]));
        return 0;
    }

    if (eval_cmd->parsed()) {
        const Dataset dataset = load_dataset(data_dir);
        const GaussianCloud cloud = load_model(eval_ply, eval_ckpt);
        std::vector<MetricsRow> log;
        if (!metrics_csv.empty()) log = read_metrics_csv(metrics_csv);
        RenderSettings settings;
        settings.threads = flags.threads;
        const EvalReport report =
            evaluate(cloud, dataset, log.empty() ? nullptr : &log, settings);
        std::filesystem::create_directories(out_dir);
        write_eval_csv(report, out_dir / "eval_report.csv");
        if (!no_triptychs) {
            for (const int v : dataset.test_indices) {
                const RenderOutput out =
                    render(cloud, dataset.cameras[static_cast<std::size_t>(v)], settings);
                char name[48];
                std::snprintf(name, sizeof(name), "triptych_view_%03d.ppm", v);
                write_ppm(triptych(dataset.images[static_cast<std::size_t>(v)], out.image),
                          out_dir / name);
            }
        }
        print_eval(report);
        return 0;
    }

    if (ablate_cmd->parsed()) {
        const Dataset dataset = load_dataset(data_dir);
        TrainConfig base = make_train_config(flags);
        if (ablate_iterations > 0) base.iterations = ablate_iterations;

        struct Variant {
            const char* name;
            std::function<void(TrainConfig&)> tweak;
        };
        const std::vector<Variant> variants = {
            {"full", [](TrainConfig&) {}},
            {"no_ssim", [](TrainConfig& c) { c.importance_weights.beta = 0.0; }},
            {"no_l1", [](TrainConfig& c) { c.importance_weights.gamma = 0.0; }},
            {"no_opacity", [](TrainConfig& c) { c.importance_weights.alpha = 0.0; }},
            {"no_relocation", [](TrainConfig& c) { c.relocation = false; }},
        };

        std::filesystem::create_directories(out_dir);
        std::ofstream csv(out_dir / "ablate.csv");
        csv << "variant,seed,psnr,ssim,n_gaussians\n";
        std::printf("%-14s %6s %10s %8s %12s\n", "variant", "seed", "psnr", "ssim",
                    "gaussians");
        for (const auto& variant : variants) {
            Scalar psnr_sum = 0.0;
            for (int s = 0; s < ablate_seeds; ++s) {
                TrainConfig config = base;
                config.seed = base.seed + static_cast<std::uint64_t>(s);
                variant.tweak(config);
                const TrainResult result = train(config, dataset);
                const EvalReport report = evaluate(result.cloud, dataset, &result.metrics);
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,%.17g,%zu\n", variant.name,
                              static_cast<unsigned long long>(config.seed), report.mean_psnr,
                              report.mean_ssim, report.n_gaussians);
                csv << buf;
                std::printf("%-14s %6llu %10.3f %8.4f %12zu\n", variant.name,
                            static_cast<unsigned long long>(config.seed), report.mean_psnr,
                            report.mean_ssim, report.n_gaussians);
                psnr_sum += report.mean_psnr;
            }
            std::printf("%-14s %6s %10.3f  (mean over %d seeds)\n", variant.name, "-",
                        psnr_sum / ablate_seeds, ablate_seeds);
        }
        std::printf("rows written to %s\n", (out_dir / "ablate.csv").string().c_str());
        return 0;
    }

    if (probe_cmd->parsed()) {
        const Dataset dataset = load_dataset(data_dir);
        const GaussianCloud cloud = load_model(probe_ply, probe_ckpt);
        TrainConfig config = make_train_config(flags);
        const int t_mid = (config.densify_t_min + config.resolved_t_max()) / 2;
        const int t = probe_t > 0 ? probe_t : t_mid;

        const Scalar extent =
            config.extent_override > 0.0 ? config.extent_override : dataset.extent;
        const DensifyParams params = densify_params_at(config, t, extent);

        CameraSchedule schedule{static_cast<int>(dataset.train_indices.size()), 0,
                                config.densify_t_min, config.resolved_t_max()};
        const int k_t = subset_size(schedule, t);
        std::vector<const Camera*> cams;
        std::vector<const ImageBuffer*> targets;
        for (int j = 0; j < k_t; ++j) {
            const int v = dataset.train_indices[static_cast<std::size_t>(j)];
            cams.push_back(&dataset.cameras[static_cast<std::size_t>(v)]);
            targets.push_back(&dataset.images[static_cast<std::size_t>(v)]);
        }

        RenderSettings settings;
        settings.threads = flags.threads;
        Rng rng(config.seed ^ 0x70726f6265ull);
        const CorrelationReport report = surrogate_correlation(
            cloud, cams, targets, params, n_probes, rng, config.loss_weights, settings);
        std::filesystem::create_directories(out_dir);
        write_scatter_csv(report, out_dir / "scatter.csv");
        if (report.applicable)
            std::printf("spearman rho over %zu probes: %.4f\n", report.samples.size(),
                        report.spearman_rho);
        else
            std::printf("correlation not applicable (importance has zero variance); "
                        "scatter written\n");
        std::printf("scatter data: %s\n", (out_dir / "scatter.csv").string().c_str());
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mhgs::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
