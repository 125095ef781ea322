#include "mhgs/trainer.hpp"

#include "mhgs/ply.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <numeric>

namespace mhgs {

DensifyParams densify_params_at(const TrainConfig& config, int t, Scalar extent) {
    const AnnealValues av = anneal(config, t);
    const Scalar voxel_world = av.voxel_size * config.voxel_scale_to_extent * extent;
    const Scalar sigma_unit = config.sigma_in_voxels
                                  ? voxel_world
                                  : config.proposal_scale_to_extent * extent;
    DensifyParams params;
    params.sigma_coarse = av.sigma_coarse * sigma_unit;
    params.sigma_fine = av.sigma_fine * sigma_unit;
    params.batch_coarse = av.batch_coarse;
    params.batch_fine = av.batch_fine;
    params.voxel_size = voxel_world;
    params.lambda_v = config.lambda_v;
    params.weights = config.importance_weights;
    params.relocate_tau = config.relocate_tau;
    params.relocation_enabled = config.relocation;
    params.opacity_mode = config.opacity_mode;
    return params;
}

AnnealValues anneal(const TrainConfig& config, int t) {
    const int t_min = config.densify_t_min;
    const int t_max = config.resolved_t_max();
    if (t_min >= t_max) throw contract_error("anneal: empty densification window");
    if (t < t_min || t > t_max) throw contract_error("anneal: t outside densification window");
    const Scalar progress =
        static_cast<Scalar>(t - t_min) / static_cast<Scalar>(t_max - t_min);
    const auto lerp = [progress](Scalar a, Scalar b) { return a + progress * (b - a); };
    AnnealValues v;
    v.sigma_coarse = lerp(config.sigma_coarse_start, config.sigma_coarse_end);
    v.sigma_fine = lerp(config.sigma_fine_start, config.sigma_fine_end);
    v.voxel_size = lerp(config.voxel_start, config.voxel_end);
    v.batch_coarse = static_cast<int>(std::lround(config.batch_coarse * config.batch_scale));
    v.batch_fine = static_cast<int>(std::lround(config.batch_fine * config.batch_scale));
    return v;
}

// ---------------------------------------------------------------------------
// checkpoint format: magic, version, tagged sections, explicit trailer
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'H', 'G', 'S', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void write_tag(std::ostream& out, const char tag[4]) { out.write(tag, 4); }

void expect_tag(std::istream& in, const char* tag, const char* section) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, tag, 4) != 0)
        throw io_error(std::string("checkpoint: missing or corrupt section ") + section);
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v, const char* section) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw io_error(std::string("checkpoint: truncated section ") + section);
}

void write_doubles(std::ostream& out, const Scalar* data, std::size_t n) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(n * sizeof(Scalar)));
}

void read_doubles(std::istream& in, Scalar* data, std::size_t n, const char* section) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(Scalar)));
    if (!in) throw io_error(std::string("checkpoint: truncated section ") + section);
}

}  // namespace

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("checkpoint_save: cannot open " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);

    write_tag(out, "ITER");
    write_pod(out, ckpt.iteration);
    write_tag(out, "RNGS");
    for (const std::uint64_t w : ckpt.rng_state) write_pod(out, w);
    write_tag(out, "SCHD");
    write_pod(out, ckpt.schedule_cursor);

    write_tag(out, "CLOD");
    const std::uint64_t count = ckpt.cloud.size();
    write_pod(out, count);
    write_pod(out, ckpt.cloud.iteration);
    write_pod(out, ckpt.cloud.rng_seed);
    for (const auto& s : ckpt.cloud.splats) {
        const Scalar rec[14] = {s.position.x(),  s.position.y(),  s.position.z(),
                                s.raw_scale.x(), s.raw_scale.y(), s.raw_scale.z(),
                                s.rotation.w(),  s.rotation.x(),  s.rotation.y(),
                                s.rotation.z(),  s.color.x(),     s.color.y(),
                                s.color.z(),     s.raw_opacity};
        write_doubles(out, rec, 14);
    }

    write_tag(out, "ADAM");
    const std::uint64_t rows = ckpt.adam.rows.size();
    write_pod(out, rows);
    write_pod(out, ckpt.adam.step_count);
    for (const auto& r : ckpt.adam.rows) {
        Scalar rec[28];
        Eigen::Map<Vec3>(rec + 0) = r.m_position;
        Eigen::Map<Vec3>(rec + 3) = r.v_position;
        Eigen::Map<Vec3>(rec + 6) = r.m_scale;
        Eigen::Map<Vec3>(rec + 9) = r.v_scale;
        Eigen::Map<Vec4>(rec + 12) = r.m_rotation;
        Eigen::Map<Vec4>(rec + 16) = r.v_rotation;
        Eigen::Map<Vec3>(rec + 20) = r.m_color;
        Eigen::Map<Vec3>(rec + 23) = r.v_color;
        rec[26] = r.m_opacity;
        rec[27] = r.v_opacity;
        write_doubles(out, rec, 28);
    }

    write_tag(out, "END!");
    if (!out) throw io_error("checkpoint_save: write failed for " + path.string());
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("checkpoint_load: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw io_error("checkpoint_load: bad magic in " + path.string());
    std::uint32_t version = 0;
    read_pod(in, version, "version");
    if (version != kVersion)
        throw io_error("checkpoint_load: unsupported version " + std::to_string(version));

    Checkpoint ckpt;
    expect_tag(in, "ITER", "ITER");
    read_pod(in, ckpt.iteration, "ITER");
    expect_tag(in, "RNGS", "RNGS");
    for (auto& w : ckpt.rng_state) read_pod(in, w, "RNGS");
    expect_tag(in, "SCHD", "SCHD");
    read_pod(in, ckpt.schedule_cursor, "SCHD");

    expect_tag(in, "CLOD", "CLOD");
    std::uint64_t count = 0;
    read_pod(in, count, "CLOD");
    read_pod(in, ckpt.cloud.iteration, "CLOD");
    read_pod(in, ckpt.cloud.rng_seed, "CLOD");
    ckpt.cloud.splats.resize(count);
    for (auto& s : ckpt.cloud.splats) {
        Scalar rec[14];
        read_doubles(in, rec, 14, "CLOD");
        s.position = Vec3(rec[0], rec[1], rec[2]);
        s.raw_scale = Vec3(rec[3], rec[4], rec[5]);
        s.rotation = Quat(rec[6], rec[7], rec[8], rec[9]);
        s.color = Vec3(rec[10], rec[11], rec[12]);
        s.raw_opacity = rec[13];
    }

    expect_tag(in, "ADAM", "ADAM");
    std::uint64_t rows = 0;
    read_pod(in, rows, "ADAM");
    read_pod(in, ckpt.adam.step_count, "ADAM");
    ckpt.adam.rows.resize(rows);
    for (auto& r : ckpt.adam.rows) {
        Scalar rec[28];
        read_doubles(in, rec, 28, "ADAM");
        r.m_position = Eigen::Map<Vec3>(rec + 0);
        r.v_position = Eigen::Map<Vec3>(rec + 3);
        r.m_scale = Eigen::Map<Vec3>(rec + 6);
        r.v_scale = Eigen::Map<Vec3>(rec + 9);
        r.m_rotation = Eigen::Map<Vec4>(rec + 12);
        r.v_rotation = Eigen::Map<Vec4>(rec + 16);
        r.m_color = Eigen::Map<Vec3>(rec + 20);
        r.v_color = Eigen::Map<Vec3>(rec + 23);
        r.m_opacity = rec[26];
        r.v_opacity = rec[27];
    }

    expect_tag(in, "END!", "END!");
    return ckpt;
}

void write_densify_csv(const std::vector<DensifyRow>& rows,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("write_densify_csv: cannot open " + path.string());
    out << "iteration,k_t,births_coarse,births_fine,accept_rate_coarse,accept_rate_fine,"
           "relocations,total_splats\n";
    char buf[64];
    for (const auto& r : rows) {
        out << r.iteration << ',' << r.k_t << ',' << r.births_coarse << ',' << r.births_fine;
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,", r.accept_rate_coarse,
                      r.accept_rate_fine);
        out << buf << r.relocations << ',' << r.total_splats << "\n";
    }
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

namespace {

std::vector<int> epoch_permutation(std::uint64_t seed, std::uint64_t epoch, int n) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed * 0x9e3779b97f4a7c15ull ^ (epoch + 1) * 0xc2b2ae3d27d4eb4full);
    for (int i = n - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[rng.index(static_cast<std::uint64_t>(i) + 1)]);
    return order;
}

bool footprint_visible(const ProjectedSplat& p, const Camera& cam) {
    const Scalar hx = 3.0 * std::sqrt(p.cov2d(0, 0) + 0.3);
    const Scalar hy = 3.0 * std::sqrt(p.cov2d(1, 1) + 0.3);
    return p.mean2d.x() + hx >= 0.5 && p.mean2d.x() - hx <= cam.width - 0.5 &&
           p.mean2d.y() + hy >= 0.5 && p.mean2d.y() - hy <= cam.height - 0.5;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  std::optional<GaussianCloud> init, const TrainIO& io) {
    if (dataset.cameras.size() < 2) throw contract_error("train: need at least 2 cameras");
    if (dataset.train_indices.empty()) throw contract_error("train: empty train split");
    if (config.iterations < 1) throw contract_error("train: iterations must be positive");
    const int n_train = static_cast<int>(dataset.train_indices.size());

    const Scalar extent =
        config.extent_override > 0.0 ? config.extent_override : dataset.extent;

    RenderSettings settings;
    settings.threads = config.threads;
    if (config.white_background) settings.background = Vec3::Ones();

    LrTable lr;
    lr.position = config.lr_position * extent;
    lr.scale = config.lr_scale;
    lr.rotation = config.lr_rotation;
    lr.color = config.lr_color;
    lr.opacity = config.lr_opacity;

    std::vector<Camera> train_cams;
    std::vector<const ImageBuffer*> train_targets;
    for (const int v : dataset.train_indices) {
        train_cams.push_back(dataset.cameras[static_cast<std::size_t>(v)]);
        train_targets.push_back(&dataset.images[static_cast<std::size_t>(v)]);
    }

    const int t_min = config.densify_t_min;
    const int t_max = config.resolved_t_max();

    TrainResult result;
    AdamState adam;
    CameraSchedule schedule{n_train, 0, t_min, t_max};
    Rng rng(config.seed);
    int start_iter = 0;

    if (!io.resume_from.empty()) {
        Checkpoint ckpt = checkpoint_load(io.resume_from);
        result.cloud = std::move(ckpt.cloud);
        adam = std::move(ckpt.adam);
        schedule.cursor = ckpt.schedule_cursor;
        rng.set_state(ckpt.rng_state);
        start_iter = static_cast<int>(ckpt.iteration);
    } else if (init.has_value()) {
        result.cloud = std::move(*init);
    } else {
        result.cloud = random_init_cloud(config.init_gaussians, extent, config.init_opacity,
                                         config.init_scale_frac * extent, config.seed);
    }
    if (result.cloud.empty()) throw contract_error("train: empty initial cloud");
    adam.grow_to(result.cloud.size());

    GradAccum accum;
    if (config.strategy == DensifyStrategy::baseline) accum.grow_to(result.cloud.size());

    const bool writing = !io.out_dir.empty();
    if (writing) std::filesystem::create_directories(io.out_dir);

    const auto save_checkpoint = [&](const std::filesystem::path& path, int iteration) {
        Checkpoint ckpt;
        ckpt.cloud = result.cloud;
        ckpt.adam = adam;
        ckpt.schedule_cursor = schedule.cursor;
        ckpt.iteration = static_cast<std::uint64_t>(iteration);
        ckpt.rng_state = rng.state();
        checkpoint_save(ckpt, path);
    };

    std::vector<int> view_order;
    const auto t_start = std::chrono::steady_clock::now();

    for (int t = start_iter + 1; t <= config.iterations; ++t) {
        const int epoch = (t - 1) / n_train;
        const int pos = (t - 1) % n_train;
        if (pos == 0 || view_order.empty())
            view_order = epoch_permutation(config.seed, static_cast<std::uint64_t>(epoch),
                                           n_train);
        const int view = view_order[static_cast<std::size_t>(pos)];
        const Camera& camera = train_cams[static_cast<std::size_t>(view)];
        const ImageBuffer& target = *train_targets[static_cast<std::size_t>(view)];

        const RenderOutput out = render(result.cloud, camera, settings);
        const LossBreakdown lb = loss(out.image, target, result.cloud, config.loss_weights);
        if (!std::isfinite(lb.total)) {
            if (writing) save_checkpoint(io.out_dir / "diagnostic.ckpt", t);
            throw numerical_error("train: non-finite loss at iteration " + std::to_string(t));
        }

        const ImageBuffer dl_dimage =
            loss_image_gradient(out.image, target, config.loss_weights);
        std::vector<SplatGrads> grads =
            render_backward(result.cloud, camera, dl_dimage, out, settings);
        add_regularizer_gradients(result.cloud, config.loss_weights, grads);

        if (config.strategy == DensifyStrategy::baseline) {
            for (const auto& p : out.sorted) {
                if (!footprint_visible(p, camera)) continue;
                const auto i = static_cast<std::size_t>(p.splat_index);
                const Vec2 g = grads[i].mean2d;
                accum.norm_sum[i] +=
                    Vec2(g.x() * camera.width * 0.5, g.y() * camera.height * 0.5).norm();
                accum.world_sum[i] += grads[i].position;
                ++accum.count[i];
            }
        }

        adam_step(result.cloud, grads, adam, lr, config.adam);
        result.cloud.iteration = static_cast<std::uint64_t>(t);

        MetricsRow row;
        row.iter = t;
        row.loss = lb.total;
        row.l1 = lb.l1_term;
        row.dssim = lb.dssim_term;
        row.psnr_train = psnr(out.image, target);

        const bool refine = config.strategy != DensifyStrategy::none && t >= t_min &&
                            t <= t_max && (t - t_min) % config.densify_interval == 0;
        if (refine) {
            const AnnealValues av = anneal(config, t);
            if (config.strategy == DensifyStrategy::mh) {
                DensifyParams params = densify_params_at(config, t, extent);
                params.keep_s_map = config.dump_importance && writing;
                params.verify_grid = config.verify_grid;

                const DensifyReport rep = densification_step(
                    result.cloud, train_cams, train_targets, schedule, params, t, rng,
                    settings);

                adam.grow_to(result.cloud.size());
                for (const auto& move : rep.moves) {
                    adam.reset_row(static_cast<std::size_t>(move.dead_index));
                    adam.reset_row(static_cast<std::size_t>(move.target_index));
                }

                row.births = rep.births_coarse + rep.births_fine;
                row.relocations = rep.relocations;
                row.accept_coarse = rep.accept_rate_coarse;
                row.accept_fine = rep.accept_rate_fine;
                if (rep.births_coarse + rep.births_fine > 0 ||
                    params.batch_coarse + params.batch_fine > 0) {
                    result.rho_min = std::min(result.rho_min, rep.rho_min);
                    result.rho_max = std::max(result.rho_max, rep.rho_max);
                }
                result.densify_log.push_back({t, rep.k_t, rep.births_coarse, rep.births_fine,
                                              rep.accept_rate_coarse, rep.accept_rate_fine,
                                              rep.relocations, rep.total_splats});
                if (params.keep_s_map) {
                    char name[48];
                    std::snprintf(name, sizeof(name), "importance_%06d.ppm", t);
                    write_map_ppm(rep.s_map, io.out_dir / name);
                }
            } else {
                const BaselineReport rep = baseline_threshold_densify(
                    result.cloud, accum, config.baseline, extent, rng);
                adam.compact(rep.keep_mask);
                adam.grow_to(result.cloud.size());
                accum = GradAccum{};
                accum.grow_to(result.cloud.size());
                row.births = static_cast<int>(rep.appended);
                row.relocations = 0;
            }
            ++result.densify_steps;
        }

        row.n_gaussians = result.cloud.size();
        row.seconds =
            std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t_start).count();
        result.metrics.push_back(row);

        if (writing && config.checkpoint_interval > 0 &&
            t % config.checkpoint_interval == 0 && t != config.iterations) {
            char name[32];
            std::snprintf(name, sizeof(name), "ckpt_%06d.bin", t);
            save_checkpoint(io.out_dir / name, t);
        }
    }

    if (writing) {
        save_checkpoint(io.out_dir / "checkpoint_final.bin", config.iterations);
        save_ply(result.cloud, io.out_dir / "final.ply");
        write_metrics_csv(result.metrics, io.out_dir / "metrics.csv");
        write_densify_csv(result.densify_log, io.out_dir / "densify.csv");
    }
    return result;
}

}  // namespace mhgs
