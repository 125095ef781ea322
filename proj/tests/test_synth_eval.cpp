#include <doctest.h>

#include "mhgs/baseline.hpp"
#include "mhgs/metrics.hpp"
#include "mhgs/probe.hpp"
#include "mhgs/synth.hpp"

#include <filesystem>
#include <fstream>

using namespace mhgs;

namespace fs = std::filesystem;

TEST_CASE("generate_scene: single uniform splat sits at the origin") {
    SceneSpec spec;
    spec.n_gaussians = 1;
    spec.layout = SceneLayout::uniform;
    const GaussianCloud cloud = generate_scene(spec);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.splats[0].position == Vec3::Zero());
}

TEST_CASE("generate_scene: deterministic for a fixed spec") {
    SceneSpec spec;
    spec.n_gaussians = 100;
    spec.seed = 7;
    const GaussianCloud a = generate_scene(spec);
    const GaussianCloud b = generate_scene(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.splats[i].position == b.splats[i].position);
        CHECK(a.splats[i].raw_scale == b.splats[i].raw_scale);
        CHECK(a.splats[i].rotation.coeffs() == b.splats[i].rotation.coeffs());
        CHECK(a.splats[i].color == b.splats[i].color);
        CHECK(a.splats[i].raw_opacity == b.splats[i].raw_opacity);
    }
}

TEST_CASE("generate_scene: shell layout stays in the outer radial band") {
    SceneSpec spec;
    spec.n_gaussians = 500;
    spec.layout = SceneLayout::shell;
    spec.extent = 2.0;
    const GaussianCloud cloud = generate_scene(spec);
    for (const auto& s : cloud.splats) {
        CHECK(s.position.norm() >= 0.9 * 2.0 - 1e-12);
        CHECK(s.position.norm() <= 2.0 + 1e-12);
    }
    CHECK(validate_cloud(cloud).ok());
}

TEST_CASE("camera_rig: azimuths are evenly spaced and targets are in front") {
    const Vec3 look_at(0.1, 0.0, -0.2);
    const std::vector<Camera> rig = camera_rig(4, 3.0, look_at, 0.0, 0.0, 64, 64);
    REQUIRE(rig.size() == 4);
    for (int i = 0; i < 4; ++i) {
        const Vec3 offset = rig[static_cast<std::size_t>(i)].center() - look_at;
        const Scalar azimuth = std::atan2(offset.z(), offset.x());
        CHECK(std::abs(offset.norm() - 3.0) < 1e-12);
        CHECK(std::abs(std::remainder(azimuth - i * M_PI / 2.0, 2.0 * M_PI)) < 1e-9);
        CHECK(rig[static_cast<std::size_t>(i)].to_camera(look_at).z() > 0.0);
    }
}

TEST_CASE("camera_rig: twelve cameras have pairwise distinct extrinsics") {
    const std::vector<Camera> rig = camera_rig(12, 2.5, Vec3::Zero(), 5.0, 40.0, 32, 32);
    for (std::size_t i = 0; i < rig.size(); ++i)
        for (std::size_t j = i + 1; j < rig.size(); ++j)
            CHECK((rig[i].center() - rig[j].center()).norm() > 1e-6);
}

TEST_CASE("bake_dataset: the ground truth scores the cap on its own test views") {
    SceneSpec spec;
    spec.n_gaussians = 150;
    spec.seed = 3;
    const GaussianCloud gt = generate_scene(spec);
    const std::vector<Camera> rig = camera_rig(16, 3.0, Vec3::Zero(), 10.0, 35.0, 32, 32);
    const Dataset dataset = bake_dataset(gt, rig, 8);
    CHECK(dataset.test_indices.size() == 2);  // every 8th of 16
    CHECK(dataset.train_indices.size() == 14);

    const EvalReport report = evaluate(gt, dataset);
    CHECK(report.mean_psnr == doctest::Approx(100.0));
    CHECK(report.mean_ssim == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.n_gaussians == 150);
    CHECK(report.iteration_at_98pct == -1);
}

TEST_CASE("bake_dataset: byte-stable across runs") {
    SceneSpec spec;
    spec.n_gaussians = 60;
    spec.seed = 4;
    const GaussianCloud gt = generate_scene(spec);
    const std::vector<Camera> rig = camera_rig(4, 3.0, Vec3::Zero(), 5.0, 20.0, 16, 16);
    const Dataset a = bake_dataset(gt, rig, 2);
    const Dataset b = bake_dataset(gt, rig, 2);
    for (std::size_t v = 0; v < a.images.size(); ++v)
        for (int c = 0; c < 3; ++c)
            CHECK((a.images[v].ch[c] == b.images[v].ch[c]).all());
}

TEST_CASE("dataset: directory round trip preserves cameras, split and images") {
    SceneSpec spec;
    spec.n_gaussians = 50;
    spec.seed = 5;
    const GaussianCloud gt = generate_scene(spec);
    const std::vector<Camera> rig = camera_rig(5, 3.0, Vec3::Zero(), 0.0, 30.0, 16, 16);
    const Dataset dataset = bake_dataset(gt, rig, 4);

    const fs::path dir = fs::temp_directory_path() / "mhgs_dataset_rt";
    fs::remove_all(dir);
    save_dataset(dataset, dir);
    const Dataset loaded = load_dataset(dir);

    REQUIRE(loaded.cameras.size() == 5);
    CHECK(loaded.test_indices == dataset.test_indices);
    CHECK(loaded.train_indices == dataset.train_indices);
    CHECK(loaded.extent == doctest::Approx(dataset.extent).epsilon(1e-12));
    for (std::size_t v = 0; v < 5; ++v) {
        CHECK(loaded.cameras[v] == dataset.cameras[v]);
        // images go through 8-bit quantization on disk
        for (int c = 0; c < 3; ++c)
            CHECK((loaded.images[v].ch[c] - dataset.images[v].ch[c]).abs().maxCoeff() <=
                  0.5 / 255.0 + 1e-12);
    }
    CHECK(loaded.ground_truth.has_value());
    CHECK(loaded.ground_truth->size() == 50);
    fs::remove_all(dir);
}

TEST_CASE("dataset: malformed camera lines are reported with their line number") {
    const fs::path dir = fs::temp_directory_path() / "mhgs_bad_dataset";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "cameras.txt") << "# extent 1\n0 train 10 10 8 8 16 16 0.1 10 "
                                          "1 0 0 0 1 0 0 0 1 0 0 3\nnot a camera line\n";
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("line 3"), io_error);
    fs::remove_all(dir);
}

TEST_CASE("psnr: closed-form values and the cap") {
    ImageBuffer a(8, 8, 0.5);
    CHECK(psnr(a, a) == 100.0);

    ImageBuffer b(8, 8, 0.6);  // MSE 0.01
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(psnr(b, a) == doctest::Approx(20.0).epsilon(1e-12));  // symmetric

    ImageBuffer c(8, 8, 0.51);  // MSE 1e-4
    CHECK(psnr(a, c) == doctest::Approx(40.0).epsilon(1e-10));
}

TEST_CASE("evaluate: an invisible cloud against mid-gray targets") {
    GaussianCloud dark;
    GaussianSplat s;
    s.position = Vec3(0, 0, 0);
    s.raw_opacity = -40.0;  // effectively transparent
    s.set_scale(Vec3::Constant(0.1));
    dark.splats.push_back(s);

    Dataset dataset;
    dataset.cameras = camera_rig(4, 3.0, Vec3::Zero(), 0.0, 10.0, 16, 16);
    for (std::size_t v = 0; v < 4; ++v) dataset.images.emplace_back(16, 16, 0.5);
    dataset.test_indices = {0, 2};
    dataset.train_indices = {1, 3};

    const EvalReport report = evaluate(dark, dataset);
    CHECK(report.mean_psnr == doctest::Approx(10.0 * std::log10(1.0 / 0.25)).epsilon(1e-9));
    // means equal the arithmetic mean of the per-view values
    CHECK(report.mean_psnr ==
          doctest::Approx((report.view_psnr[0] + report.view_psnr[1]) / 2.0).epsilon(1e-12));
}

TEST_CASE("evaluate: empty test split is a contract error") {
    Dataset dataset;
    dataset.cameras = camera_rig(2, 3.0, Vec3::Zero(), 0.0, 10.0, 16, 16);
    dataset.images.emplace_back(16, 16, 0.5);
    dataset.images.emplace_back(16, 16, 0.5);
    dataset.train_indices = {0, 1};
    GaussianCloud cloud;
    cloud.splats.push_back(GaussianSplat{});
    CHECK_THROWS_AS(evaluate(cloud, dataset), contract_error);
}

namespace {

std::vector<MetricsRow> psnr_trace(const std::vector<Scalar>& values) {
    std::vector<MetricsRow> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        MetricsRow row;
        row.iter = static_cast<int>(i + 1);
        row.psnr_train = values[i];
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("convergence_point: first crossing of 98% of the final value") {
    CHECK(convergence_point(psnr_trace({10, 20, 29.3, 29.5, 30})) == 4);
    CHECK(convergence_point(psnr_trace({25, 25, 25})) == 1);
    CHECK(convergence_point(psnr_trace({31})) == 1);
}

TEST_CASE("convergence_point: csv round trip and malformed-line reporting") {
    const fs::path dir = fs::temp_directory_path() / "mhgs_metrics_csv";
    fs::remove_all(dir);
    fs::create_directories(dir);

    std::vector<MetricsRow> rows = psnr_trace({12, 28, 29.6, 30});
    write_metrics_csv(rows, dir / "metrics.csv");
    CHECK(convergence_point_csv(dir / "metrics.csv") == 3);
    const std::vector<MetricsRow> back = read_metrics_csv(dir / "metrics.csv");
    REQUIRE(back.size() == 4);
    CHECK(back[2].psnr_train == doctest::Approx(29.6));

    std::ofstream bad(dir / "bad.csv");
    bad << "iter,loss,l1,dssim,psnr_train,n_gaussians,births,relocations,accept_coarse,"
           "accept_fine,seconds\n1,0.5,0.4,0.1,20,100,0,0,0,0,1.0\nnot,a,row\n";
    bad.close();
    CHECK_THROWS_WITH_AS(read_metrics_csv(dir / "bad.csv"), doctest::Contains("line 3"),
                         io_error);
    fs::remove_all(dir);
}

TEST_CASE("spearman: monotone, anti-monotone, tied and degenerate inputs") {
    CHECK(*spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(*spearman({1, 2, 3, 4}, {5, 4, 3, 2}) == doctest::Approx(-1.0));
    CHECK_FALSE(spearman({1, 1, 1}, {1, 2, 3}).has_value());
    // rank correlation ignores monotone distortion
    CHECK(*spearman({1, 2, 3, 4, 5}, {1, 8, 27, 64, 125}) == doctest::Approx(1.0));
}

namespace {

GaussianCloud baseline_cloud() {
    GaussianCloud cloud;
    for (int i = 0; i < 4; ++i) {
        GaussianSplat s;
        s.position = Vec3(0.3 * i, 0, 1.0);
        s.set_scale(Vec3::Constant(0.004));  // below the size threshold at extent 1
        s.set_opacity(0.5);
        cloud.splats.push_back(s);
    }
    return cloud;
}

}  // namespace

TEST_CASE("baseline: quiet gradients can only prune") {
    GaussianCloud cloud = baseline_cloud();
    cloud.splats[2].set_opacity(1e-4);  // below the prune threshold
    GradAccum accum;
    accum.grow_to(cloud.size());
    Rng rng(3);
    const BaselineReport report =
        baseline_threshold_densify(cloud, accum, BaselineConfig{}, 1.0, rng);
    CHECK(report.pruned == 1);
    CHECK(report.cloned == 0);
    CHECK(report.split == 0);
    CHECK(cloud.size() == 3);
}

TEST_CASE("baseline: high-gradient small splats clone, large ones split") {
    GaussianCloud cloud = baseline_cloud();
    cloud.splats[3].set_scale(Vec3::Constant(0.02));  // above 1% of extent
    GradAccum accum;
    accum.grow_to(cloud.size());
    // splats 1 and 3 exceed the view-space gradient threshold
    accum.norm_sum[1] = 10 * 5e-4;
    accum.world_sum[1] = Vec3(1, 0, 0);
    accum.count[1] = 10;
    accum.norm_sum[3] = 10 * 5e-4;
    accum.world_sum[3] = Vec3(0, 1, 0);
    accum.count[3] = 10;

    Rng rng(5);
    GaussianCloud out = cloud;
    const BaselineReport report =
        baseline_threshold_densify(out, accum, BaselineConfig{}, 1.0, rng);
    CHECK(report.pruned == 0);
    CHECK(report.cloned == 1);
    CHECK(report.split == 1);
    // 4 - 1 split original + 1 clone + 2 children
    CHECK(out.size() == 6);
    CHECK(report.appended == 3);

    // split children carry scales / 1.6
    const Vec3 expected_scale = cloud.splats[3].scale() / 1.6;
    CHECK((out.splats[4].scale() - expected_scale).norm() < 1e-12);
    CHECK((out.splats[5].scale() - expected_scale).norm() < 1e-12);
}

TEST_CASE("baseline: the growth cap freezes the splat count") {
    GaussianCloud cloud = baseline_cloud();
    GradAccum accum;
    accum.grow_to(cloud.size());
    for (std::size_t i = 0; i < 4; ++i) {
        accum.norm_sum[i] = 10 * 1e-3;
        accum.world_sum[i] = Vec3(1, 0, 0);
        accum.count[i] = 10;
    }
    BaselineConfig config;
    config.max_gaussians = 4;
    Rng rng(7);
    baseline_threshold_densify(cloud, accum, config, 1.0, rng);
    CHECK(cloud.size() == 4);
}

TEST_CASE("surrogate probe: a constant importance field is reported as not applicable") {
    SceneSpec spec;
    spec.n_gaussians = 60;
    spec.seed = 11;
    const GaussianCloud gt = generate_scene(spec);
    const std::vector<Camera> rig = camera_rig(3, 3.0, Vec3::Zero(), 5.0, 25.0, 24, 24);
    std::vector<ImageBuffer> targets;
    for (const auto& cam : rig) targets.push_back(render(gt, cam).image);

    std::vector<const Camera*> cams;
    std::vector<const ImageBuffer*> tgts;
    for (std::size_t v = 0; v < rig.size(); ++v) {
        cams.push_back(&rig[v]);
        tgts.push_back(&targets[v]);
    }

    DensifyParams params;
    params.sigma_coarse = 0.1;
    params.sigma_fine = 0.02;
    params.weights = ImportanceWeights{0.0, 0.0, 0.0};  // s == 0.5 everywhere
    Rng rng(13);
    const CorrelationReport report = surrogate_correlation(gt, cams, tgts, params, 40, rng);
    CHECK_FALSE(report.applicable);
    CHECK(report.samples.size() == 40);
    // inserting into a converged scene mostly hurts: loss gains stay non-positive
    int non_positive = 0;
    for (const auto& [imp, gain] : report.samples) non_positive += gain <= 1e-12 ? 1 : 0;
    CHECK(non_positive >= 30);
}
