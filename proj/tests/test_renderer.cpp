#include <doctest.h>

#include "mhgs/loss.hpp"
#include "mhgs/render.hpp"

#include <algorithm>
#include <cstring>

using namespace mhgs;

namespace {

Camera front_camera(int size = 64, Scalar focal = 100.0) {
    Camera cam;
    cam.fx = cam.fy = focal;
    cam.cx = cam.cy = size / 2.0;
    cam.width = cam.height = size;
    cam.near_plane = 0.2;
    cam.far_plane = 100.0;
    return cam;
}

GaussianSplat splat_at(const Vec3& pos, Scalar scale, Scalar alpha, const Vec3& color) {
    GaussianSplat s;
    s.position = pos;
    s.set_scale(Vec3::Constant(scale));
    s.color = color;
    s.set_opacity(alpha);
    return s;
}

/// Random scene in front of the camera with pairwise depth gaps, so the
/// depth sort stays stable under the finite-difference step. `zoom` magnifies
/// the scene geometry (pair it with a zoomed focal length) to keep the
/// finite-difference truncation error negligible at a fixed h.
GaussianCloud random_fd_scene(int n, Rng& rng, Scalar min_depth_gap = 2e-3,
                              Scalar zoom = 1.0) {
    GaussianCloud cloud;
    std::vector<Scalar> depths;
    while (static_cast<int>(cloud.size()) < n) {
        GaussianSplat s;
        s.position = zoom * Vec3(rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45),
                                 rng.uniform(1.4, 3.2));
        bool clear = true;
        for (const Scalar z : depths)
            if (std::abs(z - s.position.z()) < zoom * min_depth_gap) clear = false;
        if (!clear) continue;
        depths.push_back(s.position.z());
        s.set_scale(zoom * Vec3(std::exp(rng.uniform(-3.6, -2.2)),
                                std::exp(rng.uniform(-3.6, -2.2)),
                                std::exp(rng.uniform(-3.6, -2.2))));
        s.rotation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
        s.color = Vec3(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
        s.set_opacity(rng.uniform(0.2, 0.85));
        cloud.splats.push_back(s);
    }
    return cloud;
}

}  // namespace

TEST_CASE("project: on-axis point lands on the principal point") {
    Camera cam = front_camera(64, 100.0);
    cam.cx = cam.cy = 32.0;
    const auto projected = project_gaussian(splat_at(Vec3(0, 0, 1), 0.01, 0.5, Vec3::Ones()),
                                            cam, 5);
    REQUIRE(projected.has_value());
    CHECK(projected->mean2d.x() == doctest::Approx(32.0));
    CHECK(projected->mean2d.y() == doctest::Approx(32.0));
    CHECK(projected->view_depth == doctest::Approx(1.0));
    CHECK(projected->splat_index == 5);
}

TEST_CASE("project: isotropic covariance on the axis stays isotropic") {
    const Camera cam = front_camera(64, 120.0);
    const Scalar z = 2.5;
    const auto projected =
        project_gaussian(splat_at(Vec3(0, 0, z), 1.0, 0.5, Vec3::Ones()), cam, 0);
    REQUIRE(projected.has_value());
    const Scalar expected = (120.0 / z) * (120.0 / z);
    CHECK(projected->cov2d(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(projected->cov2d(1, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(projected->cov2d(0, 1)) < 1e-9);
}

TEST_CASE("project: splat in front of the near plane is culled") {
    const Camera cam = front_camera();
    CHECK_FALSE(project_gaussian(splat_at(Vec3(0, 0, cam.near_plane / 2), 0.1, 0.5,
                                          Vec3::Ones()),
                                 cam, 0)
                    .has_value());
}

TEST_CASE("render: a single near-opaque splat saturates its center pixel") {
    Camera cam = front_camera(64, 100.0);
    cam.cx = cam.cy = 32.5;  // center of pixel (32,32)
    GaussianCloud cloud;
    cloud.splats.push_back(splat_at(Vec3(0, 0, 1), 1.0, 1.0 - 1e-9, Vec3(1, 0, 0)));
    const RenderOutput out = render(cloud, cam);
    CHECK(out.image.at(32, 32, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(out.image.at(32, 32, 1) == doctest::Approx(0.0));
    CHECK(out.accumulated_alpha(32, 32) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("render: two coincident half-opacity splats composite in closed form") {
    Camera cam = front_camera(64, 100.0);
    cam.cx = cam.cy = 32.5;
    GaussianCloud cloud;
    cloud.splats.push_back(splat_at(Vec3(0, 0, 1.0), 0.8, 0.5, Vec3(1, 0, 0)));
    cloud.splats.push_back(splat_at(Vec3(0, 0, 1.0 + 1e-9), 0.8, 0.5, Vec3(0, 1, 0)));
    const RenderOutput out = render(cloud, cam);
    // front-to-back: 0.5 c1 + (1 - 0.5) 0.5 c2
    CHECK(out.image.at(32, 32, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(out.image.at(32, 32, 1) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(out.accumulated_alpha(32, 32) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("render: uncovered pixels show the background") {
    const Camera cam = front_camera();
    GaussianCloud cloud;
    cloud.splats.push_back(splat_at(Vec3(0, 0, 2), 0.01, 0.9, Vec3::Ones()));
    const RenderOutput out = render(cloud, cam);
    CHECK(out.image.at(0, 0, 0) == 0.0);
    CHECK(out.accumulated_alpha(0, 0) == 0.0);

    RenderSettings white;
    white.background = Vec3::Ones();
    const RenderOutput out_white = render(cloud, cam, white);
    CHECK(out_white.image.at(0, 0, 2) == 1.0);
}

TEST_CASE("render: pathologically anisotropic splat is skipped and tallied") {
    const Camera cam = front_camera();
    GaussianCloud cloud;
    GaussianSplat pancake = splat_at(Vec3(0, 0, 2), 1.0, 0.9, Vec3::Ones());
    pancake.set_scale(Vec3(1e7, 1e-7, 1e-7));  // projects to a line
    cloud.splats.push_back(pancake);
    const RenderOutput out = render(cloud, cam);
    CHECK(out.skipped_degenerate == 1);
    CHECK(out.image.ch[0].maxCoeff() == 0.0);
}

TEST_CASE("render: storage order does not change the image") {
    Rng rng(99);
    GaussianCloud cloud = random_fd_scene(40, rng);
    const Camera cam = front_camera(48, 60.0);
    const RenderOutput a = render(cloud, cam);

    GaussianCloud shuffled = cloud;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled.splats[i - 1], shuffled.splats[rng.index(i)]);
    const RenderOutput b = render(shuffled, cam);

    CHECK(std::memcmp(a.image.ch[0].data(), b.image.ch[0].data(),
                      sizeof(Scalar) * static_cast<std::size_t>(a.image.ch[0].size())) == 0);
    CHECK(std::memcmp(a.accumulated_alpha.data(), b.accumulated_alpha.data(),
                      sizeof(Scalar) * static_cast<std::size_t>(a.accumulated_alpha.size())) ==
          0);
}

TEST_CASE("render: thread count does not change forward or backward results") {
    Rng rng(123);
    const GaussianCloud cloud = random_fd_scene(30, rng);
    const Camera cam = front_camera(48, 60.0);

    ImageBuffer upstream(cam.width, cam.height);
    for (int c = 0; c < 3; ++c)
        upstream.ch[c] = PixelMap::Random(cam.height, cam.width);

    RenderSettings one, four;
    one.threads = 1;
    four.threads = 4;
    const RenderOutput out1 = render(cloud, cam, one);
    const RenderOutput out4 = render(cloud, cam, four);
    CHECK(std::memcmp(out1.image.ch[1].data(), out4.image.ch[1].data(),
                      sizeof(Scalar) * static_cast<std::size_t>(out1.image.ch[1].size())) == 0);

    const auto g1 = render_backward(cloud, cam, upstream, out1, one);
    const auto g4 = render_backward(cloud, cam, upstream, out4, four);
    for (std::size_t i = 0; i < g1.size(); ++i) {
        CHECK(g1[i].position == g4[i].position);
        CHECK(g1[i].raw_scale == g4[i].raw_scale);
        CHECK(g1[i].rotation == g4[i].rotation);
        CHECK(g1[i].color == g4[i].color);
        CHECK(g1[i].raw_opacity == g4[i].raw_opacity);
    }
}

TEST_CASE("render: per-pixel transmittance is non-increasing and matches a brute-force oracle") {
    Rng rng(5);
    const GaussianCloud cloud = random_fd_scene(25, rng);
    Camera cam = front_camera(8, 7.0);
    cam.cx = cam.cy = 4.0;
    const RenderOutput out = render(cloud, cam);

    // oracle: independent per-pixel loop over depth-sorted projections
    std::vector<std::pair<Scalar, int>> order;
    std::vector<ProjectedSplat> projections(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto p = project_gaussian(cloud.splats[i], cam, static_cast<int>(i));
        REQUIRE(p.has_value());
        projections[i] = *p;
        order.emplace_back(p->view_depth, static_cast<int>(i));
    }
    std::sort(order.begin(), order.end());

    const Scalar kappa = std::exp(-4.5);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            Scalar t = 1.0;
            for (const auto& [depth, idx] : order) {
                const ProjectedSplat& p = projections[static_cast<std::size_t>(idx)];
                Mat2 m = p.cov2d;
                m(0, 0) += 0.3;
                m(1, 1) += 0.3;
                const Vec2 d(x + 0.5 - p.mean2d.x(), y + 0.5 - p.mean2d.y());
                const Scalar q = d.dot(m.inverse() * d);
                if (q >= 9.0) continue;
                const Scalar w =
                    cloud.splats[static_cast<std::size_t>(idx)].opacity() *
                    (std::exp(-0.5 * q) - kappa + 0.5 * kappa * (q - 9.0)) /
                    (1.0 - 5.5 * kappa);
                if (w <= 0.0) continue;
                const Scalar t_next = t * (1.0 - w);
                CHECK(t_next <= t);  // non-increasing along the ray
                t = t_next;
                if (t < 1e-4) break;
            }
            CHECK(out.accumulated_alpha(y, x) == doctest::Approx(1.0 - t).epsilon(1e-10));
        }
}

TEST_CASE("render_backward: zero upstream gradient gives zero parameter gradients") {
    Rng rng(31);
    const GaussianCloud cloud = random_fd_scene(10, rng);
    const Camera cam = front_camera(32, 40.0);
    const RenderOutput out = render(cloud, cam);
    const ImageBuffer zeros(cam.width, cam.height);
    const auto grads = render_backward(cloud, cam, zeros, out);
    for (const auto& g : grads) {
        CHECK(g.position.norm() == 0.0);
        CHECK(g.raw_scale.norm() == 0.0);
        CHECK(g.rotation.norm() == 0.0);
        CHECK(g.color.norm() == 0.0);
        CHECK(g.raw_opacity == 0.0);
    }
}

TEST_CASE("render_backward: photometric gradient vanishes against the splat's own render") {
    GaussianCloud cloud;
    cloud.splats.push_back(splat_at(Vec3(0, 0, 1.5), 0.3, 0.7, Vec3(0.8, 0.2, 0.4)));
    const Camera cam = front_camera(32, 40.0);
    const RenderOutput out = render(cloud, cam);
    const ImageBuffer upstream = loss_image_gradient(out.image, out.image);
    const auto grads = render_backward(cloud, cam, upstream, out);
    CHECK(grads[0].position.norm() < 1e-12);
    CHECK(grads[0].raw_scale.norm() < 1e-12);
    CHECK(grads[0].color.norm() < 1e-12);
    CHECK(std::abs(grads[0].raw_opacity) < 1e-12);
}

TEST_CASE("render_backward: cache mismatch is a contract error") {
    Rng rng(32);
    const GaussianCloud cloud = random_fd_scene(5, rng);
    const Camera cam = front_camera(32, 40.0);
    const RenderOutput out = render(cloud, cam);
    const ImageBuffer zeros(cam.width, cam.height);

    Camera other = cam;
    other.fx *= 2.0;
    CHECK_THROWS_AS(render_backward(cloud, other, zeros, out), contract_error);

    GaussianCloud bigger = cloud;
    bigger.splats.push_back(cloud.splats[0]);
    CHECK_THROWS_AS(render_backward(bigger, cam, zeros, out), contract_error);
}

namespace {

/// Loss = sum_p G(p) . C(p) for a fixed random G; its image gradient is G.
struct LinearLossProbe {
    ImageBuffer weights;

    explicit LinearLossProbe(const Camera& cam, Rng& rng) {
        weights.resize(cam.width, cam.height);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < cam.height; ++y)
                for (int x = 0; x < cam.width; ++x)
                    weights.ch[c](y, x) = rng.uniform(-1.0, 1.0);
    }

    Scalar value(const GaussianCloud& cloud, const Camera& cam) const {
        const RenderOutput out = render(cloud, cam);
        Scalar acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += (weights.ch[c] * out.image.ch[c]).sum();
        return acc;
    }
};

Scalar relative_error(Scalar a, Scalar b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-5});
}

}  // namespace

TEST_CASE("render_backward: analytic gradients match central finite differences") {
    Rng rng(2024);
    const Camera cam = front_camera(32, 6.0 * 36.0);
    const GaussianCloud cloud = random_fd_scene(12, rng, 2e-3, 6.0);
    const LinearLossProbe probe(cam, rng);

    const RenderOutput out = render(cloud, cam);
    const auto grads = render_backward(cloud, cam, probe.weights, out);

    const Scalar h = 1e-4;
    Scalar worst = 0.0;
    auto check_param = [&](std::size_t i, auto getter, Scalar analytic) {
        GaussianCloud plus = cloud, minus = cloud;
        getter(plus.splats[i]) += h;
        getter(minus.splats[i]) -= h;
        const Scalar fd = (probe.value(plus, cam) - probe.value(minus, cam)) / (2.0 * h);
        worst = std::max(worst, relative_error(analytic, fd));
    };

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            check_param(i, [k](GaussianSplat& s) -> Scalar& { return s.position[k]; },
                        grads[i].position[k]);
            check_param(i, [k](GaussianSplat& s) -> Scalar& { return s.raw_scale[k]; },
                        grads[i].raw_scale[k]);
            check_param(i, [k](GaussianSplat& s) -> Scalar& { return s.color[k]; },
                        grads[i].color[k]);
        }
        check_param(i, [](GaussianSplat& s) -> Scalar& { return s.rotation.w(); },
                    grads[i].rotation[0]);
        check_param(i, [](GaussianSplat& s) -> Scalar& { return s.rotation.x(); },
                    grads[i].rotation[1]);
        check_param(i, [](GaussianSplat& s) -> Scalar& { return s.rotation.y(); },
                    grads[i].rotation[2]);
        check_param(i, [](GaussianSplat& s) -> Scalar& { return s.rotation.z(); },
                    grads[i].rotation[3]);
        check_param(i, [](GaussianSplat& s) -> Scalar& { return s.raw_opacity; },
                    grads[i].raw_opacity);
    }
    CHECK(worst < 1e-3);
}
