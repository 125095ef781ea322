#include "mhgs/synth.hpp"

#include "mhgs/ply.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mhgs {

namespace {

Vec3 random_direction(Rng& rng) {
    while (true) {
        const Vec3 v(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        const Scalar n = v.norm();
        if (n > 1e-3 && n <= 1.0) return v / n;
    }
}

Quat random_rotation(Rng& rng) {
    Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    if (q.norm() < 1e-9) return Quat::Identity();
    return q.normalized();
}

std::vector<Scalar> nearest_neighbor_distances(const std::vector<Vec3>& points,
                                               Scalar fallback) {
    std::vector<Scalar> out(points.size(), fallback);
    for (std::size_t i = 0; i < points.size(); ++i) {
        Scalar best = std::numeric_limits<Scalar>::max();
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (i == j) continue;
            best = std::min(best, (points[i] - points[j]).squaredNorm());
        }
        if (best < std::numeric_limits<Scalar>::max()) out[i] = std::sqrt(best);
    }
    return out;
}

const Vec3 kPalette[8] = {
    {0.85, 0.25, 0.25}, {0.25, 0.75, 0.30}, {0.25, 0.35, 0.85}, {0.90, 0.80, 0.25},
    {0.80, 0.30, 0.80}, {0.25, 0.80, 0.80}, {0.90, 0.55, 0.20}, {0.75, 0.75, 0.75}};

}  // namespace

GaussianCloud generate_scene(const SceneSpec& spec) {
    if (spec.n_gaussians < 1) throw contract_error("generate_scene: n_gaussians must be >= 1");
    if (!(spec.extent > 0.0)) throw contract_error("generate_scene: extent must be positive");

    Rng rng(spec.seed ^ 0xa02f3c1d5b694e87ull);
    const Scalar e = spec.extent;

    std::vector<Vec3> positions;
    positions.reserve(static_cast<std::size_t>(spec.n_gaussians));
    switch (spec.layout) {
        case SceneLayout::uniform: {
            for (int i = 0; i < spec.n_gaussians; ++i)
                positions.emplace_back(rng.uniform(-e, e), rng.uniform(-e, e),
                                       rng.uniform(-e, e));
            if (spec.n_gaussians == 1) positions[0] = Vec3::Zero();
            break;
        }
        case SceneLayout::clustered: {
            const int n_clusters = 6;
            std::vector<Vec3> centers;
            for (int k = 0; k < n_clusters; ++k)
                centers.emplace_back(rng.uniform(-0.6 * e, 0.6 * e),
                                     rng.uniform(-0.6 * e, 0.6 * e),
                                     rng.uniform(-0.6 * e, 0.6 * e));
            for (int i = 0; i < spec.n_gaussians; ++i) {
                const Vec3& c = centers[rng.index(n_clusters)];
                Vec3 p = c + 0.2 * e * rng.normal3();
                positions.push_back(p.cwiseMax(-e).cwiseMin(e));
            }
            break;
        }
        case SceneLayout::shell: {
            for (int i = 0; i < spec.n_gaussians; ++i)
                positions.push_back(rng.uniform(0.9 * e, e) * random_direction(rng));
            break;
        }
    }

    const std::vector<Scalar> nn = nearest_neighbor_distances(positions, 0.5 * e);

    GaussianCloud cloud;
    cloud.rng_seed = spec.seed;
    cloud.splats.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        GaussianSplat s;
        s.position = positions[i];
        Vec3 scale;
        for (int k = 0; k < 3; ++k) scale[k] = 0.5 * nn[i] * rng.uniform(0.7, 1.3);
        s.set_scale(scale.cwiseMax(1e-4 * e));
        s.rotation = random_rotation(rng);
        switch (spec.color_scheme) {
            case ColorScheme::position:
                s.color = 0.15 + 0.7 * ((s.position.array() + e) / (2.0 * e));
                break;
            case ColorScheme::random:
                s.color = Vec3(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9),
                               rng.uniform(0.1, 0.9));
                break;
            case ColorScheme::palette:
                s.color = kPalette[rng.index(8)];
                break;
        }
        s.set_opacity(rng.uniform(spec.opacity_min, spec.opacity_max));
        cloud.splats.push_back(std::move(s));
    }
    return cloud;
}

std::vector<Camera> camera_rig(int n_cameras, Scalar radius, const Vec3& look_at,
                               Scalar elev_lo_deg, Scalar elev_hi_deg, int width, int height,
                               Scalar fov_deg) {
    if (n_cameras < 2) throw contract_error("camera_rig: need at least 2 cameras");
    if (!(radius > 0.0)) throw contract_error("camera_rig: radius must be positive");

    const Scalar focal = 0.5 * width / std::tan(0.5 * fov_deg * M_PI / 180.0);
    std::vector<Camera> rig;
    rig.reserve(static_cast<std::size_t>(n_cameras));
    for (int i = 0; i < n_cameras; ++i) {
        const Scalar azim = 2.0 * M_PI * i / n_cameras;
        const Scalar elev_deg =
            elev_lo_deg + (elev_hi_deg - elev_lo_deg) *
                              (n_cameras > 1 ? static_cast<Scalar>(i) / (n_cameras - 1) : 0.0);
        const Scalar elev = elev_deg * M_PI / 180.0;
        const Vec3 eye = look_at + radius * Vec3(std::cos(elev) * std::cos(azim),
                                                 std::sin(elev),
                                                 std::cos(elev) * std::sin(azim));
        rig.push_back(look_at_camera(eye, look_at, focal, focal, width, height, 0.1 * radius,
                                     10.0 * radius));
    }
    return rig;
}

Dataset bake_dataset(const GaussianCloud& cloud, const std::vector<Camera>& rig,
                     int test_every, const RenderSettings& settings) {
    if (rig.empty()) throw contract_error("bake_dataset: empty rig");
    if (test_every < 2) throw contract_error("bake_dataset: test_every must be >= 2");

    Dataset dataset;
    dataset.cameras = rig;
    dataset.images.reserve(rig.size());
    for (std::size_t v = 0; v < rig.size(); ++v) {
        dataset.images.push_back(render(cloud, rig[v], settings).image);
        if (v % static_cast<std::size_t>(test_every) == 0)
            dataset.test_indices.push_back(static_cast<int>(v));
        else
            dataset.train_indices.push_back(static_cast<int>(v));
    }
    dataset.ground_truth = cloud;
    const auto [lo, hi] = cloud_bounds(cloud);
    dataset.extent = std::max(lo.cwiseAbs().maxCoeff(), hi.cwiseAbs().maxCoeff());
    return dataset;
}

namespace {

std::string view_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d.ppm", index);
    return buf;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "cameras.txt");
    if (!out) throw io_error("save_dataset: cannot write cameras.txt");
    out << "# one camera per line:\n"
        << "# index split(train|test) fx fy cx cy width height near far R00..R22 (row major) tx ty tz\n";
    out << "# extent " << std::setprecision(17) << dataset.extent << "\n";
    for (std::size_t v = 0; v < dataset.cameras.size(); ++v) {
        const Camera& c = dataset.cameras[v];
        const bool is_test = std::find(dataset.test_indices.begin(), dataset.test_indices.end(),
                                       static_cast<int>(v)) != dataset.test_indices.end();
        out << v << " " << (is_test ? "test" : "train") << " " << std::setprecision(17) << c.fx
            << " " << c.fy << " " << c.cx << " " << c.cy << " " << c.width << " " << c.height
            << " " << c.near_plane << " " << c.far_plane;
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) out << " " << c.rotation(r, col);
        for (int r = 0; r < 3; ++r) out << " " << c.translation[r];
        out << "\n";
    }
    for (std::size_t v = 0; v < dataset.images.size(); ++v)
        write_ppm(dataset.images[v], dir / view_filename(static_cast<int>(v)));
    if (dataset.ground_truth) save_ply(*dataset.ground_truth, dir / "ground_truth.ply");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "cameras.txt");
    if (!in) throw io_error("load_dataset: cannot open cameras.txt in " + dir.string());

    Dataset dataset;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string key;
            meta >> key;
            if (key == "extent") meta >> dataset.extent;
            continue;
        }
        std::istringstream fields(line);
        int index = -1;
        std::string split;
        Camera c;
        fields >> index >> split >> c.fx >> c.fy >> c.cx >> c.cy >> c.width >> c.height >>
            c.near_plane >> c.far_plane;
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) fields >> c.rotation(r, col);
        for (int r = 0; r < 3; ++r) fields >> c.translation[r];
        if (!fields || (split != "train" && split != "test"))
            throw io_error("load_dataset: malformed camera line " + std::to_string(line_number));
        validate_camera(c);
        if (index != static_cast<int>(dataset.cameras.size()))
            throw io_error("load_dataset: camera indices out of order at line " +
                           std::to_string(line_number));
        dataset.cameras.push_back(c);
        (split == "test" ? dataset.test_indices : dataset.train_indices).push_back(index);
    }
    for (std::size_t v = 0; v < dataset.cameras.size(); ++v)
        dataset.images.push_back(read_ppm(dir / view_filename(static_cast<int>(v))));
    const auto gt_path = dir / "ground_truth.ply";
    if (std::filesystem::exists(gt_path)) dataset.ground_truth = load_ply(gt_path);
    return dataset;
}

GaussianCloud random_init_cloud(int n, Scalar extent, Scalar init_opacity, Scalar init_scale,
                                std::uint64_t seed) {
    if (n < 1) throw contract_error("random_init_cloud: need at least one splat");
    Rng rng(seed ^ 0x7c6e5d4b3a291807ull);
    GaussianCloud cloud;
    cloud.rng_seed = seed;
    cloud.splats.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        GaussianSplat s;
        s.position = Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                          rng.uniform(-extent, extent));
        s.set_scale(Vec3::Constant(init_scale));
        s.rotation = Quat::Identity();
        s.color = Vec3::Constant(0.5);
        s.set_opacity(init_opacity);
        cloud.splats.push_back(std::move(s));
    }
    return cloud;
}

}  // namespace mhgs
