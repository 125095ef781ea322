#include "mhgs/render.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

namespace mhgs {

namespace {

constexpr Scalar kCutoffQ = 9.0;               // 3-sigma ellipse
constexpr Scalar kDilation = 0.3;              // isotropic pixel regularizer
constexpr Scalar kTransmittanceMin = 1e-4;     // per-pixel early termination
constexpr Scalar kCondMax = 1e12;

// Footprint falloff: a Gaussian bell with its value and slope zeroed at the
// 3-sigma cutoff, renormalized so the center weight is exactly alpha:
//   w(q) = alpha * (exp(-q/2) - kappa + (kappa/2)(q - 9)) / (1 - 5.5 kappa)
// Monotone on [0, 9] and C1 at the boundary, which the finite-difference
// gradient certification depends on.
const Scalar kKappa = std::exp(-kCutoffQ / 2.0);
const Scalar kTangent = 0.5 * kKappa;
const Scalar kFalloffNorm = 1.0 / (1.0 - 5.5 * kKappa);

inline Scalar falloff(Scalar q) {
    return (std::exp(-0.5 * q) - kKappa + kTangent * (q - kCutoffQ)) * kFalloffNorm;
}

inline Scalar falloff_dq(Scalar g_exp) {  // takes exp(-q/2)
    return (-0.5 * g_exp + kTangent) * kFalloffNorm;
}

struct ProjEntry {
    int splat = -1;
    Vec2 u = Vec2::Zero();            // projected center, pixel coords
    Mat2 cov_raw = Mat2::Zero();      // before dilation (exported in the cache)
    Mat2 a = Mat2::Zero();            // inverse of dilated covariance
    Scalar z = 0.0;
    Vec3 y = Vec3::Zero();            // camera-space center
    Eigen::Matrix<Scalar, 2, 3> jac;  // du/dy at the center
    Mat3 v_cam = Mat3::Zero();        // R Sigma R^T
    Scalar alpha = 0.0;
    Vec3 color = Vec3::Zero();
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel ranges (may be empty)
};

struct ProjectionTables {
    std::vector<ProjEntry> entries;            // front-to-back
    std::vector<std::vector<int>> row_lists;   // entry indices per image row
    int skipped_degenerate = 0;
};

ProjectionTables build_tables(const GaussianCloud& cloud, const Camera& camera) {
    ProjectionTables tables;
    tables.entries.reserve(cloud.size());

    for (std::size_t i = 0; i < cloud.splats.size(); ++i) {
        const GaussianSplat& s = cloud.splats[i];
        const Vec3 y = camera.to_camera(s.position);
        if (y.z() < camera.near_plane) continue;

        ProjEntry e;
        e.splat = static_cast<int>(i);
        e.y = y;
        e.z = y.z();
        e.u = camera.project_camera_point(y);

        const Scalar iz = 1.0 / y.z();
        const Scalar iz2 = iz * iz;
        e.jac << camera.fx * iz, 0.0, -camera.fx * y.x() * iz2,
                 0.0, camera.fy * iz, -camera.fy * y.y() * iz2;

        const Mat3 sigma = covariance_from_scale_rotation(s.scale(), s.rotation);
        e.v_cam = camera.rotation * sigma * camera.rotation.transpose();
        e.cov_raw = e.jac * e.v_cam * e.jac.transpose();

        Mat2 m = e.cov_raw;
        m(0, 0) += kDilation;
        m(1, 1) += kDilation;

        const Scalar det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        const Scalar half_trace = 0.5 * (m(0, 0) + m(1, 1));
        const Scalar disc = std::sqrt(std::max(0.0, half_trace * half_trace - det));
        const Scalar eig_min = half_trace - disc;
        const Scalar eig_max = half_trace + disc;
        if (!(det > 0.0) || !(eig_min > 0.0) || eig_max > kCondMax * eig_min) {
            ++tables.skipped_degenerate;
            continue;
        }
        e.a << m(1, 1) / det, -m(0, 1) / det, -m(1, 0) / det, m(0, 0) / det;

        e.alpha = s.opacity();
        e.color = s.color;

        const Scalar hx = 3.0 * std::sqrt(m(0, 0));
        const Scalar hy = 3.0 * std::sqrt(m(1, 1));
        e.x0 = std::max(0, static_cast<int>(std::ceil(e.u.x() - hx - 0.5)));
        e.x1 = std::min(camera.width - 1, static_cast<int>(std::floor(e.u.x() + hx - 0.5)));
        e.y0 = std::max(0, static_cast<int>(std::ceil(e.u.y() - hy - 0.5)));
        e.y1 = std::min(camera.height - 1, static_cast<int>(std::floor(e.u.y() + hy - 0.5)));

        tables.entries.push_back(std::move(e));
    }

    std::sort(tables.entries.begin(), tables.entries.end(),
              [](const ProjEntry& a, const ProjEntry& b) {
                  return a.z != b.z ? a.z < b.z : a.splat < b.splat;
              });

    tables.row_lists.assign(static_cast<std::size_t>(camera.height), {});
    for (int idx = 0; idx < static_cast<int>(tables.entries.size()); ++idx) {
        const ProjEntry& e = tables.entries[static_cast<std::size_t>(idx)];
        for (int row = e.y0; row <= e.y1; ++row)
            tables.row_lists[static_cast<std::size_t>(row)].push_back(idx);
    }
    return tables;
}

void run_row_chunks(int rows, int threads, const std::function<void(int, int)>& body) {
    threads = std::max(1, std::min(threads, rows));
    if (threads == 1) {
        body(0, rows);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads - 1));
    const int chunk = (rows + threads - 1) / threads;
    for (int t = 1; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(rows, lo + chunk);
        if (lo < hi) pool.emplace_back(body, lo, hi);
    }
    body(0, std::min(rows, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace

std::optional<ProjectedSplat> project_gaussian(const GaussianSplat& splat,
                                               const Camera& camera, int splat_index) {
    validate_camera(camera);
    GaussianCloud one;
    one.splats.push_back(splat);
    ProjectionTables tables = build_tables(one, camera);
    if (tables.entries.empty()) return std::nullopt;
    const ProjEntry& e = tables.entries.front();
    ProjectedSplat out;
    out.mean2d = e.u;
    out.cov2d = e.cov_raw;
    out.view_depth = e.z;
    out.splat_index = splat_index;
    return out;
}

RenderOutput render(const GaussianCloud& cloud, const Camera& camera,
                    const RenderSettings& settings) {
    validate_camera(camera);
    if (cloud.empty()) throw contract_error("render: empty cloud");

    ProjectionTables tables = build_tables(cloud, camera);

    RenderOutput out;
    out.image.resize(camera.width, camera.height);
    out.accumulated_alpha = PixelMap::Zero(camera.height, camera.width);
    out.skipped_degenerate = tables.skipped_degenerate;
    out.camera = camera;
    out.splat_count = cloud.size();
    out.sorted.reserve(tables.entries.size());
    for (const ProjEntry& e : tables.entries)
        out.sorted.push_back({e.u, e.cov_raw, e.z, e.splat});

    run_row_chunks(camera.height, settings.threads, [&](int row_lo, int row_hi) {
        for (int row = row_lo; row < row_hi; ++row) {
            const auto& list = tables.row_lists[static_cast<std::size_t>(row)];
            const Scalar py = row + 0.5;
            for (int col = 0; col < camera.width; ++col) {
                const Scalar px = col + 0.5;
                Scalar transmittance = 1.0;
                Vec3 acc = Vec3::Zero();
                for (const int idx : list) {
                    const ProjEntry& e = tables.entries[static_cast<std::size_t>(idx)];
                    if (col < e.x0 || col > e.x1) continue;
                    const Vec2 d(px - e.u.x(), py - e.u.y());
                    const Scalar q = d.dot(e.a * d);
                    if (q >= kCutoffQ) continue;
                    const Scalar w = e.alpha * falloff(q);
                    if (w <= 0.0) continue;
                    acc += (w * transmittance) * e.color;
                    transmittance *= (1.0 - w);
                    if (transmittance < kTransmittanceMin) break;
                }
                acc += transmittance * settings.background;
                for (int c = 0; c < 3; ++c) out.image.ch[c](row, col) = acc[c];
                out.accumulated_alpha(row, col) = 1.0 - transmittance;
            }
        }
    });
    return out;
}

namespace {

struct PixelAccum {
    Vec2 gu = Vec2::Zero();
    Mat2 gm = Mat2::Zero();
    Vec3 gc = Vec3::Zero();
    Scalar galpha = 0.0;

    void add(const PixelAccum& o) {
        gu += o.gu;
        gm += o.gm;
        gc += o.gc;
        galpha += o.galpha;
    }
};

struct Replay {
    int list_pos;      // position inside the row list
    Scalar w;
    Scalar q;
    Scalar g;          // exp(-q/2)
    Vec2 ad;           // A * d
    Scalar t_before;   // transmittance before this splat composites
};

// d(rotation matrix)/d(quaternion component), quaternion as (w, x, y, z)
Mat3 rotation_partial(const Quat& q, int comp) {
    const Scalar w = q.w(), x = q.x(), y = q.y(), z = q.z();
    Mat3 d;
    switch (comp) {
        case 0: d << 0, -z, y, z, 0, -x, -y, x, 0; break;
        case 1: d << 0, y, z, y, -2 * x, -w, z, w, -2 * x; break;
        case 2: d << -2 * y, x, w, x, 0, z, -w, z, -2 * y; break;
        default: d << -2 * z, -w, x, w, -2 * z, y, x, y, 0; break;
    }
    return 2.0 * d;
}

}  // namespace

std::vector<SplatGrads> render_backward(const GaussianCloud& cloud, const Camera& camera,
                                        const ImageBuffer& dL_dimage,
                                        const RenderOutput& cache,
                                        const RenderSettings& settings) {
    validate_camera(camera);
    if (!(cache.camera == camera) || cache.splat_count != cloud.size())
        throw contract_error("render_backward: cache does not match cloud and camera");
    if (dL_dimage.width != camera.width || dL_dimage.height != camera.height)
        throw contract_error("render_backward: gradient image resolution mismatch");

    ProjectionTables tables = build_tables(cloud, camera);
    const int rows = camera.height;

    // one partial accumulator per (row, row-list entry); merged in row order
    std::vector<std::vector<PixelAccum>> partials(static_cast<std::size_t>(rows));
    for (int row = 0; row < rows; ++row)
        partials[static_cast<std::size_t>(row)].resize(
            tables.row_lists[static_cast<std::size_t>(row)].size());

    run_row_chunks(rows, settings.threads, [&](int row_lo, int row_hi) {
        std::vector<Replay> stack;
        stack.reserve(64);
        for (int row = row_lo; row < row_hi; ++row) {
            const auto& list = tables.row_lists[static_cast<std::size_t>(row)];
            auto& acc_row = partials[static_cast<std::size_t>(row)];
            const Scalar py = row + 0.5;
            for (int col = 0; col < camera.width; ++col) {
                const Scalar px = col + 0.5;
                stack.clear();
                Scalar transmittance = 1.0;
                for (int pos = 0; pos < static_cast<int>(list.size()); ++pos) {
                    const ProjEntry& e = tables.entries[static_cast<std::size_t>(list[pos])];
                    if (col < e.x0 || col > e.x1) continue;
                    const Vec2 d(px - e.u.x(), py - e.u.y());
                    const Scalar q = d.dot(e.a * d);
                    if (q >= kCutoffQ) continue;
                    const Scalar g = std::exp(-0.5 * q);
                    const Scalar w = e.alpha * falloff(q);
                    if (w <= 0.0) continue;
                    stack.push_back({pos, w, q, g, e.a * d, transmittance});
                    transmittance *= (1.0 - w);
                    if (transmittance < kTransmittanceMin) break;
                }
                if (stack.empty()) continue;

                const Vec3 grad_pixel(dL_dimage.ch[0](row, col), dL_dimage.ch[1](row, col),
                                      dL_dimage.ch[2](row, col));
                Vec3 suffix = transmittance * settings.background;
                for (int k = static_cast<int>(stack.size()) - 1; k >= 0; --k) {
                    const Replay& r = stack[static_cast<std::size_t>(k)];
                    const ProjEntry& e =
                        tables.entries[static_cast<std::size_t>(list[r.list_pos])];
                    PixelAccum& acc = acc_row[static_cast<std::size_t>(r.list_pos)];

                    const Vec3 dc_dw =
                        e.color * r.t_before - suffix / std::max(1.0 - r.w, 1e-12);
                    const Scalar gw = grad_pixel.dot(dc_dw);

                    acc.gc += grad_pixel * (r.w * r.t_before);
                    acc.galpha += gw * falloff(r.q);

                    const Scalar gq = gw * e.alpha * falloff_dq(r.g);
                    acc.gu += gq * (-2.0 * r.ad);
                    acc.gm -= gq * (r.ad * r.ad.transpose());

                    suffix += e.color * (r.w * r.t_before);
                }
            }
        }
    });

    // fixed-order merge: rows ascending, entries in row-list order
    std::vector<PixelAccum> totals(tables.entries.size());
    for (int row = 0; row < rows; ++row) {
        const auto& list = tables.row_lists[static_cast<std::size_t>(row)];
        const auto& acc_row = partials[static_cast<std::size_t>(row)];
        for (std::size_t j = 0; j < list.size(); ++j)
            totals[static_cast<std::size_t>(list[j])].add(acc_row[j]);
    }

    std::vector<SplatGrads> grads(cloud.size());
    for (std::size_t idx = 0; idx < tables.entries.size(); ++idx) {
        const ProjEntry& e = tables.entries[idx];
        const PixelAccum& acc = totals[idx];
        const GaussianSplat& s = cloud.splats[static_cast<std::size_t>(e.splat)];
        SplatGrads& g = grads[static_cast<std::size_t>(e.splat)];

        g.color = acc.gc;
        g.raw_opacity = acc.galpha * e.alpha * (1.0 - e.alpha);
        g.mean2d = acc.gu;

        // cov2d = J V J^T (+ constant dilation), V = R Sigma R^T
        const Mat3 gv = e.jac.transpose() * acc.gm * e.jac;
        const Eigen::Matrix<Scalar, 2, 3> gj =
            (acc.gm + acc.gm.transpose()) * e.jac * e.v_cam;

        Vec3 gy = e.jac.transpose() * acc.gu;
        const Scalar iz = 1.0 / e.z;
        const Scalar iz2 = iz * iz;
        const Scalar iz3 = iz2 * iz;
        gy.x() += gj(0, 2) * (-camera.fx * iz2);
        gy.y() += gj(1, 2) * (-camera.fy * iz2);
        gy.z() += gj(0, 0) * (-camera.fx * iz2) + gj(1, 1) * (-camera.fy * iz2) +
                  gj(0, 2) * (2.0 * camera.fx * e.y.x() * iz3) +
                  gj(1, 2) * (2.0 * camera.fy * e.y.y() * iz3);
        g.position = camera.rotation.transpose() * gy;

        const Mat3 gsigma = camera.rotation.transpose() * gv * camera.rotation;
        const Quat qn = s.rotation.normalized();
        const Mat3 rot = qn.toRotationMatrix();
        const Vec3 scale = s.scale();

        const Mat3 rt_gs_r = rot.transpose() * gsigma * rot;
        for (int k = 0; k < 3; ++k)
            g.raw_scale[k] = rt_gs_r(k, k) * 2.0 * scale[k] * scale[k];

        const Mat3 grot =
            (gsigma + gsigma.transpose()) * rot * scale.array().square().matrix().asDiagonal();
        Vec4 gq_raw;
        for (int comp = 0; comp < 4; ++comp)
            gq_raw[comp] = (grot.array() * rotation_partial(qn, comp).array()).sum();
        // project onto the tangent of the unit sphere (gradient through normalization)
        const Vec4 qv(qn.w(), qn.x(), qn.y(), qn.z());
        g.rotation = gq_raw - qv * qv.dot(gq_raw);
    }
    return grads;
}

}  // namespace mhgs
