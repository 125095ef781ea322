#include "mhgs/ssim.hpp"

#include <array>
#include <cmath>

namespace mhgs {

namespace {

constexpr int kRadius = 5;
constexpr int kWindow = 2 * kRadius + 1;
constexpr Scalar kC1 = 0.01 * 0.01;
constexpr Scalar kC2 = 0.03 * 0.03;

std::array<Scalar, kWindow> gaussian_window() {
    std::array<Scalar, kWindow> w{};
    Scalar sum = 0.0;
    for (int k = -kRadius; k <= kRadius; ++k) {
        const Scalar v = std::exp(-static_cast<Scalar>(k * k) / (2.0 * 1.5 * 1.5));
        w[static_cast<std::size_t>(k + kRadius)] = v;
        sum += v;
    }
    for (auto& v : w) v /= sum;
    return w;
}

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// Separable clamped-border Gaussian filter; equals the 2D clamped gather.
PixelMap filter2(const PixelMap& src) {
    static const std::array<Scalar, kWindow> w = gaussian_window();
    const int rows = static_cast<int>(src.rows());
    const int cols = static_cast<int>(src.cols());
    PixelMap horz(rows, cols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            Scalar acc = 0.0;
            for (int k = -kRadius; k <= kRadius; ++k)
                acc += w[static_cast<std::size_t>(k + kRadius)] * src(y, clamp_index(x + k, cols));
            horz(y, x) = acc;
        }
    PixelMap out(rows, cols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            Scalar acc = 0.0;
            for (int k = -kRadius; k <= kRadius; ++k)
                acc += w[static_cast<std::size_t>(k + kRadius)] * horz(clamp_index(y + k, rows), x);
            out(y, x) = acc;
        }
    return out;
}

struct ChannelStats {
    PixelMap mu_x, mu_y, sxx, syy, sxy;  // means and (co)variances per pixel
};

ChannelStats channel_stats(const PixelMap& x, const PixelMap& y) {
    ChannelStats s;
    s.mu_x = filter2(x);
    s.mu_y = filter2(y);
    s.sxx = filter2(x.square()) - s.mu_x.square();
    s.syy = filter2(y.square()) - s.mu_y.square();
    s.sxy = filter2(x * y) - s.mu_x * s.mu_y;
    return s;
}

}  // namespace

PixelMap ssim_map(const ImageBuffer& rendered, const ImageBuffer& target) {
    if (!rendered.same_resolution(target)) throw contract_error("ssim_map: resolution mismatch");
    PixelMap out = PixelMap::Zero(rendered.height, rendered.width);
    for (int c = 0; c < 3; ++c) {
        const ChannelStats s = channel_stats(rendered.ch[c], target.ch[c]);
        const PixelMap a1 = 2.0 * s.mu_x * s.mu_y + kC1;
        const PixelMap a2 = 2.0 * s.sxy + kC2;
        const PixelMap b1 = s.mu_x.square() + s.mu_y.square() + kC1;
        const PixelMap b2 = s.sxx + s.syy + kC2;
        out += (a1 * a2) / (b1 * b2);
    }
    return out / 3.0;
}

ImageBuffer ssim_backward(const ImageBuffer& rendered, const ImageBuffer& target,
                          const PixelMap& dL_dssim) {
    if (!rendered.same_resolution(target))
        throw contract_error("ssim_backward: resolution mismatch");
    if (dL_dssim.rows() != rendered.height || dL_dssim.cols() != rendered.width)
        throw contract_error("ssim_backward: upstream map resolution mismatch");

    static const std::array<Scalar, kWindow> w = gaussian_window();
    const int rows = rendered.height;
    const int cols = rendered.width;

    ImageBuffer grad(cols, rows);
    for (int c = 0; c < 3; ++c) {
        const PixelMap& x = rendered.ch[c];
        const PixelMap& y = target.ch[c];
        const ChannelStats s = channel_stats(x, y);

        // dS/dx(i) = w_{i-p} [ base(p) + cy(p) y(i) - cx(p) x(i) ] summed over
        // windows p containing i; the three coefficient maps close over the stats.
        PixelMap base(rows, cols), coef_x(rows, cols), coef_y(rows, cols);
        for (int py = 0; py < rows; ++py)
            for (int px = 0; px < cols; ++px) {
                const Scalar mux = s.mu_x(py, px), muy = s.mu_y(py, px);
                const Scalar a1 = 2.0 * mux * muy + kC1;
                const Scalar a2 = 2.0 * s.sxy(py, px) + kC2;
                const Scalar b1 = mux * mux + muy * muy + kC1;
                const Scalar b2 = s.sxx(py, px) + s.syy(py, px) + kC2;
                const Scalar inv_b1b2 = 1.0 / (b1 * b2);
                const Scalar ssim = a1 * a2 * inv_b1b2;
                const Scalar c_y = 2.0 * a1 * inv_b1b2;         // times (y(i) - muy)
                const Scalar c_x = 2.0 * ssim / b2;             // times -(x(i) - mux)
                const Scalar c_mu = 2.0 * muy * a2 * inv_b1b2 - 2.0 * ssim * mux / b1;
                const Scalar up = dL_dssim(py, px) / 3.0;       // channel average
                base(py, px) = up * (c_mu - c_y * muy + c_x * mux);
                coef_y(py, px) = up * c_y;
                coef_x(py, px) = up * c_x;
            }

        PixelMap& out = grad.ch[c];
        for (int py = 0; py < rows; ++py)
            for (int ky = -kRadius; ky <= kRadius; ++ky) {
                const int iy = clamp_index(py + ky, rows);
                const Scalar wy = w[static_cast<std::size_t>(ky + kRadius)];
                for (int px = 0; px < cols; ++px) {
                    const Scalar b = base(py, px), cyv = coef_y(py, px), cxv = coef_x(py, px);
                    for (int kx = -kRadius; kx <= kRadius; ++kx) {
                        const int ix = clamp_index(px + kx, cols);
                        const Scalar wgt = wy * w[static_cast<std::size_t>(kx + kRadius)];
                        out(iy, ix) += wgt * (b + cyv * y(iy, ix) - cxv * x(iy, ix));
                    }
                }
            }
    }
    return grad;
}

}  // namespace mhgs
