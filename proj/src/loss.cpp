#include "mhgs/loss.hpp"

#include "mhgs/ssim.hpp"

namespace mhgs {

Scalar mean_opacity(const GaussianCloud& cloud) {
    if (cloud.empty()) return 0.0;
    Scalar sum = 0.0;
    for (const auto& s : cloud.splats) sum += s.opacity();
    return sum / static_cast<Scalar>(cloud.size());
}

Scalar mean_scale(const GaussianCloud& cloud) {
    if (cloud.empty()) return 0.0;
    Scalar sum = 0.0;
    for (const auto& s : cloud.splats) sum += s.scale().mean();
    return sum / static_cast<Scalar>(cloud.size());
}

LossBreakdown loss(const ImageBuffer& rendered, const ImageBuffer& target,
                   const GaussianCloud& cloud, const LossWeights& weights) {
    if (!rendered.same_resolution(target)) throw contract_error("loss: resolution mismatch");
    LossBreakdown out;
    out.per_pixel_l1 = l1_map(rendered, target);
    out.per_pixel_ssim_dissim = 1.0 - ssim_map(rendered, target);
    out.l1_term = out.per_pixel_l1.mean();
    out.dssim_term = out.per_pixel_ssim_dissim.mean();
    out.opacity_term = weights.lambda_opacity * mean_opacity(cloud);
    out.scale_term = weights.lambda_scale * mean_scale(cloud);
    out.total = (1.0 - weights.lambda) * out.l1_term + weights.lambda * out.dssim_term +
                out.opacity_term + out.scale_term;
    return out;
}

ImageBuffer loss_image_gradient(const ImageBuffer& rendered, const ImageBuffer& target,
                                const LossWeights& weights) {
    if (!rendered.same_resolution(target))
        throw contract_error("loss_image_gradient: resolution mismatch");
    const Scalar n_pix = static_cast<Scalar>(rendered.width) * rendered.height;

    // L1 part: d/dr of mean_|r - t| over pixels and channels
    ImageBuffer grad(rendered.width, rendered.height);
    const Scalar l1_coef = (1.0 - weights.lambda) / (3.0 * n_pix);
    for (int c = 0; c < 3; ++c)
        grad.ch[c] = l1_coef * (rendered.ch[c] - target.ch[c]).sign();

    // D-SSIM part: d/dr of lambda * mean_p (1 - SSIM(p))
    const PixelMap upstream = PixelMap::Constant(rendered.height, rendered.width,
                                                 -weights.lambda / n_pix);
    const ImageBuffer ssim_grad = ssim_backward(rendered, target, upstream);
    for (int c = 0; c < 3; ++c) grad.ch[c] += ssim_grad.ch[c];
    return grad;
}

void add_regularizer_gradients(const GaussianCloud& cloud, const LossWeights& weights,
                               std::vector<SplatGrads>& grads) {
    if (grads.size() != cloud.size())
        throw contract_error("add_regularizer_gradients: gradient size mismatch");
    const Scalar n = static_cast<Scalar>(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const GaussianSplat& s = cloud.splats[i];
        const Scalar alpha = s.opacity();
        grads[i].raw_opacity += weights.lambda_opacity * alpha * (1.0 - alpha) / n;
        grads[i].raw_scale += (weights.lambda_scale / (3.0 * n)) * s.scale();
    }
}

}  // namespace mhgs
