#pragma once

#include "mhgs/image.hpp"
#include "mhgs/render.hpp"
#include "mhgs/splat.hpp"

#include <vector>

namespace mhgs {

struct LossWeights {
    Scalar lambda = 0.2;           // D-SSIM mixing weight
    Scalar lambda_opacity = 0.01;  // on the mean activated opacity
    Scalar lambda_scale = 0.01;    // on the mean activated scale
};

struct LossBreakdown {
    Scalar total = 0.0;
    Scalar l1_term = 0.0;       // mean absolute error
    Scalar dssim_term = 0.0;    // mean (1 - SSIM)
    Scalar opacity_term = 0.0;  // lambda_opacity * mean opacity
    Scalar scale_term = 0.0;    // lambda_scale * mean scale
    PixelMap per_pixel_l1;
    PixelMap per_pixel_ssim_dissim;
};

/// total = (1-lambda) L1 + lambda D-SSIM + opacity and scale regularizers.
LossBreakdown loss(const ImageBuffer& rendered, const ImageBuffer& target,
                   const GaussianCloud& cloud, const LossWeights& weights = {});

Scalar mean_opacity(const GaussianCloud& cloud);
Scalar mean_scale(const GaussianCloud& cloud);

/// d(total)/d(rendered image): the photometric part of the loss gradient,
/// fed into render_backward.
ImageBuffer loss_image_gradient(const ImageBuffer& rendered, const ImageBuffer& target,
                                const LossWeights& weights = {});

/// Adds the opacity/scale regularizer gradients onto per-splat gradients.
void add_regularizer_gradients(const GaussianCloud& cloud, const LossWeights& weights,
                               std::vector<SplatGrads>& grads);

}  // namespace mhgs
