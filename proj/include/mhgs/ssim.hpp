#pragma once

#include "mhgs/image.hpp"

namespace mhgs {

/// Per-pixel SSIM, 11x11 Gaussian window (sigma 1.5), C1=0.01^2, C2=0.03^2,
/// computed per channel then channel-averaged. Borders use edge replication,
/// so the map has the input resolution. Values lie in [-1, 1].
PixelMap ssim_map(const ImageBuffer& rendered, const ImageBuffer& target);

/// Gradient of sum_p dL_dssim(p) * SSIM(p) with respect to `rendered`
/// (the exact adjoint of ssim_map, including the replicated borders).
ImageBuffer ssim_backward(const ImageBuffer& rendered, const ImageBuffer& target,
                          const PixelMap& dL_dssim);

}  // namespace mhgs
