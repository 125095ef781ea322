#pragma once

#include "mhgs/core.hpp"

#include <array>
#include <filesystem>

namespace mhgs {

/// RGB image as three double-precision planes, ch[c](y, x).
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::array<PixelMap, 3> ch;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, Scalar fill = 0.0) { resize(w, h, fill); }

    void resize(int w, int h, Scalar fill = 0.0) {
        width = w;
        height = h;
        for (auto& plane : ch) plane = PixelMap::Constant(h, w, fill);
    }

    Scalar& at(int x, int y, int c) { return ch[c](y, x); }
    Scalar at(int x, int y, int c) const { return ch[c](y, x); }

    bool same_resolution(const ImageBuffer& other) const {
        return width == other.width && height == other.height;
    }

    bool all_finite() const {
        return ch[0].isFinite().all() && ch[1].isFinite().all() && ch[2].isFinite().all();
    }

    void clamp01() {
        for (auto& plane : ch) plane = plane.max(0.0).min(1.0);
    }
};

/// Channel-mean absolute difference per pixel. Resolutions must match.
PixelMap l1_map(const ImageBuffer& a, const ImageBuffer& b);

Scalar mean_abs_error(const ImageBuffer& a, const ImageBuffer& b);
Scalar mean_squared_error(const ImageBuffer& a, const ImageBuffer& b);

/// Binary PPM (P6, maxval 255). Values are clamped to [0,1] on write.
void write_ppm(const ImageBuffer& image, const std::filesystem::path& path);
ImageBuffer read_ppm(const std::filesystem::path& path);

/// Grayscale dump of a scalar map (written as P6 with equal channels).
void write_map_ppm(const PixelMap& map, const std::filesystem::path& path);

/// target | render | abs-error side by side, used by the eval reports.
ImageBuffer triptych(const ImageBuffer& target, const ImageBuffer& render);

}  // namespace mhgs
