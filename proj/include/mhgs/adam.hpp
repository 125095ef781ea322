#pragma once

#include "mhgs/render.hpp"
#include "mhgs/splat.hpp"

#include <vector>

namespace mhgs {

struct AdamConfig {
    Scalar beta1 = 0.9;
    Scalar beta2 = 0.999;
    Scalar eps = 1e-15;
};

/// Learning rates per parameter class (position already scaled by extent).
struct LrTable {
    Scalar position = 1.6e-4;
    Scalar scale = 5e-3;
    Scalar rotation = 1e-3;
    Scalar color = 2.5e-3;
    Scalar opacity = 5e-2;
};

/// One scalar Adam update; step_count is 1-based.
inline void adam_update(Scalar& x, Scalar grad, Scalar& m, Scalar& v, std::int64_t step_count,
                        Scalar lr, const AdamConfig& cfg) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
    const Scalar m_hat = m / (1.0 - std::pow(cfg.beta1, static_cast<Scalar>(step_count)));
    const Scalar v_hat = v / (1.0 - std::pow(cfg.beta2, static_cast<Scalar>(step_count)));
    x -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
}

/// First/second moment accumulators per splat; rows track the cloud size.
struct AdamState {
    struct Row {
        Vec3 m_position = Vec3::Zero(), v_position = Vec3::Zero();
        Vec3 m_scale = Vec3::Zero(), v_scale = Vec3::Zero();
        Vec4 m_rotation = Vec4::Zero(), v_rotation = Vec4::Zero();
        Vec3 m_color = Vec3::Zero(), v_color = Vec3::Zero();
        Scalar m_opacity = 0.0, v_opacity = 0.0;
    };

    std::vector<Row> rows;
    std::int64_t step_count = 0;

    /// Appends zero rows for newborn splats (never shrinks).
    void grow_to(std::size_t n) {
        if (rows.size() < n) rows.resize(n);
    }

    void reset_row(std::size_t i) { rows[i] = Row{}; }

    /// Keeps rows whose mask entry is nonzero, preserving order.
    void compact(const std::vector<std::uint8_t>& keep_mask) {
        std::size_t out = 0;
        for (std::size_t i = 0; i < keep_mask.size(); ++i)
            if (keep_mask[i]) rows[out++] = rows[i];
        rows.resize(out);
    }
};

/// Standard Adam on every raw parameter, one shared step count. Quaternions
/// are renormalized and colors clamped to [0,1] afterwards.
void adam_step(GaussianCloud& cloud, const std::vector<SplatGrads>& grads, AdamState& state,
               const LrTable& lr, const AdamConfig& cfg = {});

}  // namespace mhgs
