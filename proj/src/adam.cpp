#include "mhgs/adam.hpp"

namespace mhgs {

void adam_step(GaussianCloud& cloud, const std::vector<SplatGrads>& grads, AdamState& state,
               const LrTable& lr, const AdamConfig& cfg) {
    if (grads.size() != cloud.size())
        throw contract_error("adam_step: gradient count does not match the cloud");
    state.grow_to(cloud.size());
    ++state.step_count;
    const std::int64_t t = state.step_count;

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        GaussianSplat& s = cloud.splats[i];
        const SplatGrads& g = grads[i];
        AdamState::Row& row = state.rows[i];

        for (int k = 0; k < 3; ++k) {
            adam_update(s.position[k], g.position[k], row.m_position[k], row.v_position[k], t,
                        lr.position, cfg);
            adam_update(s.raw_scale[k], g.raw_scale[k], row.m_scale[k], row.v_scale[k], t,
                        lr.scale, cfg);
            adam_update(s.color[k], g.color[k], row.m_color[k], row.v_color[k], t, lr.color,
                        cfg);
        }
        Vec4 q(s.rotation.w(), s.rotation.x(), s.rotation.y(), s.rotation.z());
        for (int k = 0; k < 4; ++k)
            adam_update(q[k], g.rotation[k], row.m_rotation[k], row.v_rotation[k], t,
                        lr.rotation, cfg);
        s.rotation = Quat(q[0], q[1], q[2], q[3]).normalized();

        adam_update(s.raw_opacity, g.raw_opacity, row.m_opacity, row.v_opacity, t, lr.opacity,
                    cfg);
        s.color = s.color.cwiseMax(0.0).cwiseMin(1.0);
    }
}

}  // namespace mhgs
