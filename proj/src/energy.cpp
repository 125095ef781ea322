#include "mhgs/energy.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mhgs {

EnergyValue energy(const GaussianCloud& cloud, Scalar loss_value, const VoxelGrid& grid,
                   Scalar lambda_v) {
    if (grid.total != static_cast<std::int64_t>(cloud.size()))
        throw contract_error("energy: voxel grid is not consistent with the cloud");

    std::vector<std::pair<VoxelKey, std::int64_t>> cells(grid.counts.begin(), grid.counts.end());
    std::sort(cells.begin(), cells.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    EnergyValue out;
    out.loss_part = loss_value;
    for (const auto& [key, count] : cells)
        out.prior_part += std::log1p(static_cast<Scalar>(count));
    out.prior_part *= lambda_v;
    out.total = out.loss_part + out.prior_part;
    return out;
}

InsertionDelta delta_energy_insert(Scalar delta_loss, std::int64_t count_before,
                                   Scalar lambda_v) {
    if (count_before < 0) throw contract_error("delta_energy_insert: negative count");
    if (lambda_v < 0.0) throw contract_error("delta_energy_insert: negative lambda_v");
    const Scalar c = static_cast<Scalar>(count_before);
    InsertionDelta out;
    out.exact_prior = lambda_v * std::log((2.0 + c) / (1.0 + c));
    out.exact = delta_loss + out.exact_prior;
    out.approx_D = 1.0 / (1.0 + lambda_v * c);
    return out;
}

}  // namespace mhgs
