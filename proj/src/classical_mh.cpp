#include "mhgs/classical_mh.hpp"

#include <cmath>

namespace mhgs {

MHChainState make_chain(Eigen::VectorXd initial_state, const EnergyFn& energy_fn,
                        std::uint64_t seed) {
    MHChainState chain;
    chain.state = std::move(initial_state);
    chain.energy = energy_fn(chain.state);
    chain.rng = Rng(seed);
    if (!std::isfinite(chain.energy))
        throw numerical_error("make_chain: non-finite energy at the initial state");
    return chain;
}

bool classical_mh_step(MHChainState& chain, const EnergyFn& energy_fn,
                       const ProposalSampler& proposal_sampler,
                       const ProposalLogDensity& proposal_log_density) {
    const Eigen::VectorXd proposal = proposal_sampler(chain.state, chain.rng);
    const Scalar proposal_energy = energy_fn(proposal);
    if (!std::isfinite(proposal_energy))
        throw numerical_error("classical_mh_step: non-finite proposal energy");

    const Scalar log_ratio = -(proposal_energy - chain.energy) +
                             proposal_log_density(proposal, chain.state) -
                             proposal_log_density(chain.state, proposal);
    const Scalar rho = std::min(1.0, std::exp(log_ratio));
    const bool accepted = chain.rng.uniform() < rho;
    if (accepted) {
        chain.state = proposal;
        chain.energy = proposal_energy;
    }
    ++chain.steps;
    return accepted;
}

}  // namespace mhgs
