#pragma once

#include "mhgs/core.hpp"

#include <functional>

namespace mhgs {

/// Reference Metropolis-Hastings kernel over a generic state vector, used to
/// validate the MH machinery on toy targets. Never part of the training loop.
struct MHChainState {
    Eigen::VectorXd state;
    Scalar energy = 0.0;  // cached energy_fn(state)
    std::int64_t steps = 0;
    Rng rng;
};

using EnergyFn = std::function<Scalar(const Eigen::VectorXd&)>;
using ProposalSampler = std::function<Eigen::VectorXd(const Eigen::VectorXd&, Rng&)>;
/// log q(to | from); must integrate the same move distribution the sampler draws.
using ProposalLogDensity =
    std::function<Scalar(const Eigen::VectorXd& from, const Eigen::VectorXd& to)>;

MHChainState make_chain(Eigen::VectorXd initial_state, const EnergyFn& energy_fn,
                        std::uint64_t seed);

/// rho = min(1, exp(-dE) q(cur|prop)/q(prop|cur)); accept with a fresh uniform.
/// Returns true when the proposal was accepted.
bool classical_mh_step(MHChainState& chain, const EnergyFn& energy_fn,
                       const ProposalSampler& proposal_sampler,
                       const ProposalLogDensity& proposal_log_density);

}  // namespace mhgs
