#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "chain_sim.hpp"

namespace smacs::validators {

struct SimulatedCall {
    Address contract;
    MethodId method;
    std::vector<ArgPair> args;
    Address caller;
    std::uint64_t value = 0;
};

struct ValidatorVerdict {
    bool pass = false;
    std::string detail;  // divergence description or re-entrancy trace summary
    std::uint64_t elapsed_us = 0;
};

/// Runs the call against every head on isolated copies of the snapshot and
/// passes only when all (outcome, storage digest, transfer list) triples are
/// identical. A trapping head counts as divergence unless every head traps
/// identically. Requires at least two heads with identical method tables.
ValidatorVerdict nversion_uniform(const SimulatedCall& call,
                                  const std::vector<Address>& heads,
                                  const sim::Simulator& snapshot);

/// Runs the call on a copy of the snapshot with call tracing and fails when
/// any message call re-enters a contract that still has a live frame, or
/// when execution traps. Guards are not enforced inside validator runs.
ValidatorVerdict ecf_check(const SimulatedCall& call, const sim::Simulator& snapshot);

}  // namespace smacs::validators
