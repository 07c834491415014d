#pragma once

#include "mixmeter/estimation.hpp"
#include "mixmeter/sim/engine.hpp"

namespace mixmeter::sim {

// Per layer: 40% offline-capable, 5% throughput-capped, 5% random droppers,
// the rest reliable. Counts scale by nearest integer; sub-variants (cap
// fractions, drop direction/rate) cycle deterministically. `enabled = false`
// clears every profile.
void assign_unreliable_profile(SimConfig& cfg, bool enabled = true);

enum class AdversaryPlacement {
    TARGETS_PRECEDING,   // adversaries in one layer, targets in the layer before
    TARGETS_SUCCEEDING,  // targets in the layer after
    TARGETS_STRADDLING,  // targets split before/after the adversary layer
    ADVERSARIES_SPLIT,   // adversaries split around a single target layer
};

struct AdversarialSetup {
    std::vector<NodeId> adversaries;
    std::vector<NodeId> targets;
};

// Places |A| adversaries adjacent to all |T| targets and configures full drops
// on every shared edge, nothing elsewhere. Throws std::invalid_argument when
// the placement does not fit the topology (PlacementInfeasible).
AdversarialSetup adversarial_scenario(SimConfig& cfg, std::uint32_t n_adversaries,
                                      std::uint32_t n_targets, AdversaryPlacement placement,
                                      std::uint32_t adversary_layer = 2);

struct AttackCosts {
    double c_a = 0;  // aggregate reliability penalty on the adversaries
    double c_t = 0;  // aggregate penalty inflicted on the targets
};

AttackCosts attack_costs(const std::vector<NodeScore>& scores,
                         const std::vector<NodeId>& adversaries,
                         const std::vector<NodeId>& targets);

}  // namespace mixmeter::sim
