#include "mixmeter/sim/scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace mixmeter::sim {

void assign_unreliable_profile(SimConfig& cfg, bool enabled) {
    Topology topo(cfg.layers, cfg.width, cfg.gateways);
    if (!enabled) {
        for (std::uint32_t l = 1; l <= cfg.layers; ++l)
            for (std::uint32_t i = 0; i < cfg.width; ++i)
                cfg.behaviors.erase(topo.mix_node(l, i));
        return;
    }
    const std::uint32_t w = cfg.width;
    std::uint32_t n_offline = std::uint32_t(std::lround(0.40 * w));
    std::uint32_t n_capped = std::uint32_t(std::lround(0.05 * w));
    std::uint32_t n_droppers = std::uint32_t(std::lround(0.05 * w));
    while (n_offline + n_capped + n_droppers > w) --n_offline;  // tiny layers

    const double cap_fractions[4] = {1.0, 0.5, 0.25, 0.125};
    const std::pair<bool, double> drop_variants[4] = {
        {true, 0.01}, {false, 0.01}, {true, 0.20}, {false, 0.20}};

    for (std::uint32_t l = 1; l <= cfg.layers; ++l) {
        std::uint32_t idx = 0;
        for (std::uint32_t k = 0; k < n_offline; ++k, ++idx) {
            NodeBehavior b;
            b.kind = BehaviorKind::OFFLINE_TOGGLE;
            b.mean_online_min = 90.0;
            b.mean_offline_min = 10.0;
            cfg.behaviors[topo.mix_node(l, idx)] = b;
        }
        for (std::uint32_t k = 0; k < n_capped; ++k, ++idx) {
            NodeBehavior b;
            b.kind = BehaviorKind::THROUGHPUT_CAP;
            b.cap_fraction = cap_fractions[k % 4];
            cfg.behaviors[topo.mix_node(l, idx)] = b;
        }
        for (std::uint32_t k = 0; k < n_droppers; ++k, ++idx) {
            NodeBehavior b;
            b.kind = BehaviorKind::RANDOM_DROP;
            b.drop_incoming = drop_variants[k % 4].first;
            b.drop_rate = drop_variants[k % 4].second;
            cfg.behaviors[topo.mix_node(l, idx)] = b;
        }
    }
}

AdversarialSetup adversarial_scenario(SimConfig& cfg, std::uint32_t n_adversaries,
                                      std::uint32_t n_targets, AdversaryPlacement placement,
                                      std::uint32_t adversary_layer) {
    Topology topo(cfg.layers, cfg.width, cfg.gateways);
    AdversarialSetup setup;

    auto take = [&](std::uint32_t layer, std::uint32_t count, std::uint32_t from) {
        if (layer < 1 || layer > cfg.layers || from + count > cfg.width)
            throw std::invalid_argument("adversarial_scenario: placement infeasible");
        std::vector<NodeId> out;
        for (std::uint32_t i = 0; i < count; ++i) out.push_back(topo.mix_node(layer, from + i));
        return out;
    };

    // incoming = true when the adversary succeeds the target (drops arrivals
    // from it); false when it precedes the target (drops sends toward it).
    auto arm = [&](const std::vector<NodeId>& advs, const std::vector<NodeId>& targets,
                   bool incoming) {
        for (NodeId a : advs) {
            NodeBehavior& b = cfg.behaviors[a];
            b.kind = BehaviorKind::ADVERSARIAL;
            auto& list = incoming ? b.targets_in : b.targets_out;
            for (NodeId t : targets) list.push_back(t);
        }
    };

    switch (placement) {
        case AdversaryPlacement::TARGETS_PRECEDING: {
            setup.adversaries = take(adversary_layer, n_adversaries, 0);
            setup.targets = take(adversary_layer - 1, n_targets, 0);
            arm(setup.adversaries, setup.targets, true);
            break;
        }
        case AdversaryPlacement::TARGETS_SUCCEEDING: {
            setup.adversaries = take(adversary_layer, n_adversaries, 0);
            setup.targets = take(adversary_layer + 1, n_targets, 0);
            arm(setup.adversaries, setup.targets, false);
            break;
        }
        case AdversaryPlacement::TARGETS_STRADDLING: {
            setup.adversaries = take(adversary_layer, n_adversaries, 0);
            auto before = take(adversary_layer - 1, n_targets / 2, 0);
            auto after = take(adversary_layer + 1, n_targets - n_targets / 2, 0);
            arm(setup.adversaries, before, true);
            arm(setup.adversaries, after, false);
            setup.targets = before;
            setup.targets.insert(setup.targets.end(), after.begin(), after.end());
            break;
        }
        case AdversaryPlacement::ADVERSARIES_SPLIT: {
            auto preds = take(adversary_layer - 1, n_adversaries / 2, 0);
            auto succs = take(adversary_layer + 1, n_adversaries - n_adversaries / 2, 0);
            setup.targets = take(adversary_layer, n_targets, 0);
            arm(preds, setup.targets, false);  // predecessors drop sends to targets
            arm(succs, setup.targets, true);   // successors drop arrivals from targets
            setup.adversaries = preds;
            setup.adversaries.insert(setup.adversaries.end(), succs.begin(), succs.end());
            break;
        }
    }
    cfg.validate();
    return setup;
}

AttackCosts attack_costs(const std::vector<NodeScore>& scores,
                         const std::vector<NodeId>& adversaries,
                         const std::vector<NodeId>& targets) {
    AttackCosts costs;
    auto penalty = [&](const std::vector<NodeId>& set) {
        double total = 0;
        for (NodeId id : set) total += 1.0 - std::min(scores.at(id).rho_hat, 1.0);
        return total;
    };
    costs.c_a = penalty(adversaries);
    costs.c_t = penalty(targets);
    return costs;
}

}  // namespace mixmeter::sim
