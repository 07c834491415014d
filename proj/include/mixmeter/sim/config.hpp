#pragma once

#include <map>
#include <optional>
#include <string>

#include "mixmeter/group.hpp"
#include "mixmeter/topology.hpp"

namespace mixmeter::sim {

enum class BehaviorKind {
    RELIABLE,
    OFFLINE_TOGGLE,
    THROUGHPUT_CAP,
    RANDOM_DROP,
    ADVERSARIAL,
    FREE_RIDER,
};

struct NodeBehavior {
    BehaviorKind kind = BehaviorKind::RELIABLE;
    // OFFLINE_TOGGLE
    double mean_online_min = 90.0;
    double mean_offline_min = 10.0;
    // THROUGHPUT_CAP: fraction of the average per-node incoming rate
    double cap_fraction = 1.0;
    // RANDOM_DROP
    bool drop_incoming = true;
    double drop_rate = 0.0;
    // ADVERSARIAL: full drop on edges shared with targets. targets_in are
    // attacked on arrival (unregistered); targets_out after registration.
    std::vector<NodeId> targets_in;
    std::vector<NodeId> targets_out;
    // FREE_RIDER: shares of the node's outgoing traffic that are injected,
    // via substitution (drop one, send one) and pure addition; sum < 1.
    double substitute_rate = 0.0;
    double add_rate = 0.0;
};

enum class CommitBackend { BLOOM, MERKLE };

struct SimConfig {
    std::uint32_t layers = 3;
    std::uint32_t width = 80;
    std::uint32_t gateways = 80;
    double epoch_seconds = 3600.0;
    double client_rate = 1.0;  // packets per second per client
    std::uint32_t clients = 100;
    double p_lot = 0.01;
    double mean_mix_delay_ms = 50.0;
    double link_ms = 40.0;
    double gateway_ms = 2.0;
    std::uint64_t seed = 1;
    GroupKind crypto_mode = GroupKind::MOCK;
    std::map<NodeId, NodeBehavior> behaviors;
    CommitBackend commit_backend = CommitBackend::BLOOM;
    double commit_fp = 1e-5;
    double no_skipping_alpha = 0.0;  // 0: no challenges during the run
    std::optional<std::uint64_t> nonce;  // defaults to a seed-derived value
    // Exact replay stores are kept up to this expected packet volume.
    std::uint64_t replay_exact_limit = 1u << 21;

    double expected_packets() const { return client_rate * clients * epoch_seconds; }
    std::uint64_t effective_nonce() const { return nonce ? *nonce : seed * 0x10001ULL + 7; }

    void validate() const;
};

std::string behavior_kind_name(BehaviorKind k);
BehaviorKind behavior_kind_from_name(const std::string& s);

SimConfig config_from_json(const std::string& text);
std::string config_to_json(const SimConfig& cfg);

}  // namespace mixmeter::sim
