#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "mixmeter/group.hpp"

namespace mixmeter {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xffffffffu;

inline std::uint64_t edge_key(NodeId src, NodeId dst) {
    return (std::uint64_t(src) << 32) | dst;
}
inline NodeId edge_src(std::uint64_t key) { return NodeId(key >> 32); }
inline NodeId edge_dst(std::uint64_t key) { return NodeId(key & 0xffffffffu); }

// Layered mixnet graph. Node ids are assigned contiguously: gateways first
// [0, W_G), then layer 1 [W_G, W_G+W), layer 2, ... layer L. Gateways act as
// both entry (predecessors of layer 1) and exit (successors of layer L).
class Topology {
public:
    Topology() = default;
    Topology(std::uint32_t layers, std::uint32_t width, std::uint32_t gateways);

    std::uint32_t layers() const { return layers_; }
    std::uint32_t width() const { return width_; }
    std::uint32_t gateway_count() const { return gateways_; }
    std::uint32_t node_count() const { return gateways_ + layers_ * width_; }
    std::uint32_t mix_node_count() const { return layers_ * width_; }

    bool is_gateway(NodeId id) const { return id < gateways_; }
    // 0 for gateways, 1..L for mix layers.
    std::uint32_t layer_of(NodeId id) const;
    NodeId mix_node(std::uint32_t layer, std::uint32_t index) const;  // layer in 1..L
    std::uint32_t index_in_layer(NodeId id) const;

    // Successor set in the forward direction; for layer-L nodes this is the
    // gateway list. Gateways' successors are layer 1.
    std::vector<NodeId> successors(NodeId id) const;
    std::vector<NodeId> predecessors(NodeId id) const;

    // Per-layer routing weights; uniform (all ones) by default. Entry i of
    // layer l weights mix_node(l, i); entry i of layer 0 weights gateway i
    // when measurement exits are drawn.
    void set_layer_weights(std::uint32_t layer, std::vector<std::uint64_t> weights);

    const GBytes& node_public_key(NodeId id) const { return pub_keys_.at(id); }
    const GBytes& node_secret_key(NodeId id) const { return sec_keys_.at(id); }

    // Derive per-node key pairs deterministically from a seed (simulator-side).
    void generate_node_keys(const Group& grp, ByteView seed);

    // Burned (blocklisted) edges are public and excluded from the routing
    // policy itself, so VRF-derived routes respect the blocklist.
    void set_burned_edges(std::set<std::uint64_t> burned) { burned_ = std::move(burned); }
    const std::set<std::uint64_t>& burned_edges() const { return burned_; }

    // Next hop for the packet chain: maps 256-bit randomness to a successor via
    // the inverse CDF over the layer's routing weights. Throws on a node with
    // no usable successors (NoSuccessors).
    NodeId route_next(NodeId from, const Hash256& r) const;

private:
    std::uint32_t layers_ = 0, width_ = 0, gateways_ = 0;
    std::vector<std::vector<std::uint64_t>> weights_;  // [0..L] -> per-index weight
    std::vector<GBytes> pub_keys_, sec_keys_;
    std::set<std::uint64_t> burned_;
};

}  // namespace mixmeter
