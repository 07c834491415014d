#pragma once

#include <unordered_map>

#include "mixmeter/topology.hpp"

namespace mixmeter {

// Per-edge counters produced by the post-epoch stages. s_star / d_star come
// from opened measurements; t_total is the receiver-local traffic counter the
// protocol never broadcasts (fed separately by each node).
struct EdgeTally {
    std::uint64_t s_star = 0;
    std::uint64_t d_star = 0;
    std::uint64_t discarded = 0;
    std::uint64_t t_total = 0;
};

using TallyMap = std::unordered_map<std::uint64_t, EdgeTally>;

// (pred, node, succ) counters held by each node: total packets received from
// pred and forwarded to succ, plus the opened-measurement equivalents.
struct TripleCounters {
    // key: (pred << 32 | succ) within a fixed middle node
    std::unordered_map<std::uint64_t, std::uint64_t> totals;
    std::unordered_map<std::uint64_t, std::uint64_t> opened_measurements;
};

using TripleMap = std::unordered_map<NodeId, TripleCounters>;

}  // namespace mixmeter
