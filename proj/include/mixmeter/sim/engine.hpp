#pragma once

#include "mixmeter/epoch.hpp"
#include "mixmeter/sim/config.hpp"
#include "mixmeter/tally.hpp"

namespace mixmeter::sim {

struct EdgeTruth {
    std::uint64_t s = 0;      // legitimate packets transmitted and registered
    std::uint64_t d_in = 0;   // dropped by the receiving side (before storing)
    std::uint64_t d_out = 0;  // dropped by the sending side (after storing)

    std::uint64_t d() const { return d_in + d_out; }
    double beta() const { return d() ? double(d_in) / double(d()) : 0.0; }
};

// One record per measurement packet, for oracle-style recounts in tests.
struct MeasurementEvent {
    std::uint32_t credential = 0;
    std::uint32_t ctr = 0;
    std::int8_t dropped_before_hop = -1;  // -1: delivered end to end
    std::uint8_t route_len = 0;
    std::array<NodeId, 8> route{};
};

struct GroundTruth {
    std::unordered_map<std::uint64_t, EdgeTruth> edges;
    std::vector<MeasurementEvent> measurement_log;
    std::vector<std::uint64_t> injected_by_node;  // free-riding volume per node
    std::vector<double> true_rho;                 // per node, from true counters
    std::uint64_t total_packets = 0;
    std::uint64_t total_measurements = 0;
    std::uint64_t delivered_payloads = 0;
    std::uint64_t events = 0;
    std::uint64_t replayed = 0;
    double mean_latency_ms = 0;  // reporting only; never feeds tallies
};

struct SimResult {
    GroupKind crypto_mode = GroupKind::MOCK;
    Topology topo;
    GroundTruth truth;
    EpochTranscript transcript;
    TallyMap receiver_totals;  // t_total per edge, receiver-local
    TripleMap triples;         // totals per (pred, node, succ)
    std::vector<std::uint64_t> per_credential_sent;
    bool replay_checked = false;
};

// One deterministic discrete-event epoch. Burned edges are excluded from
// route selection (data packets redraw; measurement routes are VRF-fixed).
SimResult run_epoch(const SimConfig& cfg, const std::set<std::uint64_t>& burned_edges = {});

// True node reliability from ground-truth counters.
std::vector<double> true_node_rho(const GroundTruth& truth, const Topology& topo);

// Merge the receiver-local totals into stage-4 tallies (t_total column).
void merge_receiver_totals(TallyMap& tallies, const TallyMap& receiver_totals);

// Merge simulator triple totals with post-epoch opened-measurement counts.
void merge_triples(TripleMap& into, const TripleMap& opened);

}  // namespace mixmeter::sim
