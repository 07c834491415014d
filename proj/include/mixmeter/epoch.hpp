#pragma once

#include <filesystem>
#include <map>

#include "mixmeter/packet.hpp"
#include "mixmeter/tag_commitment.hpp"
#include "mixmeter/tally.hpp"

namespace mixmeter {

struct CredentialRecord {
    std::uint32_t credential_id = 0;
    NodeId gateway = 0;
    GBytes vk;
    std::uint64_t announced = 0;  // s_(c,g): packets sent in the epoch
};

struct NoSkipResponse {
    std::uint32_t credential_id = 0;
    std::vector<NonMeasurementProof> proofs;  // one per challenged position, in draw order
};

// Everything broadcast after an epoch ends. Stage 1: per-credential counts;
// stage 2: tag commitments; stage 3: measurement openings (and, on challenge,
// no-skipping responses); stage 4 is computed from this data by anyone.
struct EpochTranscript {
    std::uint64_t epoch_nonce = 0;
    double p_lot = 0.01;
    std::uint32_t layers = 3;
    unsigned ctr_bits = kDefaultCtrBits;
    std::vector<CredentialRecord> credentials;
    std::map<NodeId, Bytes> commitments;  // serialized, one per node
    std::vector<MeasurementOpening> openings;
    std::uint64_t beacon_seed = 0;        // public randomness for no-skipping draws
    double no_skipping_alpha = 0.0;       // 0 disables challenges
    std::vector<NoSkipResponse> no_skipping;
};

PacketParams transcript_params(const EpochTranscript& t);

void save_transcript(const EpochTranscript& t, const std::filesystem::path& dir);
EpochTranscript load_transcript(const Group& grp, const std::filesystem::path& dir);

struct PostEpochResult {
    TallyMap tallies;
    TripleMap triples;                   // opened-measurement triple counts
    std::uint64_t verified_openings = 0;
    std::uint64_t invalid_openings = 0;
    std::uint64_t discarded_measurements = 0;
    std::set<NodeId> cheating_gateways;  // excluded from the tallies
};

// Stage 4: verify openings, reconstruct paths and tags, and count per-edge
// transmitted/dropped samples against the broadcast commitments. Tallies use
// only broadcast data; receiver-local totals are merged by the caller.
PostEpochResult run_post_epoch(const Group& grp, const EpochTranscript& t, const Topology& topo);

enum class GatewayVerdict { HONEST, CHEATING };

// Draw v pseudorandom positions per credential among the claimed
// non-measurement counters and verify the gateway's responses.
std::map<NodeId, GatewayVerdict> check_no_skipping(const Group& grp, const EpochTranscript& t);

// Challenge positions for one credential; deterministic in the beacon.
std::vector<std::uint64_t> no_skipping_positions(std::uint64_t beacon_seed,
                                                 std::uint32_t credential_id,
                                                 std::uint64_t non_measurement_count,
                                                 std::uint64_t v);

// Maps an ordinal within the claimed non-measurement set to its counter value,
// skipping the sorted opened counters.
std::uint64_t non_measurement_ctr(const std::vector<std::uint64_t>& sorted_opened,
                                  std::uint64_t ordinal);

// Honest responder: answers every challenged position for the credential.
NoSkipResponse build_no_skipping_response(const Group& grp, const PacketParams& params,
                                          const Credential& cred, std::uint64_t announced,
                                          std::vector<std::uint64_t> opened_ctrs,
                                          std::uint64_t beacon_seed, double alpha_ns);

// Per-credential opened counts must sit inside a 4-sigma binomial band around
// announced * p_lot.
std::map<NodeId, GatewayVerdict> gateway_total_consistency(const EpochTranscript& t);

}  // namespace mixmeter
