#pragma once

#include <optional>
#include <unordered_set>

#include "mixmeter/onion.hpp"
#include "mixmeter/vrf.hpp"

namespace mixmeter {

struct PacketParams {
    double p_lot = 0.01;
    Hash256 lottery_target{};   // floor(p_lot * 2^256), big-endian
    std::uint64_t nonce = 0;    // public epoch randomness
    std::uint32_t hops = 4;     // nu = L + 1
    unsigned ctr_bits = kDefaultCtrBits;
    unsigned shift = kVrfShift;  // l = l_ctr + 2
};

PacketParams make_packet_params(double p_lot, std::uint32_t layers, std::uint64_t nonce,
                                unsigned ctr_bits = kDefaultCtrBits);

inline bool lottery_hit(const Hash256& r_type, const PacketParams& p) {
    return cmp256(r_type, p.lottery_target) < 0;
}

// A credential registered with a gateway: the gateway holds the VRF key, the
// client the randomization key x (empty for gateway-side measurement work).
struct Credential {
    std::uint32_t id = 0;
    NodeId gateway = 0;
    VrfKeyPair vrf;
    GBytes client_x;      // scalar
    GBytes client_alpha;  // g^x
};

Credential make_credential(const Group& grp, std::uint32_t id, NodeId gateway, ByteView seed);

// Per-hop values shared by encoder, processors and openings verification.
struct ChainHop {
    NodeId node = 0;
    GBytes alpha;       // base element entering this hop
    Hash256 enc_key;    // onion layer key
    Hash256 next_rand;  // routing randomness
    Hash256 tag;
};

struct PacketChain {
    std::vector<ChainHop> hops;  // size nu + 1 (entry gateway .. exit gateway)
    std::vector<NodeId> route() const {
        std::vector<NodeId> r;
        r.reserve(hops.size());
        for (const auto& h : hops) r.push_back(h.node);
        return r;
    }
};

// Walks the blinding chain from r_pkt. For measurements pass no client key and
// the r_exit value (exit redrawn via r_{nu-1} xor r_exit); for data packets
// pass the client key and the chosen exit gateway.
PacketChain derive_chain(const Group& grp, const Topology& topo, const PacketParams& params,
                         NodeId entry_gateway, const GBytes* client_x, const Hash256& r_pkt,
                         const Hash256* r_exit, NodeId data_exit_gateway);

struct EncodedPacket {
    NodeId first_hop = 0;  // entry gateway
    GBytes alpha;
    Bytes onion;

    // creator-side bookkeeping; never on the wire
    bool is_measurement = false;
    std::uint64_t ctr = 0;
    std::vector<NodeId> route;
    std::vector<Hash256> tags;
    Hash256 r_pkt{}, r_type{}, r_exit{};
};

// Encode one packet for the credential's counter value; evaluates the three
// VRFs and runs the measurement lottery. Throws std::invalid_argument on a
// reused counter (tracked by the caller) or oversized payload.
EncodedPacket encode_packet(const Group& grp, const Topology& topo, const PacketParams& params,
                            const Credential& cred, std::uint64_t ctr, ByteView payload,
                            NodeId data_exit_gateway);

enum class HopStatus { OK, REPLAY, INTEGRITY_FAILED };

struct HopResult {
    HopStatus status = HopStatus::OK;
    Hash256 tag{};
    bool integrity = false;
    NodeId next_hop = kNoNode;        // kNoNode at the terminal hop
    GBytes next_alpha;
    Bytes next_onion;
    std::optional<Bytes> payload;     // terminal hop only
    bool routing_check_ok = true;     // embedded next hop matches Routing(n, r)
};

struct TagStoreHash {
    std::size_t operator()(const Hash256& t) const {
        std::size_t h;
        std::memcpy(&h, t.data(), sizeof(h));
        return h;
    }
};
using TagSet = std::unordered_set<Hash256, TagStoreHash>;

// One code path for every packet type: processing never learns whether the
// packet is a measurement.
HopResult process_packet(const Group& grp, const GBytes& node_secret, NodeId node,
                         const Topology& topo, const GBytes& alpha, ByteView onion_ct,
                         TagSet& seen_tags);

// Entry-gateway check that the per-packet randomization key was computed from
// this credential ("alpha_0 = alpha^r_pkt", or g^r_pkt for measurements).
bool gateway_check_alpha(const Group& grp, const GBytes& alpha0, const Credential& cred,
                         const Hash256& r_pkt, bool is_measurement);

// ---------------------------------------------------------------------------
// Measurement openings and proofs of no-skipping
// ---------------------------------------------------------------------------

struct MeasurementOpening {
    std::uint32_t credential_id = 0;
    std::uint32_t gateway = 0;
    std::uint64_t ctr = 0;
    VrfOutput pkt, type, exit;
};

Bytes serialize_opening(const MeasurementOpening& o);
std::optional<MeasurementOpening> deserialize_opening(const Group& grp, ByteView b);

// Opening built from the gateway-held credential; throws std::logic_error when
// ctr is not a measurement (NotAMeasurement).
MeasurementOpening open_measurement(const Group& grp, const PacketParams& params,
                                    const Credential& cred, std::uint64_t ctr);

enum class OpeningStatus { OK, NOT_A_MEASUREMENT, PROOF_INVALID };

struct ReconstructedPath {
    std::vector<NodeId> route;
    std::vector<Hash256> tags;
};

// Verifies the three VRF proofs and the lottery condition, then replays the
// whole packet computation from r_pkt / r_exit.
OpeningStatus verify_opening(const Group& grp, const Topology& topo, const PacketParams& params,
                             const GBytes& vk, const MeasurementOpening& o,
                             ReconstructedPath* out);

struct NonMeasurementProof {
    std::uint64_t ctr = 0;
    VrfOutput type;
};

Bytes serialize_non_measurement(const NonMeasurementProof& p);
std::optional<NonMeasurementProof> deserialize_non_measurement(const Group& grp, ByteView b);

// Throws std::logic_error when ctr is a measurement (IsAMeasurement).
NonMeasurementProof open_non_measurement(const Group& grp, const PacketParams& params,
                                         const Credential& cred, std::uint64_t ctr);

enum class NonMeasurementStatus { OK, IS_A_MEASUREMENT, PROOF_INVALID };

NonMeasurementStatus verify_non_measurement(const Group& grp, const PacketParams& params,
                                            const GBytes& vk, const NonMeasurementProof& p);

// v = ceil(-N ln(1 - alpha_ns)): openings needed to catch a hidden measurement
// among N claimed non-measurements with probability at least alpha_ns.
std::uint64_t no_skipping_sample_count(std::uint64_t n_non_measurements, double alpha_ns);

}  // namespace mixmeter
