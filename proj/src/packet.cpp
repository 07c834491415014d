#include "mixmeter/packet.hpp"

#include <cmath>

namespace mixmeter {
namespace {

GBytes reduce_hash(const Group& grp, const Hash256& h) { return grp.scalar_from_hash(h); }

Hash256 vrf_input_r(const Group& grp, const VrfKeyPair& kp, const PacketParams& p,
                    std::uint64_t ctr, std::uint8_t lbl) {
    return vrf_eval(grp, kp, p.nonce, ctr, lbl, p.shift).r;
}

}  // namespace

PacketParams make_packet_params(double p_lot, std::uint32_t layers, std::uint64_t nonce,
                                unsigned ctr_bits) {
    if (!(p_lot > 0.0 && p_lot < 1.0))
        throw std::invalid_argument("packet params: p_lot must be in (0,1)");
    PacketParams p;
    p.p_lot = p_lot;
    p.lottery_target = fraction_to_u256(p_lot);
    p.nonce = nonce;
    p.hops = layers + 1;
    p.ctr_bits = ctr_bits;
    p.shift = ctr_bits + 2;
    if (p.hops + 1 > onion::kMaxHops)
        throw std::invalid_argument("packet params: too many layers for the wire format");
    return p;
}

Credential make_credential(const Group& grp, std::uint32_t id, NodeId gateway, ByteView seed) {
    Credential c;
    c.id = id;
    c.gateway = gateway;
    Bytes buf(seed.begin(), seed.end());
    buf.push_back(0x01);
    c.vrf = vrf_keygen(grp, buf);
    buf.back() = 0x02;
    c.client_x = grp.scalar_from_hash(hash_derive(label::keygen, buf));
    if (grp.scalar_is_zero(c.client_x)) c.client_x = grp.scalar_from_u64(1);
    c.client_alpha = grp.exp(grp.generator(), c.client_x);
    return c;
}

PacketChain derive_chain(const Group& grp, const Topology& topo, const PacketParams& params,
                         NodeId entry_gateway, const GBytes* client_x, const Hash256& r_pkt,
                         const Hash256* r_exit, NodeId data_exit_gateway) {
    const std::uint32_t nu = params.hops;
    PacketChain chain;
    chain.hops.resize(nu + 1);

    // Cumulative exponent e_i = x * r_pkt * b_0 ... b_{i-1}; alpha_i = g^e_i,
    // s_i = y_i^e_i. x = 1 for measurements.
    GBytes e = reduce_hash(grp, r_pkt);
    if (client_x) e = grp.scalar_mul(e, *client_x);

    NodeId node = entry_gateway;
    for (std::uint32_t i = 0; i <= nu; ++i) {
        auto& hop = chain.hops[i];
        hop.node = node;
        hop.alpha = grp.exp(grp.generator(), e);
        GBytes s = grp.exp(topo.node_public_key(node), e);
        hop.enc_key = hash_derive(label::rnd, s.view());
        hop.next_rand = hash_derive(label::next, s.view());
        hop.tag = hash_derive(label::tag, s.view());
        GBytes blind = reduce_hash(grp, hash_derive(label::bli, s.view()));
        e = grp.scalar_mul(e, blind);

        if (i + 1 < nu) {
            node = topo.route_next(node, hop.next_rand);
        } else if (i + 1 == nu) {
            // exit gateway: redrawn for measurements, sender-chosen otherwise
            node = r_exit ? topo.route_next(node, xor256(hop.next_rand, *r_exit))
                          : data_exit_gateway;
        }
    }
    return chain;
}

EncodedPacket encode_packet(const Group& grp, const Topology& topo, const PacketParams& params,
                            const Credential& cred, std::uint64_t ctr, ByteView payload,
                            NodeId data_exit_gateway) {
    if (ctr >= (std::uint64_t(1) << params.ctr_bits))
        throw std::invalid_argument("encode: counter exceeds l_ctr bits");
    if (payload.size() > onion::kPayloadMax)
        throw std::invalid_argument("encode: payload too large");

    EncodedPacket out;
    out.ctr = ctr;
    out.r_pkt = vrf_input_r(grp, cred.vrf, params, ctr, label::pkt);
    out.r_type = vrf_input_r(grp, cred.vrf, params, ctr, label::type);
    out.r_exit = vrf_input_r(grp, cred.vrf, params, ctr, label::exit);
    out.is_measurement = lottery_hit(out.r_type, params);

    PacketChain chain =
        out.is_measurement
            ? derive_chain(grp, topo, params, cred.gateway, nullptr, out.r_pkt, &out.r_exit, 0)
            : derive_chain(grp, topo, params, cred.gateway, &cred.client_x, out.r_pkt, nullptr,
                           data_exit_gateway);

    out.first_hop = cred.gateway;
    out.alpha = chain.hops[0].alpha;
    out.route = chain.route();
    out.tags.reserve(chain.hops.size());
    for (const auto& h : chain.hops) out.tags.push_back(h.tag);

    std::vector<Hash256> keys;
    keys.reserve(chain.hops.size());
    for (const auto& h : chain.hops) keys.push_back(h.enc_key);
    std::vector<NodeId> fwd(out.route.begin() + 1, out.route.end());
    out.onion = onion::encode(keys, fwd, out.is_measurement ? ByteView{} : payload);
    return out;
}

HopResult process_packet(const Group& grp, const GBytes& node_secret, NodeId node,
                         const Topology& topo, const GBytes& alpha, ByteView onion_ct,
                         TagSet& seen_tags) {
    HopResult res;
    GBytes s = grp.exp(alpha, node_secret);
    res.tag = hash_derive(label::tag, s.view());
    if (seen_tags.contains(res.tag)) {
        res.status = HopStatus::REPLAY;
        return res;
    }

    Hash256 enc_key = hash_derive(label::rnd, s.view());
    auto peeled = onion::peel(enc_key, onion_ct);
    res.integrity = peeled.integrity;
    seen_tags.insert(res.tag);
    if (!peeled.integrity) {
        res.status = HopStatus::INTEGRITY_FAILED;
        return res;
    }

    if (peeled.route_field == onion::kTerminal) {
        res.next_hop = kNoNode;
        res.payload = std::move(peeled.payload);
        return res;
    }

    res.next_hop = peeled.route_field;
    res.next_onion = std::move(peeled.next);
    GBytes blind = grp.scalar_from_hash(hash_derive(label::bli, s.view()));
    res.next_alpha = grp.exp(alpha, blind);

    // Randomized routing check; skipped when the next hop is the exit gateway.
    Hash256 r = hash_derive(label::next, s.view());
    if (topo.layer_of(node) < topo.layers())
        res.routing_check_ok = topo.route_next(node, r) == res.next_hop;
    return res;
}

bool gateway_check_alpha(const Group& grp, const GBytes& alpha0, const Credential& cred,
                         const Hash256& r_pkt, bool is_measurement) {
    GBytes e = grp.scalar_from_hash(r_pkt);
    GBytes base = is_measurement ? grp.generator() : cred.client_alpha;
    return grp.exp(base, e) == alpha0;
}

// ---------------------------------------------------------------------------

namespace {

void append_vrf_output(Bytes& out, const VrfOutput& v) {
    append(out, {v.r.data(), v.r.size()});
    append(out, v.u.view());
    append(out, v.proof.c.view());
    append(out, v.proof.s.view());
}

bool read_vrf_output(const Group& grp, ByteView b, std::size_t& off, VrfOutput& v) {
    const std::size_t es = grp.element_size(), ss = grp.scalar_size();
    if (off + kHashBytes + es + 2 * ss > b.size()) return false;
    std::memcpy(v.r.data(), b.data() + off, kHashBytes);
    off += kHashBytes;
    v.u = GBytes(b.subspan(off, es));
    off += es;
    v.proof.c = GBytes(b.subspan(off, ss));
    off += ss;
    v.proof.s = GBytes(b.subspan(off, ss));
    off += ss;
    return true;
}

}  // namespace

Bytes serialize_opening(const MeasurementOpening& o) {
    Bytes out;
    append_u32be(out, o.ctr > 0xffffffffu ? 0xffffffffu : std::uint32_t(o.ctr));
    append_u32be(out, o.gateway);
    append_u32be(out, o.credential_id);
    append_vrf_output(out, o.pkt);
    append_vrf_output(out, o.type);
    append_vrf_output(out, o.exit);
    return out;
}

std::optional<MeasurementOpening> deserialize_opening(const Group& grp, ByteView b) {
    MeasurementOpening o;
    if (b.size() < 12) return std::nullopt;
    o.ctr = get_u32be(b.data());
    o.gateway = get_u32be(b.data() + 4);
    o.credential_id = get_u32be(b.data() + 8);
    std::size_t off = 12;
    if (!read_vrf_output(grp, b, off, o.pkt)) return std::nullopt;
    if (!read_vrf_output(grp, b, off, o.type)) return std::nullopt;
    if (!read_vrf_output(grp, b, off, o.exit)) return std::nullopt;
    if (off != b.size()) return std::nullopt;
    return o;
}

MeasurementOpening open_measurement(const Group& grp, const PacketParams& params,
                                    const Credential& cred, std::uint64_t ctr) {
    MeasurementOpening o;
    o.credential_id = cred.id;
    o.gateway = cred.gateway;
    o.ctr = ctr;
    o.pkt = vrf_eval(grp, cred.vrf, params.nonce, ctr, label::pkt, params.shift);
    o.type = vrf_eval(grp, cred.vrf, params.nonce, ctr, label::type, params.shift);
    o.exit = vrf_eval(grp, cred.vrf, params.nonce, ctr, label::exit, params.shift);
    if (!lottery_hit(o.type.r, params))
        throw std::logic_error("open_measurement: counter is not a measurement");
    return o;
}

OpeningStatus verify_opening(const Group& grp, const Topology& topo, const PacketParams& params,
                             const GBytes& vk, const MeasurementOpening& o,
                             ReconstructedPath* out) {
    if (!vrf_verify(grp, vk, params.nonce, o.ctr, label::pkt, o.pkt, params.shift) ||
        !vrf_verify(grp, vk, params.nonce, o.ctr, label::type, o.type, params.shift) ||
        !vrf_verify(grp, vk, params.nonce, o.ctr, label::exit, o.exit, params.shift))
        return OpeningStatus::PROOF_INVALID;
    if (!lottery_hit(o.type.r, params)) return OpeningStatus::NOT_A_MEASUREMENT;
    if (out) {
        PacketChain chain =
            derive_chain(grp, topo, params, o.gateway, nullptr, o.pkt.r, &o.exit.r, 0);
        out->route = chain.route();
        out->tags.clear();
        out->tags.reserve(chain.hops.size());
        for (const auto& h : chain.hops) out->tags.push_back(h.tag);
    }
    return OpeningStatus::OK;
}

Bytes serialize_non_measurement(const NonMeasurementProof& p) {
    Bytes out;
    append_u32be(out, p.ctr > 0xffffffffu ? 0xffffffffu : std::uint32_t(p.ctr));
    append_vrf_output(out, p.type);
    return out;
}

std::optional<NonMeasurementProof> deserialize_non_measurement(const Group& grp, ByteView b) {
    if (b.size() < 4) return std::nullopt;
    NonMeasurementProof p;
    p.ctr = get_u32be(b.data());
    std::size_t off = 4;
    if (!read_vrf_output(grp, b, off, p.type)) return std::nullopt;
    if (off != b.size()) return std::nullopt;
    return p;
}

NonMeasurementProof open_non_measurement(const Group& grp, const PacketParams& params,
                                         const Credential& cred, std::uint64_t ctr) {
    NonMeasurementProof p;
    p.ctr = ctr;
    p.type = vrf_eval(grp, cred.vrf, params.nonce, ctr, label::type, params.shift);
    if (lottery_hit(p.type.r, params))
        throw std::logic_error("open_non_measurement: counter is a measurement");
    return p;
}

NonMeasurementStatus verify_non_measurement(const Group& grp, const PacketParams& params,
                                            const GBytes& vk, const NonMeasurementProof& p) {
    if (!vrf_verify(grp, vk, params.nonce, p.ctr, label::type, p.type, params.shift))
        return NonMeasurementStatus::PROOF_INVALID;
    if (lottery_hit(p.type.r, params)) return NonMeasurementStatus::IS_A_MEASUREMENT;
    return NonMeasurementStatus::OK;
}

std::uint64_t no_skipping_sample_count(std::uint64_t n_non_measurements, double alpha_ns) {
    if (!(alpha_ns >= 0.0 && alpha_ns < 1.0))
        throw std::invalid_argument("no_skipping_sample_count: alpha_ns must be in [0,1)");
    double v = -double(n_non_measurements) * std::log1p(-alpha_ns);
    return std::uint64_t(std::ceil(v));
}

}  // namespace mixmeter
