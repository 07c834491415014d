#include "mixmeter/epoch.hpp"

#include <cmath>
#include <fstream>

#include "nlohmann/json.hpp"

namespace mixmeter {
namespace {

using nlohmann::json;

// splitmix64: the deterministic stream behind the public-randomness beacon.
std::uint64_t mix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t uniform_below(std::uint64_t& state, std::uint64_t n) {
    // rejection sampling keeps the draw unbiased
    std::uint64_t limit = n * ((~0ULL) / n);
    std::uint64_t x;
    do {
        x = mix64(state);
    } while (x >= limit);
    return x % n;
}

}  // namespace

PacketParams transcript_params(const EpochTranscript& t) {
    return make_packet_params(t.p_lot, t.layers, t.epoch_nonce, t.ctr_bits);
}

// ---------------------------------------------------------------------------
// Stage 4: tally
// ---------------------------------------------------------------------------

PostEpochResult run_post_epoch(const Group& grp, const EpochTranscript& t, const Topology& topo) {
    PostEpochResult res;
    PacketParams params = transcript_params(t);

    std::map<std::uint32_t, const CredentialRecord*> creds;
    for (const auto& c : t.credentials) creds[c.credential_id] = &c;

    std::map<NodeId, std::unique_ptr<TagCommitment>> commits;
    for (const auto& [node, bytes] : t.commitments)
        commits.emplace(node, deserialize_commitment(bytes));

    for (const auto& [gw, verdict] : check_no_skipping(grp, t))
        if (verdict == GatewayVerdict::CHEATING) res.cheating_gateways.insert(gw);
    for (const auto& [gw, verdict] : gateway_total_consistency(t))
        if (verdict == GatewayVerdict::CHEATING) res.cheating_gateways.insert(gw);

    enum Evidence : std::uint8_t { ABSENT, PRESENT, BAD_FLAG };

    for (const MeasurementOpening& opening : t.openings) {
        auto cit = creds.find(opening.credential_id);
        if (cit == creds.end() || cit->second->gateway != opening.gateway ||
            res.cheating_gateways.contains(opening.gateway)) {
            ++res.invalid_openings;
            continue;
        }
        ReconstructedPath path;
        if (verify_opening(grp, topo, params, cit->second->vk, opening, &path) !=
            OpeningStatus::OK) {
            ++res.invalid_openings;
            continue;
        }
        ++res.verified_openings;

        const std::size_t hops = path.route.size();
        std::vector<Evidence> ev(hops, ABSENT);
        ev[0] = PRESENT;  // the opening itself attests the gateway's send
        for (std::size_t i = 1; i < hops; ++i) {
            auto node_commit = commits.find(path.route[i]);
            if (node_commit == commits.end()) continue;  // no commitment: scores zero anyway
            auto flag = node_commit->second->lookup(path.tags[i]);
            if (flag.has_value()) ev[i] = *flag ? PRESENT : BAD_FLAG;
        }

        std::size_t first_absent = hops;
        bool bad_flag = false, hole = false;
        for (std::size_t i = 1; i < hops; ++i) {
            if (ev[i] == BAD_FLAG) {
                bad_flag = true;
                first_absent = i;
                break;
            }
            if (ev[i] == ABSENT && first_absent == hops) first_absent = i;
            if (ev[i] == PRESENT && first_absent < i) hole = true;
        }

        if (bad_flag || hole) {
            ++res.discarded_measurements;
            ++res.tallies[edge_key(path.route[first_absent - 1], path.route[first_absent])]
                  .discarded;
            continue;
        }
        for (std::size_t i = 0; i + 1 < first_absent; ++i)
            ++res.tallies[edge_key(path.route[i], path.route[i + 1])].s_star;
        if (first_absent < hops)
            ++res.tallies[edge_key(path.route[first_absent - 1], path.route[first_absent])]
                  .d_star;

        // Triple counters for the free-riding stage: packet received by the
        // middle node and addressed onward.
        for (std::size_t i = 1; i + 1 < first_absent; ++i)
            ++res.triples[path.route[i]]
                  .opened_measurements[edge_key(path.route[i - 1], path.route[i + 1])];
        if (first_absent < hops && first_absent >= 2)
            ++res.triples[path.route[first_absent - 1]].opened_measurements[edge_key(
                path.route[first_absent - 2], path.route[first_absent])];
    }
    return res;
}

// ---------------------------------------------------------------------------
// No-skipping and totals checks
// ---------------------------------------------------------------------------

std::vector<std::uint64_t> no_skipping_positions(std::uint64_t beacon_seed,
                                                 std::uint32_t credential_id,
                                                 std::uint64_t non_measurement_count,
                                                 std::uint64_t v) {
    std::vector<std::uint64_t> out;
    if (non_measurement_count == 0) return out;
    Bytes key;
    append_u64be(key, beacon_seed);
    append_u32be(key, credential_id);
    Hash256 h = hash_derive(label::beacon, key);
    std::uint64_t state = get_u64be(h.data());
    out.reserve(v);
    for (std::uint64_t i = 0; i < v; ++i)
        out.push_back(uniform_below(state, non_measurement_count));
    return out;
}

std::uint64_t non_measurement_ctr(const std::vector<std::uint64_t>& sorted_opened,
                                  std::uint64_t ordinal) {
    std::uint64_t ctr = ordinal;
    for (std::uint64_t m : sorted_opened) {
        if (m <= ctr) ++ctr;
        else break;
    }
    return ctr;
}

NoSkipResponse build_no_skipping_response(const Group& grp, const PacketParams& params,
                                          const Credential& cred, std::uint64_t announced,
                                          std::vector<std::uint64_t> opened_ctrs,
                                          std::uint64_t beacon_seed, double alpha_ns) {
    NoSkipResponse resp;
    resp.credential_id = cred.id;
    std::sort(opened_ctrs.begin(), opened_ctrs.end());
    std::uint64_t n_non = announced - opened_ctrs.size();
    std::uint64_t v = no_skipping_sample_count(n_non, alpha_ns);
    if (v == 0 || n_non == 0) return resp;
    for (std::uint64_t ord : no_skipping_positions(beacon_seed, cred.id, n_non, v)) {
        std::uint64_t ctr = non_measurement_ctr(opened_ctrs, ord);
        NonMeasurementProof p;
        p.ctr = ctr;
        p.type = vrf_eval(grp, cred.vrf, params.nonce, ctr, label::type, params.shift);
        resp.proofs.push_back(std::move(p));
    }
    return resp;
}

std::map<NodeId, GatewayVerdict> check_no_skipping(const Group& grp, const EpochTranscript& t) {
    std::map<NodeId, GatewayVerdict> verdicts;
    PacketParams params = transcript_params(t);
    for (const auto& c : t.credentials)
        if (!verdicts.contains(c.gateway)) verdicts[c.gateway] = GatewayVerdict::HONEST;
    if (t.no_skipping_alpha <= 0.0) return verdicts;  // vacuously honest

    std::map<std::uint32_t, std::vector<std::uint64_t>> opened;
    for (const auto& o : t.openings) opened[o.credential_id].push_back(o.ctr);
    std::map<std::uint32_t, const NoSkipResponse*> responses;
    for (const auto& r : t.no_skipping) responses[r.credential_id] = &r;

    for (const auto& cred : t.credentials) {
        auto& verdict = verdicts[cred.gateway];
        std::vector<std::uint64_t> meas = opened[cred.credential_id];
        std::sort(meas.begin(), meas.end());
        if (meas.size() > cred.announced) {
            verdict = GatewayVerdict::CHEATING;
            continue;
        }
        std::uint64_t n_non = cred.announced - meas.size();
        std::uint64_t v = no_skipping_sample_count(n_non, t.no_skipping_alpha);
        if (v == 0 || n_non == 0) continue;
        auto positions =
            no_skipping_positions(t.beacon_seed, cred.credential_id, n_non, v);

        auto rit = responses.find(cred.credential_id);
        if (rit == responses.end() || rit->second->proofs.size() != positions.size()) {
            verdict = GatewayVerdict::CHEATING;
            continue;
        }
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const NonMeasurementProof& proof = rit->second->proofs[i];
            if (proof.ctr != non_measurement_ctr(meas, positions[i]) ||
                verify_non_measurement(grp, params, cred.vk, proof) !=
                    NonMeasurementStatus::OK) {
                verdict = GatewayVerdict::CHEATING;
                break;
            }
        }
    }
    return verdicts;
}

std::map<NodeId, GatewayVerdict> gateway_total_consistency(const EpochTranscript& t) {
    std::map<NodeId, GatewayVerdict> verdicts;
    std::map<std::uint32_t, std::uint64_t> opened_count;
    for (const auto& o : t.openings) ++opened_count[o.credential_id];

    for (const auto& cred : t.credentials) {
        if (!verdicts.contains(cred.gateway)) verdicts[cred.gateway] = GatewayVerdict::HONEST;
        double mean = double(cred.announced) * t.p_lot;
        double sigma = std::sqrt(double(cred.announced) * t.p_lot * (1.0 - t.p_lot));
        double got = double(opened_count[cred.credential_id]);
        if (std::abs(got - mean) > 4.0 * sigma)
            verdicts[cred.gateway] = GatewayVerdict::CHEATING;
    }
    return verdicts;
}

// ---------------------------------------------------------------------------
// Persistence: length-prefixed records plus a JSON index
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint8_t kRecCredential = 1;
constexpr std::uint8_t kRecCommitment = 2;
constexpr std::uint8_t kRecOpening = 3;
constexpr std::uint8_t kRecNoSkip = 4;

void write_record(std::ofstream& f, std::uint8_t type, const Bytes& payload) {
    std::uint8_t hdr[5];
    hdr[0] = type;
    put_u32be(hdr + 1, std::uint32_t(payload.size()));
    f.write(reinterpret_cast<const char*>(hdr), 5);
    f.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
}

}  // namespace

void save_transcript(const EpochTranscript& t, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / "records.bin", std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_transcript: cannot open records.bin");

    std::uint64_t records = 0;
    for (const auto& c : t.credentials) {
        Bytes b;
        append_u32be(b, c.credential_id);
        append_u32be(b, c.gateway);
        append_u64be(b, c.announced);
        b.push_back(std::uint8_t(c.vk.size()));
        append(b, c.vk.view());
        write_record(f, kRecCredential, b);
        ++records;
    }
    for (const auto& [node, bytes] : t.commitments) {
        Bytes b;
        append_u32be(b, node);
        append(b, bytes);
        write_record(f, kRecCommitment, b);
        ++records;
    }
    for (const auto& o : t.openings) {
        write_record(f, kRecOpening, serialize_opening(o));
        ++records;
    }
    for (const auto& r : t.no_skipping) {
        Bytes b;
        append_u32be(b, r.credential_id);
        append_u32be(b, std::uint32_t(r.proofs.size()));
        for (const auto& p : r.proofs) append(b, serialize_non_measurement(p));
        write_record(f, kRecNoSkip, b);
        ++records;
    }

    json index = {
        {"schema", 1},
        {"epoch_nonce", t.epoch_nonce},
        {"p_lot", t.p_lot},
        {"layers", t.layers},
        {"ctr_bits", t.ctr_bits},
        {"beacon_seed", t.beacon_seed},
        {"no_skipping_alpha", t.no_skipping_alpha},
        {"records", records},
    };
    std::ofstream jf(dir / "index.json", std::ios::trunc);
    jf << index.dump(2) << "\n";
}

EpochTranscript load_transcript(const Group& grp, const std::filesystem::path& dir) {
    std::ifstream jf(dir / "index.json");
    if (!jf) throw std::runtime_error("load_transcript: missing index.json");
    json index = json::parse(jf);
    if (index.at("schema").get<int>() != 1)
        throw std::runtime_error("load_transcript: unsupported schema");

    EpochTranscript t;
    t.epoch_nonce = index.at("epoch_nonce").get<std::uint64_t>();
    t.p_lot = index.at("p_lot").get<double>();
    t.layers = index.at("layers").get<std::uint32_t>();
    t.ctr_bits = index.at("ctr_bits").get<unsigned>();
    t.beacon_seed = index.at("beacon_seed").get<std::uint64_t>();
    t.no_skipping_alpha = index.at("no_skipping_alpha").get<double>();

    std::ifstream f(dir / "records.bin", std::ios::binary);
    if (!f) throw std::runtime_error("load_transcript: missing records.bin");
    std::uint8_t hdr[5];
    while (f.read(reinterpret_cast<char*>(hdr), 5)) {
        std::uint32_t len = get_u32be(hdr + 1);
        Bytes payload(len);
        if (!f.read(reinterpret_cast<char*>(payload.data()), len))
            throw std::runtime_error("load_transcript: truncated record");
        ByteView b(payload);
        switch (hdr[0]) {
            case kRecCredential: {
                if (b.size() < 17) throw std::runtime_error("load_transcript: bad credential");
                CredentialRecord c;
                c.credential_id = get_u32be(b.data());
                c.gateway = get_u32be(b.data() + 4);
                c.announced = get_u64be(b.data() + 8);
                std::uint8_t vk_len = b[16];
                if (b.size() != 17u + vk_len)
                    throw std::runtime_error("load_transcript: bad credential");
                c.vk = GBytes(b.subspan(17, vk_len));
                t.credentials.push_back(c);
                break;
            }
            case kRecCommitment: {
                if (b.size() < 4) throw std::runtime_error("load_transcript: bad commitment");
                NodeId node = get_u32be(b.data());
                t.commitments[node] = Bytes(b.begin() + 4, b.end());
                break;
            }
            case kRecOpening: {
                auto o = deserialize_opening(grp, b);
                if (!o) throw std::runtime_error("load_transcript: bad opening");
                t.openings.push_back(*o);
                break;
            }
            case kRecNoSkip: {
                if (b.size() < 8) throw std::runtime_error("load_transcript: bad response");
                NoSkipResponse r;
                r.credential_id = get_u32be(b.data());
                std::uint32_t count = get_u32be(b.data() + 4);
                std::size_t item = 4 + kHashBytes + grp.element_size() + 2 * grp.scalar_size();
                if (b.size() != 8 + count * item)
                    throw std::runtime_error("load_transcript: bad response");
                for (std::uint32_t i = 0; i < count; ++i) {
                    auto p = deserialize_non_measurement(grp, b.subspan(8 + i * item, item));
                    if (!p) throw std::runtime_error("load_transcript: bad proof");
                    r.proofs.push_back(*p);
                }
                t.no_skipping.push_back(std::move(r));
                break;
            }
            default:
                throw std::runtime_error("load_transcript: unknown record type");
        }
    }
    return t;
}

}  // namespace mixmeter
