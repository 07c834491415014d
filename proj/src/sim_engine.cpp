#include "mixmeter/sim/engine.hpp"

#include <queue>

#include "mixmeter/packet.hpp"
#include "mixmeter/sim/rng.hpp"

namespace mixmeter::sim {
namespace {

constexpr double kMsToS = 1e-3;

// Precomputed online/offline timeline for OFFLINE_TOGGLE nodes.
struct OfflineSchedule {
    std::vector<double> boundaries;  // alternating online->offline transitions
    bool starts_online = true;

    bool online_at(double t) const {
        auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
        std::size_t idx = std::size_t(it - boundaries.begin());
        return (idx % 2 == 0) == starts_online;
    }
    // True when an online->offline transition falls in (t0, t1].
    bool goes_offline_in(double t0, double t1) const {
        auto lo = std::upper_bound(boundaries.begin(), boundaries.end(), t0);
        auto hi = std::upper_bound(boundaries.begin(), boundaries.end(), t1);
        for (auto it = lo; it != hi; ++it) {
            std::size_t idx = std::size_t(it - boundaries.begin());
            bool becomes_offline = (idx % 2 == 0) == starts_online;
            if (becomes_offline) return true;
        }
        return false;
    }
    // Earliest time >= t at which the node is online.
    double online_from(double t) const {
        if (online_at(t)) return t;
        auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
        return it == boundaries.end() ? boundaries.back() + 1.0 : *it;
    }
};

struct TokenBucket {
    double rate = 0;      // tokens per second
    double burst = 0;     // bucket capacity
    double tokens = 0;
    double last = 0;

    bool take(double t) {
        tokens = std::min(burst, tokens + (t - last) * rate);
        last = t;
        if (tokens < 1.0) return false;
        tokens -= 1.0;
        return true;
    }
};

struct NodeRuntime {
    NodeBehavior behavior;
    std::set<NodeId> targets_in;
    std::set<NodeId> targets_out;
    OfflineSchedule offline;
    TokenBucket bucket;
    bool capped = false;
    std::unique_ptr<TagCommitment> commitment;
    TagSet replay;
    Stream drops;   // random-drop / free-ride decision stream
    Stream inject;  // injected-packet content stream

    NodeRuntime() : drops(0), inject(0) {}
};

struct Packet {
    std::uint32_t credential = 0;
    std::int32_t log_idx = -1;  // measurement_log entry, -1 for non-measurements
    std::uint8_t hop = 0;        // index into route of the node it travels toward
    std::uint8_t route_len = 0;
    bool measurement = false;
    bool injected = false;
    float created = 0;
    std::array<NodeId, 8> route{};
    std::array<Hash256, 8> tags{};
};

struct Event {
    double time = 0;
    std::uint64_t seq = 0;
    std::int32_t packet_slot = -1;  // -1: client send event, aux = client id
    std::uint32_t aux = 0;

    bool operator>(const Event& o) const {
        return time != o.time ? time > o.time : seq > o.seq;
    }
};

struct CredentialState {
    Credential keys;
    std::uint64_t next_ctr = 0;
    std::vector<std::uint64_t> measurement_ctrs;
};

class Engine {
public:
    Engine(const SimConfig& cfg, const std::set<std::uint64_t>& burned)
        : cfg_(cfg), grp_(group_instance(cfg.crypto_mode)) {
        cfg_.validate();
        res_.crypto_mode = cfg.crypto_mode;
        params_ = make_packet_params(cfg.p_lot, cfg.layers, cfg.effective_nonce());
        res_.topo = Topology(cfg.layers, cfg.width, cfg.gateways);
        Bytes key_seed;
        append_u64be(key_seed, cfg.seed);
        res_.topo.generate_node_keys(grp_, key_seed);
        res_.topo.set_burned_edges(burned);
        setup_nodes();
        setup_credentials();
        res_.replay_checked = cfg.expected_packets() <= double(cfg.replay_exact_limit);
    }

    SimResult run() {
        for (std::uint32_t c = 0; c < cfg_.clients; ++c) {
            client_streams_.push_back(entity_stream(cfg_.seed, "client", c));
            schedule_client(c, client_streams_.back().next_exponential(1.0 / cfg_.client_rate));
        }
        while (!queue_.empty()) {
            Event ev = queue_.top();
            queue_.pop();
            ++res_.truth.events;
            if (ev.packet_slot < 0) handle_client_send(ev);
            else handle_arrival(ev);
        }
        finalize();
        return std::move(res_);
    }

private:
    SimConfig cfg_;
    const Group& grp_;
    PacketParams params_;
    SimResult res_;
    std::vector<NodeRuntime> nodes_;
    std::vector<CredentialState> credentials_;
    std::vector<Stream> client_streams_;
    std::vector<Packet> pool_;
    std::vector<std::uint32_t> free_slots_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    double latency_sum_ms_ = 0;

    void setup_nodes() {
        const std::uint32_t n = res_.topo.node_count();
        nodes_.resize(n);
        res_.truth.injected_by_node.assign(n, 0);
        const double total_rate = cfg_.client_rate * cfg_.clients;
        const double expected = cfg_.expected_packets();

        for (NodeId id = 0; id < n; ++id) {
            NodeRuntime& rt = nodes_[id];
            rt.drops = entity_stream(cfg_.seed, "node-drops", id);
            rt.inject = entity_stream(cfg_.seed, "node-inject", id);
            auto it = cfg_.behaviors.find(id);
            if (it != cfg_.behaviors.end()) rt.behavior = it->second;
            rt.targets_in.insert(rt.behavior.targets_in.begin(), rt.behavior.targets_in.end());
            rt.targets_out.insert(rt.behavior.targets_out.begin(),
                                  rt.behavior.targets_out.end());

            if (rt.behavior.kind == BehaviorKind::OFFLINE_TOGGLE) {
                Stream st = entity_stream(cfg_.seed, "node-offline", id);
                double horizon = cfg_.epoch_seconds + 120.0;
                double t = 0;
                rt.offline.starts_online = true;
                while (t < horizon) {
                    t += st.next_exponential(rt.behavior.mean_online_min * 60.0);
                    rt.offline.boundaries.push_back(t);
                    t += st.next_exponential(rt.behavior.mean_offline_min * 60.0);
                    rt.offline.boundaries.push_back(t);
                }
            }
            if (rt.behavior.kind == BehaviorKind::THROUGHPUT_CAP) {
                double mean_in = res_.topo.is_gateway(id) ? total_rate / cfg_.gateways
                                                          : total_rate / cfg_.width;
                rt.capped = true;
                rt.bucket.rate = rt.behavior.cap_fraction * mean_in;
                rt.bucket.burst = std::max(10.0, 0.5 * rt.bucket.rate);
                rt.bucket.tokens = rt.bucket.burst;
            }

            // Commitment sizing: mix nodes see ~1/W of traffic, gateways the
            // measurement exits plus their share of deliveries.
            double share = res_.topo.is_gateway(id) ? expected / cfg_.gateways
                                                    : expected / cfg_.width;
            std::uint64_t cap = std::uint64_t(share * 1.5) + 128;
            if (cfg_.commit_backend == CommitBackend::BLOOM)
                rt.commitment = std::make_unique<BloomCommitment>(cap, cfg_.commit_fp);
            else
                rt.commitment = std::make_unique<MerkleCommitment>();
        }
    }

    void setup_credentials() {
        credentials_.resize(cfg_.clients);
        res_.per_credential_sent.assign(cfg_.clients, 0);
        for (std::uint32_t c = 0; c < cfg_.clients; ++c) {
            Bytes seed;
            append_u64be(seed, cfg_.seed);
            append_u32be(seed, c);
            NodeId gw = NodeId(c % cfg_.gateways);
            credentials_[c].keys = make_credential(grp_, c, gw, seed);
        }
    }

    void schedule_client(std::uint32_t client, double t) {
        if (t >= cfg_.epoch_seconds) return;
        queue_.push({t, seq_++, -1, client});
    }

    std::uint32_t alloc_slot() {
        if (!free_slots_.empty()) {
            std::uint32_t s = free_slots_.back();
            free_slots_.pop_back();
            return s;
        }
        pool_.emplace_back();
        return std::uint32_t(pool_.size() - 1);
    }
    void free_slot(std::uint32_t s) { free_slots_.push_back(s); }

    void handle_client_send(const Event& ev) {
        std::uint32_t client = ev.aux;
        Stream& cs = client_streams_[client];
        create_packet(client, ev.time, cs);
        schedule_client(client, ev.time + cs.next_exponential(1.0 / cfg_.client_rate));
    }

    void create_packet(std::uint32_t client, double t, Stream& cs) {
        CredentialState& cred = credentials_[client];
        std::uint64_t ctr = cred.next_ctr++;
        ++res_.per_credential_sent[client];
        ++res_.truth.total_packets;

        Hash256 r_pkt = vrf_eval_value(grp_, cred.keys.vrf, params_.nonce, ctr, label::pkt);
        Hash256 r_type = vrf_eval_value(grp_, cred.keys.vrf, params_.nonce, ctr, label::type);
        bool meas = lottery_hit(r_type, params_);
        // drawn for every packet so the client stream advances identically in
        // every crypto mode (unused when the lottery fires)
        NodeId data_exit = NodeId(cs.uniform(cfg_.gateways));

        PacketChain chain;
        if (meas) {
            Hash256 r_exit =
                vrf_eval_value(grp_, cred.keys.vrf, params_.nonce, ctr, label::exit);
            chain = derive_chain(grp_, res_.topo, params_, cred.keys.gateway, nullptr, r_pkt,
                                 &r_exit, 0);
            cred.measurement_ctrs.push_back(ctr);
            ++res_.truth.total_measurements;
        } else {
            chain = derive_chain(grp_, res_.topo, params_, cred.keys.gateway,
                                 &cred.keys.client_x, r_pkt, nullptr, data_exit);
        }

        std::uint32_t slot = alloc_slot();
        Packet& p = pool_[slot];
        p.credential = client;
        p.hop = 0;
        p.route_len = std::uint8_t(chain.hops.size());
        p.measurement = meas;
        p.injected = false;
        p.log_idx = -1;
        p.created = float(t);
        for (std::size_t i = 0; i < chain.hops.size(); ++i) {
            p.route[i] = chain.hops[i].node;
            p.tags[i] = chain.hops[i].tag;
        }
        if (meas) {
            MeasurementEvent ev;
            ev.credential = client;
            ev.ctr = std::uint32_t(ctr);
            ev.route_len = p.route_len;
            ev.route = p.route;
            p.log_idx = std::int32_t(res_.truth.measurement_log.size());
            res_.truth.measurement_log.push_back(ev);
        }

        // Entry-gateway leg: client<->gateway is lossless; the gateway applies
        // its outgoing behaviors when forwarding into the first layer.
        dispatch_forward(slot, p.route[0], t);
    }

    NodeRuntime& rt(NodeId id) { return nodes_[id]; }

    // Outgoing-side handling at `node` for the packet in `slot`, which was
    // registered (or created) at time t.
    void dispatch_forward(std::uint32_t slot, NodeId node, double t) {
        Packet& p = pool_[slot];
        NodeRuntime& r = rt(node);
        const std::uint8_t next_hop = std::uint8_t(p.hop + 1);
        if (next_hop >= p.route_len) {  // exit gateway: nothing to forward
            free_slot(slot);
            return;
        }
        NodeId next = p.route[next_hop];

        double ready = t;
        if (r.behavior.kind == BehaviorKind::OFFLINE_TOGGLE)
            ready = r.offline.online_from(t);
        double fwd = ready + (res_.topo.is_gateway(node)
                                  ? cfg_.gateway_ms * kMsToS
                                  : r.drops.next_exponential(cfg_.mean_mix_delay_ms * kMsToS));

        bool dropped = false;
        if (r.behavior.kind == BehaviorKind::OFFLINE_TOGGLE &&
            r.offline.goes_offline_in(ready, fwd))
            dropped = true;  // packet was inside the node when it went dark
        if (!dropped && r.behavior.kind == BehaviorKind::RANDOM_DROP &&
            !r.behavior.drop_incoming && r.drops.chance(r.behavior.drop_rate))
            dropped = true;
        if (!dropped && r.behavior.kind == BehaviorKind::ADVERSARIAL &&
            r.targets_out.contains(next))
            dropped = true;

        bool substitute = false, add = false;
        if (r.behavior.kind == BehaviorKind::FREE_RIDER && !dropped) {
            // rates are shares of outgoing traffic; addition grows the output,
            // so its draw probability is a/(1 - s - a)
            double s_rate = r.behavior.substitute_rate;
            double total = s_rate + r.behavior.add_rate;
            double add_draw = total < 1.0 ? r.behavior.add_rate / (1.0 - total) : 1.0;
            substitute = r.drops.chance(s_rate);
            add = r.drops.chance(add_draw);
        }

        if (dropped || substitute) {
            if (!p.injected) ++res_.truth.edges[edge_key(node, next)].d_out;
            if (p.log_idx >= 0)
                res_.truth.measurement_log[p.log_idx].dropped_before_hop = std::int8_t(next_hop);
            free_slot(slot);
        } else {
            p.hop = next_hop;
            queue_.push({fwd + cfg_.link_ms * kMsToS, seq_++, std::int32_t(slot), 0});
        }
        if (substitute) inject_packet(node, fwd);
        if (add) inject_packet(node, fwd);
    }

    // Fabricate a route-conforming free-riding packet leaving `node` at time t.
    void inject_packet(NodeId node, double t) {
        NodeRuntime& r = rt(node);
        ++res_.truth.injected_by_node[node];
        std::uint32_t slot = alloc_slot();
        Packet& p = pool_[slot];
        p.credential = 0;
        p.log_idx = -1;
        p.measurement = false;
        p.injected = true;
        p.created = float(t);
        p.route[0] = node;
        std::uint8_t len = 1;
        NodeId cur = node;
        while (true) {  // walk the routing policy until the exit gateway
            cur = res_.topo.route_next(cur, r.inject.next_hash());
            p.route[len] = cur;
            p.tags[len] = r.inject.next_hash();
            ++len;
            if (res_.topo.is_gateway(cur)) break;
        }
        p.route_len = len;
        p.hop = 1;
        queue_.push({t + cfg_.link_ms * kMsToS, seq_++, std::int32_t(slot), 0});
    }

    void handle_arrival(const Event& ev) {
        std::uint32_t slot = std::uint32_t(ev.packet_slot);
        Packet& p = pool_[slot];
        NodeId node = p.route[p.hop];
        NodeId prev = p.route[p.hop - 1];
        NodeRuntime& r = rt(node);
        const double t = ev.time;
        const bool legit = !p.injected;

        // Incoming-side checks: a drop here lands on the incoming link and the
        // packet is never registered.
        bool in_drop = false;
        if (r.behavior.kind == BehaviorKind::OFFLINE_TOGGLE && !r.offline.online_at(t))
            in_drop = true;
        if (!in_drop && r.capped && !r.bucket.take(t)) in_drop = true;
        if (!in_drop && r.behavior.kind == BehaviorKind::RANDOM_DROP &&
            r.behavior.drop_incoming && r.drops.chance(r.behavior.drop_rate))
            in_drop = true;
        if (!in_drop && r.behavior.kind == BehaviorKind::ADVERSARIAL &&
            r.targets_in.contains(prev))
            in_drop = true;

        if (in_drop) {
            if (legit) ++res_.truth.edges[edge_key(prev, node)].d_in;
            if (p.log_idx >= 0)
                res_.truth.measurement_log[p.log_idx].dropped_before_hop = std::int8_t(p.hop);
            free_slot(slot);
            return;
        }

        // Register: replay check, tag commitment, receiver-local counters.
        const Hash256& tag = p.tags[p.hop];
        if (res_.replay_checked) {
            if (r.replay.contains(tag)) {
                ++res_.truth.replayed;
                free_slot(slot);
                return;
            }
            r.replay.insert(tag);
        }
        r.commitment->insert(tag, true);
        ++res_.receiver_totals[edge_key(prev, node)].t_total;
        if (legit) ++res_.truth.edges[edge_key(prev, node)].s;

        const bool terminal = p.hop + 1 >= p.route_len;
        if (!terminal)
            ++res_.triples[node].totals[edge_key(prev, p.route[p.hop + 1])];

        if (terminal) {
            if (legit && !p.measurement) {
                ++res_.truth.delivered_payloads;
                latency_sum_ms_ += (t - double(p.created)) * 1e3;
            }
            free_slot(slot);
            return;
        }
        dispatch_forward(slot, node, t);
    }

    void finalize() {
        res_.truth.mean_latency_ms = res_.truth.delivered_payloads
                                         ? latency_sum_ms_ / double(res_.truth.delivered_payloads)
                                         : 0.0;
        res_.truth.true_rho = true_node_rho(res_.truth, res_.topo);

        EpochTranscript& t = res_.transcript;
        t.epoch_nonce = params_.nonce;
        t.p_lot = cfg_.p_lot;
        t.layers = cfg_.layers;
        t.ctr_bits = params_.ctr_bits;
        Bytes nonce_bytes;
        append_u64be(nonce_bytes, params_.nonce);
        t.beacon_seed = get_u64be(hash_derive(label::beacon, nonce_bytes).data());
        t.no_skipping_alpha = cfg_.no_skipping_alpha;

        for (std::uint32_t c = 0; c < cfg_.clients; ++c) {
            const CredentialState& cred = credentials_[c];
            CredentialRecord rec;
            rec.credential_id = c;
            rec.gateway = cred.keys.gateway;
            rec.vk = cred.keys.vrf.vk;
            rec.announced = cred.next_ctr;
            t.credentials.push_back(rec);
            for (std::uint64_t ctr : cred.measurement_ctrs)
                t.openings.push_back(open_measurement(grp_, params_, cred.keys, ctr));
            if (cfg_.no_skipping_alpha > 0.0 && cred.next_ctr > 0)
                t.no_skipping.push_back(build_no_skipping_response(
                    grp_, params_, cred.keys, cred.next_ctr, cred.measurement_ctrs,
                    t.beacon_seed, cfg_.no_skipping_alpha));
        }
        for (NodeId id = 0; id < res_.topo.node_count(); ++id)
            t.commitments[id] = nodes_[id].commitment->serialize();
    }
};

}  // namespace

SimResult run_epoch(const SimConfig& cfg, const std::set<std::uint64_t>& burned_edges) {
    Engine engine(cfg, burned_edges);
    return engine.run();
}

std::vector<double> true_node_rho(const GroundTruth& truth, const Topology& topo) {
    std::vector<double> rho(topo.node_count(), 1.0);
    for (NodeId j = 0; j < topo.node_count(); ++j) {
        if (!topo.is_gateway(j)) {
            // the node-score equation with ground-truth blame fractions;
            // exact for mix nodes thanks to flow conservation
            double num = 0, den = 0;
            for (NodeId k : topo.successors(j)) {
                auto it = truth.edges.find(edge_key(j, k));
                if (it == truth.edges.end()) continue;
                num += double(it->second.s) + it->second.beta() * double(it->second.d());
            }
            for (NodeId i : topo.predecessors(j)) {
                auto it = truth.edges.find(edge_key(i, j));
                if (it == truth.edges.end()) continue;
                den += double(it->second.s) + it->second.beta() * double(it->second.d());
            }
            rho[j] = den > 0 ? num / den : 0.0;
            continue;
        }
        // Gateways: entry sends and exit receipts are disjoint duties, so the
        // equation's ratio would compare two unrelated volumes. True
        // reliability is the fraction of duties performed without a fault.
        double duties = 0, faults = 0;
        for (NodeId k : topo.successors(j)) {
            auto it = truth.edges.find(edge_key(j, k));
            if (it == truth.edges.end()) continue;
            duties += double(it->second.s + it->second.d());
            faults += double(it->second.d_out);
        }
        for (NodeId i : topo.predecessors(j)) {
            auto it = truth.edges.find(edge_key(i, j));
            if (it == truth.edges.end()) continue;
            duties += double(it->second.s + it->second.d());
            faults += double(it->second.d_in);
        }
        rho[j] = duties > 0 ? 1.0 - faults / duties : 0.0;
    }
    return rho;
}

void merge_receiver_totals(TallyMap& tallies, const TallyMap& receiver_totals) {
    for (const auto& [key, t] : receiver_totals) tallies[key].t_total = t.t_total;
}

void merge_triples(TripleMap& into, const TripleMap& opened) {
    for (const auto& [node, counters] : opened) {
        auto& dst = into[node];
        for (const auto& [key, count] : counters.opened_measurements)
            dst.opened_measurements[key] += count;
    }
}

}  // namespace mixmeter::sim
