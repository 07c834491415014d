#include "mixmeter/sim/config.hpp"

#include <stdexcept>

#include "nlohmann/json.hpp"

namespace mixmeter::sim {

using nlohmann::json;

void SimConfig::validate() const {
    if (layers == 0 || width == 0 || gateways == 0)
        throw std::invalid_argument("config: topology dimensions must be positive");
    if (epoch_seconds <= 0 || client_rate <= 0 || clients == 0)
        throw std::invalid_argument("config: rates and durations must be positive");
    if (!(p_lot > 0.0 && p_lot < 1.0))
        throw std::invalid_argument("config: p_lot must be in (0,1)");
    if (mean_mix_delay_ms < 0 || link_ms < 0 || gateway_ms < 0)
        throw std::invalid_argument("config: delays must be nonnegative");
    if (!(commit_fp > 0.0 && commit_fp < 1.0))
        throw std::invalid_argument("config: commitment fp must be in (0,1)");
    std::uint32_t nodes = gateways + layers * width;
    for (const auto& [id, b] : behaviors) {
        if (id >= nodes) throw std::invalid_argument("config: behavior on unknown node");
        if (b.drop_rate < 0 || b.drop_rate > 1 || b.substitute_rate < 0 ||
            b.add_rate < 0 || b.substitute_rate + b.add_rate >= 1.0)
            throw std::invalid_argument("config: behavior rates must be in [0,1)");
        if (b.kind == BehaviorKind::THROUGHPUT_CAP && b.cap_fraction <= 0)
            throw std::invalid_argument("config: cap fraction must be positive");
        for (NodeId t : b.targets_in)
            if (t >= nodes) throw std::invalid_argument("config: unknown attack target");
        for (NodeId t : b.targets_out)
            if (t >= nodes) throw std::invalid_argument("config: unknown attack target");
    }
}

std::string behavior_kind_name(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::RELIABLE: return "reliable";
        case BehaviorKind::OFFLINE_TOGGLE: return "offline_toggle";
        case BehaviorKind::THROUGHPUT_CAP: return "throughput_cap";
        case BehaviorKind::RANDOM_DROP: return "random_drop";
        case BehaviorKind::ADVERSARIAL: return "adversarial";
        case BehaviorKind::FREE_RIDER: return "free_rider";
    }
    return "reliable";
}

BehaviorKind behavior_kind_from_name(const std::string& s) {
    if (s == "reliable") return BehaviorKind::RELIABLE;
    if (s == "offline_toggle") return BehaviorKind::OFFLINE_TOGGLE;
    if (s == "throughput_cap") return BehaviorKind::THROUGHPUT_CAP;
    if (s == "random_drop") return BehaviorKind::RANDOM_DROP;
    if (s == "adversarial") return BehaviorKind::ADVERSARIAL;
    if (s == "free_rider") return BehaviorKind::FREE_RIDER;
    throw std::invalid_argument("config: unknown behavior kind: " + s);
}

SimConfig config_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.value("schema", 0) != 1) throw std::invalid_argument("config: schema must be 1");
    SimConfig cfg;
    const json& topo = j.at("topology");
    cfg.layers = topo.at("layers").get<std::uint32_t>();
    cfg.width = topo.at("width").get<std::uint32_t>();
    cfg.gateways = topo.at("gateways").get<std::uint32_t>();
    cfg.epoch_seconds = j.value("epoch_seconds", cfg.epoch_seconds);
    cfg.client_rate = j.value("client_rate", cfg.client_rate);
    cfg.clients = j.value("clients", cfg.clients);
    cfg.p_lot = j.value("p_lot", cfg.p_lot);
    if (j.contains("delays")) {
        const json& d = j["delays"];
        cfg.mean_mix_delay_ms = d.value("mix_ms", cfg.mean_mix_delay_ms);
        cfg.link_ms = d.value("link_ms", cfg.link_ms);
        cfg.gateway_ms = d.value("gateway_ms", cfg.gateway_ms);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.crypto_mode = group_kind_from_name(j.value("crypto_mode", std::string("lite")));
    if (j.contains("commitment")) {
        const json& c = j["commitment"];
        std::string backend = c.value("backend", std::string("bloom"));
        if (backend == "bloom") cfg.commit_backend = CommitBackend::BLOOM;
        else if (backend == "merkle") cfg.commit_backend = CommitBackend::MERKLE;
        else throw std::invalid_argument("config: unknown commitment backend");
        cfg.commit_fp = c.value("fp", cfg.commit_fp);
    }
    cfg.no_skipping_alpha = j.value("no_skipping_alpha", cfg.no_skipping_alpha);
    if (j.contains("nonce")) cfg.nonce = j["nonce"].get<std::uint64_t>();
    if (j.contains("behaviors")) {
        for (const json& b : j["behaviors"]) {
            NodeBehavior nb;
            nb.kind = behavior_kind_from_name(b.at("kind").get<std::string>());
            nb.mean_online_min = b.value("mean_online_min", nb.mean_online_min);
            nb.mean_offline_min = b.value("mean_offline_min", nb.mean_offline_min);
            nb.cap_fraction = b.value("cap_fraction", nb.cap_fraction);
            nb.drop_incoming = b.value("drop_incoming", nb.drop_incoming);
            nb.drop_rate = b.value("drop_rate", nb.drop_rate);
            nb.substitute_rate = b.value("substitute_rate", nb.substitute_rate);
            nb.add_rate = b.value("add_rate", nb.add_rate);
            if (b.contains("targets_in"))
                for (const json& t : b["targets_in"]) nb.targets_in.push_back(t.get<NodeId>());
            if (b.contains("targets_out"))
                for (const json& t : b["targets_out"]) nb.targets_out.push_back(t.get<NodeId>());
            cfg.behaviors[b.at("node").get<NodeId>()] = std::move(nb);
        }
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const SimConfig& cfg) {
    json j;
    j["schema"] = 1;
    j["topology"] = {{"layers", cfg.layers}, {"width", cfg.width}, {"gateways", cfg.gateways}};
    j["epoch_seconds"] = cfg.epoch_seconds;
    j["client_rate"] = cfg.client_rate;
    j["clients"] = cfg.clients;
    j["p_lot"] = cfg.p_lot;
    j["delays"] = {{"mix_ms", cfg.mean_mix_delay_ms},
                   {"link_ms", cfg.link_ms},
                   {"gateway_ms", cfg.gateway_ms}};
    j["seed"] = cfg.seed;
    j["crypto_mode"] = cfg.crypto_mode == GroupKind::MOCK
                           ? "lite"
                           : (cfg.crypto_mode == GroupKind::TESTGROUP ? "testgroup" : "real");
    j["commitment"] = {
        {"backend", cfg.commit_backend == CommitBackend::BLOOM ? "bloom" : "merkle"},
        {"fp", cfg.commit_fp}};
    j["no_skipping_alpha"] = cfg.no_skipping_alpha;
    if (cfg.nonce) j["nonce"] = *cfg.nonce;
    json arr = json::array();
    for (const auto& [id, b] : cfg.behaviors) {
        json e;
        e["node"] = id;
        e["kind"] = behavior_kind_name(b.kind);
        switch (b.kind) {
            case BehaviorKind::OFFLINE_TOGGLE:
                e["mean_online_min"] = b.mean_online_min;
                e["mean_offline_min"] = b.mean_offline_min;
                break;
            case BehaviorKind::THROUGHPUT_CAP:
                e["cap_fraction"] = b.cap_fraction;
                break;
            case BehaviorKind::RANDOM_DROP:
                e["drop_incoming"] = b.drop_incoming;
                e["drop_rate"] = b.drop_rate;
                break;
            case BehaviorKind::ADVERSARIAL:
                e["targets_in"] = b.targets_in;
                e["targets_out"] = b.targets_out;
                break;
            case BehaviorKind::FREE_RIDER:
                e["substitute_rate"] = b.substitute_rate;
                e["add_rate"] = b.add_rate;
                break;
            case BehaviorKind::RELIABLE:
                break;
        }
        arr.push_back(std::move(e));
    }
    if (!arr.empty()) j["behaviors"] = std::move(arr);
    return j.dump(2);
}

}  // namespace mixmeter::sim
