#include "mixmeter/topology.hpp"

#include "mixmeter/hashing.hpp"

namespace mixmeter {

Topology::Topology(std::uint32_t layers, std::uint32_t width, std::uint32_t gateways)
    : layers_(layers), width_(width), gateways_(gateways) {
    if (layers == 0 || width == 0 || gateways == 0)
        throw std::invalid_argument("topology: dimensions must be positive");
    weights_.resize(layers + 1);
    weights_[0].assign(gateways, 1);
    for (std::uint32_t l = 1; l <= layers; ++l) weights_[l].assign(width, 1);
}

std::uint32_t Topology::layer_of(NodeId id) const {
    if (id < gateways_) return 0;
    std::uint32_t mix = id - gateways_;
    if (mix >= layers_ * width_) throw std::out_of_range("topology: bad node id");
    return 1 + mix / width_;
}

NodeId Topology::mix_node(std::uint32_t layer, std::uint32_t index) const {
    if (layer < 1 || layer > layers_ || index >= width_)
        throw std::out_of_range("topology: bad layer/index");
    return gateways_ + (layer - 1) * width_ + index;
}

std::uint32_t Topology::index_in_layer(NodeId id) const {
    return is_gateway(id) ? id : (id - gateways_) % width_;
}

std::vector<NodeId> Topology::successors(NodeId id) const {
    std::uint32_t l = layer_of(id);
    std::vector<NodeId> out;
    if (l == layers_) {
        out.reserve(gateways_);
        for (NodeId g = 0; g < gateways_; ++g) out.push_back(g);
    } else {
        out.reserve(width_);
        for (std::uint32_t i = 0; i < width_; ++i) out.push_back(mix_node(l + 1, i));
    }
    return out;
}

std::vector<NodeId> Topology::predecessors(NodeId id) const {
    std::uint32_t l = layer_of(id);
    std::vector<NodeId> out;
    if (l == 0) {  // gateways receive from the last layer
        out.reserve(width_);
        for (std::uint32_t i = 0; i < width_; ++i) out.push_back(mix_node(layers_, i));
    } else if (l == 1) {
        out.reserve(gateways_);
        for (NodeId g = 0; g < gateways_; ++g) out.push_back(g);
    } else {
        out.reserve(width_);
        for (std::uint32_t i = 0; i < width_; ++i) out.push_back(mix_node(l - 1, i));
    }
    return out;
}

void Topology::set_layer_weights(std::uint32_t layer, std::vector<std::uint64_t> weights) {
    if (layer >= weights_.size() || weights.size() != weights_[layer].size())
        throw std::invalid_argument("topology: weight vector size mismatch");
    std::uint64_t total = 0;
    for (auto w : weights) total += w;
    if (total == 0) throw std::invalid_argument("topology: weights sum to zero");
    weights_[layer] = std::move(weights);
}

void Topology::generate_node_keys(const Group& grp, ByteView seed) {
    pub_keys_.assign(node_count(), {});
    sec_keys_.assign(node_count(), {});
    Bytes buf(seed.begin(), seed.end());
    buf.resize(seed.size() + 4);
    for (NodeId id = 0; id < node_count(); ++id) {
        put_u32be(buf.data() + seed.size(), id);
        GBytes x = grp.scalar_from_hash(hash_derive(label::keygen, buf));
        if (grp.scalar_is_zero(x)) x = grp.scalar_from_u64(1);
        sec_keys_[id] = x;
        pub_keys_[id] = grp.exp(grp.generator(), x);
    }
}

NodeId Topology::route_next(NodeId from, const Hash256& r) const {
    std::uint32_t from_layer = layer_of(from);
    std::uint32_t layer = from_layer == layers_ ? 0 : from_layer + 1;  // exit gateway draw
    const auto& w = weights_[layer];
    auto id_at = [&](std::size_t i) {
        return layer == 0 ? NodeId(i) : mix_node(layer, std::uint32_t(i));
    };

    std::uint64_t total = 0;
    if (burned_.empty()) {
        for (auto x : w) total += x;
    } else {
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!burned_.contains(edge_key(from, id_at(i)))) total += w[i];
    }
    if (total == 0) throw std::runtime_error("topology: node has no usable successors");

    // target = floor(r * total / 2^256): exact inverse-CDF position.
    std::uint64_t target = mul_shift256(r, total);
    std::uint64_t cum = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!burned_.empty() && burned_.contains(edge_key(from, id_at(i)))) continue;
        cum += w[i];
        if (target < cum) return id_at(i);
    }
    // Unreachable: target < total by construction.
    throw std::logic_error("topology: inverse CDF overflow");
}

}  // namespace mixmeter
