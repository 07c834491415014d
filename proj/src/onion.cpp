#include "mixmeter/onion.hpp"

#include <cstring>
#include <stdexcept>

namespace mixmeter::onion {
namespace {

constexpr std::size_t kBody = kWireSize - 16;  // ciphertext under the mac

void stream(const Hash256& key, std::uint8_t* out, std::size_t len) { keystream(key, out, len); }

}  // namespace

Bytes encode(const std::vector<Hash256>& hop_keys, const std::vector<NodeId>& route,
             ByteView payload) {
    const std::size_t hops = hop_keys.size();
    if (hops == 0 || hops > kMaxHops) throw std::invalid_argument("onion: bad hop count");
    if (route.size() + 1 != hops) throw std::invalid_argument("onion: route/keys mismatch");
    if (payload.size() > kPayloadMax) throw std::invalid_argument("onion: payload too large");

    const std::size_t last = hops - 1;
    // Filler accumulated by the first `last` peels; T[i] trails psi_i.
    std::vector<Bytes> fill(hops);
    std::vector<Bytes> ks(hops);
    for (std::size_t i = 0; i < hops; ++i) {
        ks[i].resize(kWireSize + 4);
        stream(hop_keys[i], ks[i].data(), ks[i].size());
    }
    for (std::size_t i = 0; i < last; ++i) {
        Bytes t = fill[i];
        for (std::size_t j = 0; j < t.size(); ++j) t[j] ^= ks[i][kBody - t.size() + j];
        t.insert(t.end(), ks[i].begin() + kBody, ks[i].begin() + kBody + kHopOverhead);
        fill[i + 1] = std::move(t);
    }

    // Innermost layer: TERMINAL || len || payload || zero padding, tail forced
    // to the accumulated filler so the peeled ciphertext matches bit for bit.
    const std::size_t tail = fill[last].size();
    Bytes body(kBody);
    put_u32be(body.data(), kTerminal);
    put_u32be(body.data() + 4, std::uint32_t(payload.size()));
    std::memcpy(body.data() + 8, payload.data(), payload.size());
    for (std::size_t j = 0; j < kBody - tail; ++j) body[j] ^= ks[last][j];
    std::memcpy(body.data() + kBody - tail, fill[last].data(), tail);

    auto seal = [&](std::size_t i, Bytes&& ct) {
        auto mac = mac16(hop_keys[i], ct);
        Bytes out(kWireSize);
        std::memcpy(out.data(), mac.data(), 16);
        std::memcpy(out.data() + 16, ct.data(), kBody);
        return out;
    };

    Bytes psi = seal(last, std::move(body));
    for (std::size_t i = last; i-- > 0;) {
        Bytes ct(kBody);
        put_u32be(ct.data(), route[i]);
        std::memcpy(ct.data() + 4, psi.data(), kWireSize - kHopOverhead);
        for (std::size_t j = 0; j < kBody; ++j) ct[j] ^= ks[i][j];
        psi = seal(i, std::move(ct));
    }
    return psi;
}

PeelResult peel(const Hash256& hop_key, ByteView ct) {
    PeelResult res;
    if (ct.size() != kWireSize) return res;
    auto mac = mac16(hop_key, ct.subspan(16));
    res.integrity = std::memcmp(mac.data(), ct.data(), 16) == 0;

    Bytes ks(kWireSize + 4);
    stream(hop_key, ks.data(), ks.size());
    Bytes pt(kBody);
    for (std::size_t j = 0; j < kBody; ++j) pt[j] = ct[16 + j] ^ ks[j];

    res.route_field = get_u32be(pt.data());
    if (res.route_field == kTerminal) {
        std::uint32_t len = get_u32be(pt.data() + 4);
        if (len <= kPayloadMax)
            res.payload = Bytes(pt.begin() + 8, pt.begin() + 8 + len);
        else
            res.integrity = false;
        return res;
    }
    res.next.resize(kWireSize);
    std::memcpy(res.next.data(), pt.data() + 4, kBody - 4);
    std::memcpy(res.next.data() + kBody - 4, ks.data() + kBody, kHopOverhead);
    return res;
}

}  // namespace mixmeter::onion
