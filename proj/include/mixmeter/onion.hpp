#pragma once

#include <optional>

#include "mixmeter/hashing.hpp"
#include "mixmeter/topology.hpp"

namespace mixmeter {

// Layered authenticated encryption with a constant wire size. Each hop strips
// a 16-byte authenticator and a 4-byte next-hop field and appends keystream
// filler, so the ciphertext length never changes along the path.
namespace onion {

inline constexpr std::size_t kPayloadMax = 1024;
inline constexpr std::size_t kPayloadSlot = 4 + kPayloadMax;  // length prefix + data
inline constexpr std::size_t kMaxHops = 7;                    // nu <= 6
inline constexpr std::size_t kHopOverhead = 20;               // mac(16) + route(4)
inline constexpr std::size_t kWireSize =
    16 + 4 + kPayloadSlot + kHopOverhead * (kMaxHops - 1);    // 1168
inline constexpr std::uint32_t kTerminal = 0xffffffffu;

// hop_keys[i] keys hop i; route[i] is the node the packet moves to after hop i
// (route.size() == hop_keys.size() - 1; the last hop parses the payload).
Bytes encode(const std::vector<Hash256>& hop_keys, const std::vector<NodeId>& route,
             ByteView payload);

struct PeelResult {
    bool integrity = false;
    std::uint32_t route_field = kTerminal;
    Bytes next;                    // next-hop ciphertext (kWireSize) when not terminal
    std::optional<Bytes> payload;  // set at the terminal hop
};

PeelResult peel(const Hash256& hop_key, ByteView ct);

}  // namespace onion
}  // namespace mixmeter
