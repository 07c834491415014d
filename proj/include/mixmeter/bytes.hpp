#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace mixmeter {

// k = 256: width of hashes, tags and lottery values.
inline constexpr std::size_t kHashBytes = 32;
using Hash256 = std::array<std::uint8_t, kHashBytes>;

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Fixed-capacity buffer for group elements / scalars (backends use 8 or 32 bytes).
struct GBytes {
    std::array<std::uint8_t, 32> v{};
    std::uint8_t n = 0;

    GBytes() = default;
    GBytes(ByteView b) : n(static_cast<std::uint8_t>(b.size())) {
        std::memcpy(v.data(), b.data(), b.size());
    }
    ByteView view() const { return {v.data(), n}; }
    std::uint8_t* data() { return v.data(); }
    const std::uint8_t* data() const { return v.data(); }
    std::size_t size() const { return n; }
    bool operator==(const GBytes& o) const {
        return n == o.n && std::memcmp(v.data(), o.v.data(), n) == 0;
    }
};

inline void append(Bytes& out, ByteView b) { out.insert(out.end(), b.begin(), b.end()); }

inline void put_u32be(std::uint8_t* p, std::uint32_t x) {
    p[0] = std::uint8_t(x >> 24); p[1] = std::uint8_t(x >> 16);
    p[2] = std::uint8_t(x >> 8);  p[3] = std::uint8_t(x);
}
inline std::uint32_t get_u32be(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}
inline void put_u64be(std::uint8_t* p, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) p[i] = std::uint8_t(x >> (56 - 8 * i));
}
inline std::uint64_t get_u64be(const std::uint8_t* p) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x = (x << 8) | p[i];
    return x;
}

inline void append_u32be(Bytes& out, std::uint32_t x) {
    std::uint8_t b[4]; put_u32be(b, x); out.insert(out.end(), b, b + 4);
}
inline void append_u64be(Bytes& out, std::uint64_t x) {
    std::uint8_t b[8]; put_u64be(b, x); out.insert(out.end(), b, b + 8);
}

std::string to_hex(ByteView b);

// Lexicographic compare of two 32-byte big-endian integers.
inline int cmp256(const Hash256& a, const Hash256& b) {
    return std::memcmp(a.data(), b.data(), kHashBytes);
}

// floor(r * m / 2^256) for a 256-bit big-endian r and a 64-bit multiplier.
std::uint64_t mul_shift256(const Hash256& r, std::uint64_t m);

// Big-endian 256-bit encoding of floor(f * 2^256) for f in [0,1); exact for the
// binary value the double holds.
Hash256 fraction_to_u256(double f);

Hash256 xor256(const Hash256& a, const Hash256& b);

}  // namespace mixmeter
