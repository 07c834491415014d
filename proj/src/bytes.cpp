#include "mixmeter/bytes.hpp"

#include <cmath>

namespace mixmeter {

std::string to_hex(ByteView b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (std::uint8_t c : b) {
        s.push_back(digits[c >> 4]);
        s.push_back(digits[c & 0xf]);
    }
    return s;
}

std::uint64_t mul_shift256(const Hash256& r, std::uint64_t m) {
    // Schoolbook multiply of four big-endian limbs by m, keep bits >= 256.
    unsigned __int128 carry = 0;
    for (int i = 3; i >= 0; --i) {
        std::uint64_t limb = get_u64be(r.data() + 8 * i);
        carry = (unsigned __int128)limb * m + (carry >> 64);
    }
    return std::uint64_t(carry >> 64);
}

Hash256 fraction_to_u256(double f) {
    Hash256 out{};
    if (f <= 0.0) return out;
    if (f >= 1.0) { out.fill(0xff); return out; }
    int e = 0;
    double mant = std::frexp(f, &e);           // f = mant * 2^e, mant in [0.5, 1)
    auto m = std::uint64_t(std::ldexp(mant, 53));  // 53-bit integer mantissa
    int shift = 256 + e - 53;                  // T = m * 2^shift
    if (shift <= -64) return out;
    // Place m as a 320-bit value shifted left by `shift`, then keep the top 256 bits.
    for (int bit = 0; bit < 64; ++bit) {
        if (!(m & (std::uint64_t(1) << bit))) continue;
        int pos = bit + shift;  // bit index from the LSB of the 256-bit result
        if (pos < 0 || pos >= 256) continue;
        out[31 - pos / 8] |= std::uint8_t(1u << (pos % 8));
    }
    return out;
}

Hash256 xor256(const Hash256& a, const Hash256& b) {
    Hash256 out;
    for (std::size_t i = 0; i < kHashBytes; ++i) out[i] = a[i] ^ b[i];
    return out;
}

}  // namespace mixmeter
