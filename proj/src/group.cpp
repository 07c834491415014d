#include "mixmeter/group.hpp"

#include <sodium.h>

#include <cassert>
#include <mutex>

namespace mixmeter {
namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
    });
}

// ---------------------------------------------------------------------------
// ristretto255 (libsodium)
// ---------------------------------------------------------------------------

class Ristretto255 final : public Group {
public:
    Ristretto255() { ensure_sodium(); }

    std::string_view name() const override { return "ristretto255"; }
    std::size_t element_size() const override { return crypto_core_ristretto255_BYTES; }
    std::size_t scalar_size() const override { return crypto_core_ristretto255_SCALARBYTES; }

    GBytes generator() const override {
        // g = the ristretto base point: scalarmult_base with scalar 1.
        GBytes one = scalar_from_u64(1);
        GBytes g;
        g.n = 32;
        crypto_scalarmult_ristretto255_base(g.data(), one.data());
        return g;
    }
    GBytes identity() const override {
        GBytes e;
        e.n = 32;  // all-zero is the canonical ristretto identity encoding
        return e;
    }
    bool is_identity(const GBytes& e) const override {
        if (e.n != 32) return false;
        for (int i = 0; i < 32; ++i)
            if (e.v[i]) return false;
        return true;
    }
    bool valid_element(const GBytes& e) const override {
        return e.n == 32 && crypto_core_ristretto255_is_valid_point(e.data()) == 1;
    }
    GBytes exp(const GBytes& base, const GBytes& s) const override {
        GBytes out;
        out.n = 32;
        if (is_identity(base) || scalar_is_zero(s)) return identity();
        if (crypto_scalarmult_ristretto255(out.data(), s.data(), base.data()) != 0)
            return identity();  // sodium signals an identity result via -1
        return out;
    }
    GBytes mul(const GBytes& a, const GBytes& b) const override {
        if (is_identity(a)) return b;
        if (is_identity(b)) return a;
        GBytes out;
        out.n = 32;
        if (crypto_core_ristretto255_add(out.data(), a.data(), b.data()) != 0)
            throw std::invalid_argument("ristretto255: invalid element in mul");
        return out;
    }
    GBytes inv(const GBytes& a) const override {
        if (is_identity(a)) return a;
        GBytes out;
        out.n = 32;
        if (crypto_core_ristretto255_sub(out.data(), identity().data(), a.data()) != 0)
            throw std::invalid_argument("ristretto255: invalid element in inv");
        return out;
    }

    bool valid_scalar(const GBytes& s) const override {
        if (s.n != 32) return false;
        // canonical iff reducing is a no-op
        std::uint8_t wide[64] = {0};
        std::memcpy(wide, s.data(), 32);
        std::uint8_t red[32];
        crypto_core_ristretto255_scalar_reduce(red, wide);
        return std::memcmp(red, s.data(), 32) == 0;
    }
    bool scalar_is_zero(const GBytes& s) const override {
        for (std::size_t i = 0; i < s.n; ++i)
            if (s.v[i]) return false;
        return true;
    }
    GBytes scalar_from_u64(std::uint64_t x) const override {
        GBytes s;
        s.n = 32;
        for (int i = 0; i < 8; ++i) s.v[i] = std::uint8_t(x >> (8 * i));  // little-endian
        return s;
    }
    GBytes scalar_pow2(unsigned bit) const override {
        assert(bit < 252);
        GBytes s;
        s.n = 32;
        s.v[bit / 8] = std::uint8_t(1u << (bit % 8));
        return s;
    }
    GBytes scalar_add(const GBytes& a, const GBytes& b) const override {
        GBytes out;
        out.n = 32;
        crypto_core_ristretto255_scalar_add(out.data(), a.data(), b.data());
        return out;
    }
    GBytes scalar_mul(const GBytes& a, const GBytes& b) const override {
        GBytes out;
        out.n = 32;
        crypto_core_ristretto255_scalar_mul(out.data(), a.data(), b.data());
        return out;
    }
    GBytes scalar_neg(const GBytes& a) const override {
        GBytes out;
        out.n = 32;
        crypto_core_ristretto255_scalar_negate(out.data(), a.data());
        return out;
    }
    bool scalar_invert(GBytes& out, const GBytes& s) const override {
        if (scalar_is_zero(s)) return false;
        out.n = 32;
        return crypto_core_ristretto255_scalar_invert(out.data(), s.data()) == 0;
    }
    GBytes scalar_from_hash(const Hash256& h) const override {
        std::uint8_t wide[64] = {0};
        std::memcpy(wide, h.data(), 32);
        GBytes s;
        s.n = 32;
        crypto_core_ristretto255_scalar_reduce(s.data(), wide);
        return s;
    }
};

// ---------------------------------------------------------------------------
// Shared modular arithmetic for the two 64-bit backends
// ---------------------------------------------------------------------------

inline std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return std::uint64_t((unsigned __int128)a * b % m);
}

std::uint64_t powmod64(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
    std::uint64_t r = 1;
    b %= m;
    while (e) {
        if (e & 1) r = mulmod64(r, b, m);
        b = mulmod64(b, b, m);
        e >>= 1;
    }
    return r;
}

// Inverse mod prime m via Fermat.
inline std::uint64_t invmod64(std::uint64_t a, std::uint64_t m) {
    return powmod64(a, m - 2, m);
}

GBytes enc_u64(std::uint64_t x) {
    GBytes out;
    out.n = 8;
    put_u64be(out.data(), x);
    return out;
}
std::uint64_t dec_u64(const GBytes& b) { return get_u64be(b.data()); }

// Common scalar-field implementation over a 64-bit prime order q.
class SmallScalarOps : public Group {
public:
    explicit SmallScalarOps(std::uint64_t order) : q_(order) {}

    std::size_t scalar_size() const override { return 8; }
    bool valid_scalar(const GBytes& s) const override { return s.n == 8 && dec_u64(s) < q_; }
    bool scalar_is_zero(const GBytes& s) const override { return dec_u64(s) == 0; }
    GBytes scalar_from_u64(std::uint64_t x) const override { return enc_u64(x % q_); }
    GBytes scalar_pow2(unsigned bit) const override {
        return enc_u64(powmod64(2, bit, q_));
    }
    GBytes scalar_add(const GBytes& a, const GBytes& b) const override {
        std::uint64_t x = dec_u64(a) % q_, y = dec_u64(b) % q_;
        std::uint64_t r = x + y;
        if (r >= q_ || r < x) r -= q_;
        return enc_u64(r);
    }
    GBytes scalar_mul(const GBytes& a, const GBytes& b) const override {
        return enc_u64(mulmod64(dec_u64(a) % q_, dec_u64(b) % q_, q_));
    }
    GBytes scalar_neg(const GBytes& a) const override {
        std::uint64_t x = dec_u64(a) % q_;
        return enc_u64(x == 0 ? 0 : q_ - x);
    }
    bool scalar_invert(GBytes& out, const GBytes& s) const override {
        std::uint64_t x = dec_u64(s) % q_;
        if (x == 0) return false;
        out = enc_u64(invmod64(x, q_));
        return true;
    }
    GBytes scalar_from_hash(const Hash256& h) const override {
        // 128-bit reduction keeps the mod-q bias below 2^-64.
        unsigned __int128 w = ((unsigned __int128)get_u64be(h.data()) << 64) |
                              get_u64be(h.data() + 8);
        return enc_u64(std::uint64_t(w % q_));
    }

protected:
    std::uint64_t q_;
};

// Order-q subgroup of Z_p^* for the safe prime p = 2q+1.
class TestGroup final : public SmallScalarOps {
public:
    static constexpr std::uint64_t kP = 4294967387ULL;   // 2q+1, prime
    static constexpr std::uint64_t kQ = 2147483693ULL;   // prime, ~2^31
    static constexpr std::uint64_t kG = 4;               // generator of the order-q subgroup

    TestGroup() : SmallScalarOps(kQ) {}

    std::string_view name() const override { return "testgroup"; }
    std::size_t element_size() const override { return 8; }

    GBytes generator() const override { return enc_u64(kG); }
    GBytes identity() const override { return enc_u64(1); }
    bool is_identity(const GBytes& e) const override { return dec_u64(e) == 1; }
    bool valid_element(const GBytes& e) const override {
        if (e.n != 8) return false;
        std::uint64_t x = dec_u64(e);
        if (x == 0 || x >= kP) return false;
        return powmod64(x, kQ, kP) == 1;  // subgroup membership
    }
    GBytes exp(const GBytes& base, const GBytes& s) const override {
        return enc_u64(powmod64(dec_u64(base), dec_u64(s) % kQ, kP));
    }
    GBytes mul(const GBytes& a, const GBytes& b) const override {
        return enc_u64(mulmod64(dec_u64(a), dec_u64(b), kP));
    }
    GBytes inv(const GBytes& a) const override {
        return enc_u64(invmod64(dec_u64(a), kP));
    }
};

// Crypto-lite: element == its discrete log mod the Mersenne prime 2^61-1.
class MockGroup final : public SmallScalarOps {
public:
    static constexpr std::uint64_t kQ = (1ULL << 61) - 1;

    MockGroup() : SmallScalarOps(kQ) {}

    std::string_view name() const override { return "mock"; }
    std::size_t element_size() const override { return 8; }

    GBytes generator() const override { return enc_u64(1); }
    GBytes identity() const override { return enc_u64(0); }
    bool is_identity(const GBytes& e) const override { return dec_u64(e) == 0; }
    bool valid_element(const GBytes& e) const override { return e.n == 8 && dec_u64(e) < kQ; }
    GBytes exp(const GBytes& base, const GBytes& s) const override {
        return enc_u64(mulmod64(dec_u64(base), dec_u64(s) % kQ, kQ));
    }
    GBytes mul(const GBytes& a, const GBytes& b) const override {
        std::uint64_t x = dec_u64(a), y = dec_u64(b);
        std::uint64_t r = x + y;
        if (r >= kQ) r -= kQ;
        return enc_u64(r);
    }
    GBytes inv(const GBytes& a) const override {
        std::uint64_t x = dec_u64(a);
        return enc_u64(x == 0 ? 0 : kQ - x);
    }
};

}  // namespace

const Group& group_instance(GroupKind kind) {
    static const Ristretto255 ristretto;
    static const TestGroup testgroup;
    static const MockGroup mock;
    switch (kind) {
        case GroupKind::RISTRETTO255: return ristretto;
        case GroupKind::TESTGROUP: return testgroup;
        case GroupKind::MOCK: return mock;
    }
    throw std::logic_error("unreachable");
}

}  // namespace mixmeter
