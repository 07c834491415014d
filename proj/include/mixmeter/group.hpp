#pragma once

#include <memory>
#include <stdexcept>
#include <string_view>

#include "mixmeter/bytes.hpp"

namespace mixmeter {

// Prime-order group with fixed-width canonical encodings. Elements and scalars
// travel as opaque byte strings; all scalar arithmetic is mod the group order.
//
// Backends:
//   ristretto255  - production group (libsodium), 32-byte encodings
//   testgroup     - order-q subgroup of Z_p^*, q ~ 2^31; for exhaustive tests
//   mock          - crypto-lite stand-in: an element is represented by its own
//                   discrete log mod a 61-bit prime, exponentiation is mulmod.
//                   Preserves the full protocol algebra at simulation speed.
class Group {
public:
    virtual ~Group() = default;

    virtual std::string_view name() const = 0;
    virtual std::size_t element_size() const = 0;
    virtual std::size_t scalar_size() const = 0;

    virtual GBytes generator() const = 0;
    virtual GBytes identity() const = 0;
    virtual bool is_identity(const GBytes& e) const = 0;
    virtual bool valid_element(const GBytes& e) const = 0;
    // base^s; identity results are returned as the canonical identity encoding.
    virtual GBytes exp(const GBytes& base, const GBytes& s) const = 0;
    virtual GBytes mul(const GBytes& a, const GBytes& b) const = 0;
    virtual GBytes inv(const GBytes& a) const = 0;

    virtual bool valid_scalar(const GBytes& s) const = 0;
    virtual bool scalar_is_zero(const GBytes& s) const = 0;
    virtual GBytes scalar_from_u64(std::uint64_t x) const = 0;
    virtual GBytes scalar_pow2(unsigned bit) const = 0;
    virtual GBytes scalar_add(const GBytes& a, const GBytes& b) const = 0;
    virtual GBytes scalar_mul(const GBytes& a, const GBytes& b) const = 0;
    virtual GBytes scalar_neg(const GBytes& a) const = 0;
    // false iff s == 0.
    virtual bool scalar_invert(GBytes& out, const GBytes& s) const = 0;
    // Uniform-looking scalar from a 32-byte hash (reduced mod order).
    virtual GBytes scalar_from_hash(const Hash256& h) const = 0;
};

enum class GroupKind { RISTRETTO255, TESTGROUP, MOCK };

const Group& group_instance(GroupKind kind);

inline GroupKind group_kind_from_name(std::string_view s) {
    if (s == "ristretto255" || s == "real") return GroupKind::RISTRETTO255;
    if (s == "testgroup") return GroupKind::TESTGROUP;
    if (s == "mock" || s == "lite") return GroupKind::MOCK;
    throw std::invalid_argument("unknown group backend: " + std::string(s));
}

}  // namespace mixmeter
