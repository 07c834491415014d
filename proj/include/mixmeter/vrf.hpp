#pragma once

#include "mixmeter/eqdl.hpp"

namespace mixmeter {

struct VrfKeyPair {
    GBytes sk;  // nonzero scalar
    GBytes vk;  // g^sk
};

// Evaluation of the inverse-exponent VRF on (nonce, ctr, label):
//   u = g^(1 / (sk + 2^l*nonce + 4*ctr + label)),  r = H_label(vk, g, u),
// plus a proof that u is consistent with vk. Labels 0..2 and the 4*ctr packing
// keep (ctr, label) pairs injective in the exponent.
struct VrfOutput {
    Hash256 r;
    GBytes u;
    EqdlProof proof;
};

inline constexpr unsigned kDefaultCtrBits = 32;       // l_ctr
inline constexpr unsigned kVrfShift = kDefaultCtrBits + 2;  // l = l_ctr + 2

// Deterministic for a fixed seed.
VrfKeyPair vrf_keygen(const Group& grp, ByteView rng_seed);

// Throws std::domain_error when the exponent denominator vanishes mod the
// group order (DenominatorZero); unreachable by chance on the real group.
VrfOutput vrf_eval(const Group& grp, const VrfKeyPair& kp, std::uint64_t nonce,
                   std::uint64_t ctr, std::uint8_t lbl, unsigned shift = kVrfShift);

// Output value only, skipping proof generation; bitwise equal to vrf_eval's r.
Hash256 vrf_eval_value(const Group& grp, const VrfKeyPair& kp, std::uint64_t nonce,
                       std::uint64_t ctr, std::uint8_t lbl, unsigned shift = kVrfShift);

// Never throws; malformed encodings verify false.
bool vrf_verify(const Group& grp, const GBytes& vk, std::uint64_t nonce, std::uint64_t ctr,
                std::uint8_t lbl, const VrfOutput& out, unsigned shift = kVrfShift);

// The statement element w = g * u^-(2^l*nonce + 4*ctr + label); exposed for
// size accounting and tests.
GBytes vrf_statement_rhs(const Group& grp, const GBytes& u, std::uint64_t nonce,
                         std::uint64_t ctr, std::uint8_t lbl, unsigned shift);

}  // namespace mixmeter
