#include "mixmeter/vrf.hpp"

namespace mixmeter {
namespace {

// A = 2^shift * nonce + 4*ctr + label  (mod group order)
GBytes exponent_offset(const Group& grp, std::uint64_t nonce, std::uint64_t ctr,
                       std::uint8_t lbl, unsigned shift) {
    GBytes a = grp.scalar_mul(grp.scalar_pow2(shift), grp.scalar_from_u64(nonce));
    return grp.scalar_add(a, grp.scalar_from_u64(4 * ctr + lbl));
}

Hash256 output_hash(const Group& grp, std::uint8_t lbl, const GBytes& vk, const GBytes& u) {
    return hash_derive3(lbl, vk.view(), grp.generator().view(), u.view());
}

}  // namespace

VrfKeyPair vrf_keygen(const Group& grp, ByteView rng_seed) {
    if (rng_seed.empty()) throw std::invalid_argument("vrf_keygen: empty seed");
    GBytes sk = grp.scalar_from_hash(hash_derive(label::keygen, rng_seed));
    if (grp.scalar_is_zero(sk)) sk = grp.scalar_from_u64(1);
    return {sk, grp.exp(grp.generator(), sk)};
}

GBytes vrf_statement_rhs(const Group& grp, const GBytes& u, std::uint64_t nonce,
                         std::uint64_t ctr, std::uint8_t lbl, unsigned shift) {
    GBytes a = exponent_offset(grp, nonce, ctr, lbl, shift);
    return grp.mul(grp.generator(), grp.exp(u, grp.scalar_neg(a)));
}

Hash256 vrf_eval_value(const Group& grp, const VrfKeyPair& kp, std::uint64_t nonce,
                       std::uint64_t ctr, std::uint8_t lbl, unsigned shift) {
    GBytes denom = grp.scalar_add(kp.sk, exponent_offset(grp, nonce, ctr, lbl, shift));
    GBytes inv;
    if (!grp.scalar_invert(inv, denom))
        throw std::domain_error("vrf_eval: denominator is zero mod group order");
    return output_hash(grp, lbl, kp.vk, grp.exp(grp.generator(), inv));
}

VrfOutput vrf_eval(const Group& grp, const VrfKeyPair& kp, std::uint64_t nonce,
                   std::uint64_t ctr, std::uint8_t lbl, unsigned shift) {
    GBytes denom = grp.scalar_add(kp.sk, exponent_offset(grp, nonce, ctr, lbl, shift));
    GBytes inv;
    if (!grp.scalar_invert(inv, denom))
        throw std::domain_error("vrf_eval: denominator is zero mod group order");
    GBytes u = grp.exp(grp.generator(), inv);

    // Proof: log_g(vk) == log_u(g * u^-A), both equal sk.
    GBytes w = vrf_statement_rhs(grp, u, nonce, ctr, lbl, shift);
    Bytes seed_input;
    append(seed_input, kp.sk.view());
    append(seed_input, u.view());
    append_u64be(seed_input, nonce);
    append_u64be(seed_input, ctr);
    seed_input.push_back(lbl);
    Hash256 proof_seed = hash_derive(label::keygen, seed_input);
    EqdlProof proof = eqdl_prove(grp, kp.sk, grp.generator(), kp.vk, u, w, proof_seed);

    return {output_hash(grp, lbl, kp.vk, u), u, proof};
}

bool vrf_verify(const Group& grp, const GBytes& vk, std::uint64_t nonce, std::uint64_t ctr,
                std::uint8_t lbl, const VrfOutput& out, unsigned shift) {
    if (!grp.valid_element(vk) || !grp.valid_element(out.u)) return false;
    if (grp.is_identity(out.u)) return false;
    if (output_hash(grp, lbl, vk, out.u) != out.r) return false;
    GBytes w = vrf_statement_rhs(grp, out.u, nonce, ctr, lbl, shift);
    return eqdl_verify(grp, out.proof, grp.generator(), vk, out.u, w);
}

}  // namespace mixmeter
