#include "mixmeter/eqdl.hpp"

namespace mixmeter {
namespace {

GBytes challenge(const Group& grp, const GBytes& g, const GBytes& G, const GBytes& h,
                 const GBytes& H, const GBytes& a1, const GBytes& a2) {
    Bytes buf;
    buf.reserve(6 * grp.element_size());
    append(buf, g.view());
    append(buf, G.view());
    append(buf, h.view());
    append(buf, H.view());
    append(buf, a1.view());
    append(buf, a2.view());
    return grp.scalar_from_hash(hash_derive(label::eqdl, buf));
}

}  // namespace

EqdlProof eqdl_prove(const Group& grp, const GBytes& x, const GBytes& g, const GBytes& G,
                     const GBytes& h, const GBytes& H, const Hash256& rng_seed) {
    GBytes t = grp.scalar_from_hash(rng_seed);
    if (grp.scalar_is_zero(t)) t = grp.scalar_from_u64(1);
    GBytes a1 = grp.exp(g, t);
    GBytes a2 = grp.exp(h, t);
    GBytes c = challenge(grp, g, G, h, H, a1, a2);
    // s = t + c*x
    GBytes s = grp.scalar_add(t, grp.scalar_mul(c, x));
    return {c, s};
}

bool eqdl_verify(const Group& grp, const EqdlProof& proof, const GBytes& g, const GBytes& G,
                 const GBytes& h, const GBytes& H) {
    if (!grp.valid_scalar(proof.c) || !grp.valid_scalar(proof.s)) return false;
    if (!grp.valid_element(g) || !grp.valid_element(G) || !grp.valid_element(h) ||
        !grp.valid_element(H))
        return false;
    GBytes neg_c = grp.scalar_neg(proof.c);
    // a1 = g^s * G^-c, a2 = h^s * H^-c
    GBytes a1 = grp.mul(grp.exp(g, proof.s), grp.exp(G, neg_c));
    GBytes a2 = grp.mul(grp.exp(h, proof.s), grp.exp(H, neg_c));
    return challenge(grp, g, G, h, H, a1, a2) == proof.c;
}

}  // namespace mixmeter
