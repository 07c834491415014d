#pragma once

#include "mixmeter/group.hpp"
#include "mixmeter/hashing.hpp"

namespace mixmeter {

// Sigma protocol for equality of discrete logs, made non-interactive: a proof
// that log_g(G) == log_h(H). The challenge hashes the full statement tuple so
// a proof cannot be replayed against a different statement.
struct EqdlProof {
    GBytes c;  // challenge scalar
    GBytes s;  // response scalar
};

// rng_seed feeds the commitment scalar; pass fresh bytes per proof.
EqdlProof eqdl_prove(const Group& grp, const GBytes& x, const GBytes& g, const GBytes& G,
                     const GBytes& h, const GBytes& H, const Hash256& rng_seed);

bool eqdl_verify(const Group& grp, const EqdlProof& proof, const GBytes& g, const GBytes& G,
                 const GBytes& h, const GBytes& H);

}  // namespace mixmeter
