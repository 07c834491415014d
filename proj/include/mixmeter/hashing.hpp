#pragma once

#include "mixmeter/bytes.hpp"

namespace mixmeter {

// Numeric domain-separation labels. 0..6 are the protocol labels; the rest are
// internal domains so that every hash call carries exactly one label.
namespace label {
inline constexpr std::uint8_t pkt = 0;
inline constexpr std::uint8_t type = 1;
inline constexpr std::uint8_t exit = 2;
inline constexpr std::uint8_t rnd = 3;
inline constexpr std::uint8_t next = 4;
inline constexpr std::uint8_t bli = 5;
inline constexpr std::uint8_t tag = 6;
// internal
inline constexpr std::uint8_t eqdl = 7;     // Fiat-Shamir challenge
inline constexpr std::uint8_t mac = 8;      // onion layer authentication
inline constexpr std::uint8_t keygen = 9;   // seed -> scalar derivation
inline constexpr std::uint8_t beacon = 10;  // no-skipping challenge positions
inline constexpr std::uint8_t stream = 11;  // deterministic per-entity RNG keys
inline constexpr std::uint8_t inject = 12;  // free-rider packet seeds
inline constexpr std::uint8_t merkle_leaf = 13;
inline constexpr std::uint8_t merkle_node = 14;
}  // namespace label

// SHA-256(label || input).
Hash256 hash_derive(std::uint8_t lbl, ByteView input);

// Convenience: label || a || b [|| c], each part appended verbatim.
Hash256 hash_derive2(std::uint8_t lbl, ByteView a, ByteView b);
Hash256 hash_derive3(std::uint8_t lbl, ByteView a, ByteView b, ByteView c);

// 16-byte authenticator over data under a 32-byte key (HMAC-SHA256 truncated).
std::array<std::uint8_t, 16> mac16(const Hash256& key, ByteView data);

// ChaCha20 keystream, zero nonce; used for onion layers and fillers.
void keystream(const Hash256& key, std::uint8_t* out, std::size_t len);

}  // namespace mixmeter
