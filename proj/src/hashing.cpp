#include "mixmeter/hashing.hpp"

#include <sodium.h>

namespace mixmeter {

Hash256 hash_derive(std::uint8_t lbl, ByteView input) {
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, &lbl, 1);
    crypto_hash_sha256_update(&st, input.data(), input.size());
    Hash256 out;
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

Hash256 hash_derive2(std::uint8_t lbl, ByteView a, ByteView b) {
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, &lbl, 1);
    crypto_hash_sha256_update(&st, a.data(), a.size());
    crypto_hash_sha256_update(&st, b.data(), b.size());
    Hash256 out;
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

Hash256 hash_derive3(std::uint8_t lbl, ByteView a, ByteView b, ByteView c) {
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, &lbl, 1);
    crypto_hash_sha256_update(&st, a.data(), a.size());
    crypto_hash_sha256_update(&st, b.data(), b.size());
    crypto_hash_sha256_update(&st, c.data(), c.size());
    Hash256 out;
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

std::array<std::uint8_t, 16> mac16(const Hash256& key, ByteView data) {
    std::uint8_t full[crypto_auth_hmacsha256_BYTES];
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    std::uint8_t lbl = label::mac;
    crypto_auth_hmacsha256_update(&st, &lbl, 1);
    crypto_auth_hmacsha256_update(&st, data.data(), data.size());
    crypto_auth_hmacsha256_final(&st, full);
    std::array<std::uint8_t, 16> out;
    std::memcpy(out.data(), full, 16);
    return out;
}

void keystream(const Hash256& key, std::uint8_t* out, std::size_t len) {
    static const std::uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
    crypto_stream_chacha20(out, len, nonce, key.data());
}

}  // namespace mixmeter
