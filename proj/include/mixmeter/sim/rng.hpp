#pragma once

#include <cmath>
#include <string_view>

#include "mixmeter/hashing.hpp"

namespace mixmeter::sim {

// Counter-based per-entity random stream (splitmix64 over a hashed key), so
// adding an entity never perturbs another entity's draws.
class Stream {
public:
    explicit Stream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // [0, 1), 53-bit resolution
    double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double next_exponential(double mean) {
        double u;
        do {
            u = next_unit();
        } while (u <= 0.0);
        return -mean * std::log(u);
    }

    std::uint64_t uniform(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t limit = n * ((~0ULL) / n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    bool chance(double p) { return next_unit() < p; }

    Hash256 next_hash() {
        Bytes b(16);
        put_u64be(b.data(), next_u64());
        put_u64be(b.data() + 8, next_u64());
        return hash_derive(label::stream, b);
    }

private:
    std::uint64_t state_;
};

inline Stream entity_stream(std::uint64_t master_seed, std::string_view role, std::uint64_t id) {
    Bytes b;
    append_u64be(b, master_seed);
    b.insert(b.end(), role.begin(), role.end());
    append_u64be(b, id);
    Hash256 h = hash_derive(label::stream, b);
    return Stream(get_u64be(h.data()));
}

}  // namespace mixmeter::sim
