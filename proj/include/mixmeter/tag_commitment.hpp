#pragma once

#include <memory>
#include <optional>
#include <unordered_map>

#include "mixmeter/hashing.hpp"

namespace mixmeter {

// Binding, space-efficient per-epoch commitment to the (tag, integrity-flag)
// pairs a node processed. Lookups answer: not present / present with flag.
class TagCommitment {
public:
    virtual ~TagCommitment() = default;
    virtual void insert(const Hash256& tag, bool flag) = 0;
    virtual std::optional<bool> lookup(const Hash256& tag) const = 0;
    virtual std::uint64_t inserted() const = 0;
    virtual Bytes serialize() const = 0;
};

// Throws std::invalid_argument on malformed or truncated encodings.
std::unique_ptr<TagCommitment> deserialize_commitment(ByteView b);

// Bloom backend: two parallel filters, one per flag value. A tag appearing in
// both is reported flag-false (integrity failures must stay discarded even
// under false positives).
class BloomCommitment final : public TagCommitment {
public:
    BloomCommitment(std::uint64_t n_cap, double fp_rate);

    void insert(const Hash256& tag, bool flag) override;
    std::optional<bool> lookup(const Hash256& tag) const override;
    std::uint64_t inserted() const override { return count_; }
    Bytes serialize() const override;

    std::uint64_t bits() const { return m_bits_; }
    std::uint32_t hash_count() const { return hashes_; }
    std::uint64_t capacity() const { return n_cap_; }
    double target_fp() const { return fp_; }
    // Rough current false-positive estimate from the fill ratio.
    double estimated_fp() const;

    static std::unique_ptr<BloomCommitment> from_bytes(ByteView b);

private:
    std::uint64_t n_cap_ = 0;
    double fp_ = 0;
    std::uint64_t m_bits_ = 0;
    std::uint32_t hashes_ = 0;
    std::uint64_t count_ = 0;
    Bytes bits_true_, bits_false_;

    bool test(const Bytes& arr, const Hash256& tag) const;
    void set(Bytes& arr, const Hash256& tag);
};

struct MerkleProof {
    std::uint64_t index = 0;
    Hash256 tag{};
    bool flag = false;
    std::vector<Hash256> siblings;
};

class MerkleCommitment final : public TagCommitment {
public:
    MerkleCommitment() = default;

    void insert(const Hash256& tag, bool flag) override;
    std::optional<bool> lookup(const Hash256& tag) const override;
    std::uint64_t inserted() const override { return std::uint64_t(leaves_.size()); }
    Bytes serialize() const override;

    Hash256 root() const;
    MerkleProof open(std::uint64_t index) const;

    static bool verify_proof(const Hash256& root, const MerkleProof& proof);
    static std::unique_ptr<MerkleCommitment> from_bytes(ByteView b);

private:
    struct Leaf {
        Hash256 tag;
        bool flag;
    };
    std::vector<Leaf> leaves_;
    std::unordered_multimap<std::uint64_t, std::uint32_t> index_;  // tag prefix -> leaf
    mutable std::vector<Hash256> tree_;                        // cached level-order
    mutable bool dirty_ = true;

    void rebuild() const;
    static Hash256 leaf_hash(const Hash256& tag, bool flag);
};

}  // namespace mixmeter
