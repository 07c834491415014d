#include "mixmeter/tag_commitment.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mixmeter {
namespace {

constexpr std::uint8_t kBloomTag = 0x01;
constexpr std::uint8_t kMerkleTag = 0x02;
constexpr double kLn2 = 0.6931471805599453;

void require(bool ok) {
    if (!ok) throw std::invalid_argument("tag commitment: malformed encoding");
}

std::uint64_t double_bits(double d) {
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    return u;
}
double bits_double(std::uint64_t u) {
    double d;
    std::memcpy(&d, &u, 8);
    return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Bloom
// ---------------------------------------------------------------------------

BloomCommitment::BloomCommitment(std::uint64_t n_cap, double fp_rate) {
    if (n_cap == 0 || !(fp_rate > 0.0 && fp_rate < 1.0))
        throw std::invalid_argument("bloom: need n_cap > 0 and fp in (0,1)");
    n_cap_ = n_cap;
    fp_ = fp_rate;
    m_bits_ = std::uint64_t(std::ceil(-double(n_cap) * std::log(fp_rate) / (kLn2 * kLn2)));
    hashes_ = std::uint32_t(std::lround(double(m_bits_) / double(n_cap) * kLn2));
    if (hashes_ == 0) hashes_ = 1;
    bits_true_.assign((m_bits_ + 7) / 8, 0);
    bits_false_.assign((m_bits_ + 7) / 8, 0);
}

bool BloomCommitment::test(const Bytes& arr, const Hash256& tag) const {
    std::uint64_t h1 = get_u64be(tag.data());
    std::uint64_t h2 = get_u64be(tag.data() + 8) | 1;
    for (std::uint32_t i = 0; i < hashes_; ++i) {
        std::uint64_t pos = (h1 + i * h2) % m_bits_;
        if (!(arr[pos >> 3] & (1u << (pos & 7)))) return false;
    }
    return true;
}

void BloomCommitment::set(Bytes& arr, const Hash256& tag) {
    std::uint64_t h1 = get_u64be(tag.data());
    std::uint64_t h2 = get_u64be(tag.data() + 8) | 1;
    for (std::uint32_t i = 0; i < hashes_; ++i) {
        std::uint64_t pos = (h1 + i * h2) % m_bits_;
        arr[pos >> 3] |= std::uint8_t(1u << (pos & 7));
    }
}

void BloomCommitment::insert(const Hash256& tag, bool flag) {
    set(flag ? bits_true_ : bits_false_, tag);
    ++count_;
}

std::optional<bool> BloomCommitment::lookup(const Hash256& tag) const {
    bool in_false = test(bits_false_, tag);
    if (in_false) return false;
    if (test(bits_true_, tag)) return true;
    return std::nullopt;
}

double BloomCommitment::estimated_fp() const {
    double fill = 1.0 - std::exp(-double(hashes_) * double(count_) / double(m_bits_));
    return std::pow(fill, double(hashes_));
}

Bytes BloomCommitment::serialize() const {
    Bytes out;
    out.push_back(kBloomTag);
    append_u64be(out, n_cap_);
    append_u64be(out, double_bits(fp_));
    append_u64be(out, count_);
    append(out, bits_true_);
    append(out, bits_false_);
    return out;
}

std::unique_ptr<BloomCommitment> BloomCommitment::from_bytes(ByteView b) {
    require(b.size() > 25 && b[0] == kBloomTag);
    std::uint64_t n_cap = get_u64be(b.data() + 1);
    double fp = bits_double(get_u64be(b.data() + 9));
    require(n_cap > 0 && fp > 0.0 && fp < 1.0);
    auto out = std::make_unique<BloomCommitment>(n_cap, fp);
    out->count_ = get_u64be(b.data() + 17);
    std::size_t arr = out->bits_true_.size();
    require(b.size() == 25 + 2 * arr);
    std::memcpy(out->bits_true_.data(), b.data() + 25, arr);
    std::memcpy(out->bits_false_.data(), b.data() + 25 + arr, arr);
    return out;
}

// ---------------------------------------------------------------------------
// Merkle
// ---------------------------------------------------------------------------

Hash256 MerkleCommitment::leaf_hash(const Hash256& tag, bool flag) {
    std::uint8_t f = flag ? 1 : 0;
    return hash_derive2(label::merkle_leaf, {tag.data(), tag.size()}, {&f, 1});
}

void MerkleCommitment::insert(const Hash256& tag, bool flag) {
    index_.emplace(get_u64be(tag.data()), std::uint32_t(leaves_.size()));
    leaves_.push_back({tag, flag});
    dirty_ = true;
}

std::optional<bool> MerkleCommitment::lookup(const Hash256& tag) const {
    auto [lo, hi] = index_.equal_range(get_u64be(tag.data()));
    for (auto it = lo; it != hi; ++it) {
        const Leaf& leaf = leaves_[it->second];
        if (leaf.tag == tag) return leaf.flag;
    }
    return std::nullopt;
}

void MerkleCommitment::rebuild() const {
    std::size_t n = 1;
    while (n < std::max<std::size_t>(leaves_.size(), 1)) n *= 2;
    tree_.assign(2 * n, Hash256{});
    Hash256 empty = hash_derive(label::merkle_leaf, {});
    for (std::size_t i = 0; i < n; ++i)
        tree_[n + i] = i < leaves_.size() ? leaf_hash(leaves_[i].tag, leaves_[i].flag) : empty;
    for (std::size_t i = n; i-- > 1;)
        tree_[i] = hash_derive2(label::merkle_node, {tree_[2 * i].data(), kHashBytes},
                                {tree_[2 * i + 1].data(), kHashBytes});
    dirty_ = false;
}

Hash256 MerkleCommitment::root() const {
    if (dirty_) rebuild();
    return tree_[1];
}

MerkleProof MerkleCommitment::open(std::uint64_t index) const {
    if (index >= leaves_.size()) throw std::out_of_range("merkle: no such leaf");
    if (dirty_) rebuild();
    MerkleProof p;
    p.index = index;
    p.tag = leaves_[index].tag;
    p.flag = leaves_[index].flag;
    std::size_t n = tree_.size() / 2;
    for (std::size_t i = n + index; i > 1; i /= 2) p.siblings.push_back(tree_[i ^ 1]);
    return p;
}

bool MerkleCommitment::verify_proof(const Hash256& root, const MerkleProof& proof) {
    Hash256 h = leaf_hash(proof.tag, proof.flag);
    std::uint64_t idx = proof.index;
    for (const Hash256& sib : proof.siblings) {
        h = (idx & 1) ? hash_derive2(label::merkle_node, {sib.data(), kHashBytes},
                                     {h.data(), kHashBytes})
                      : hash_derive2(label::merkle_node, {h.data(), kHashBytes},
                                     {sib.data(), kHashBytes});
        idx >>= 1;
    }
    return h == root;
}

Bytes MerkleCommitment::serialize() const {
    Bytes out;
    out.push_back(kMerkleTag);
    append_u64be(out, leaves_.size());
    for (const Leaf& l : leaves_) {
        append(out, {l.tag.data(), l.tag.size()});
        out.push_back(l.flag ? 1 : 0);
    }
    return out;
}

std::unique_ptr<MerkleCommitment> MerkleCommitment::from_bytes(ByteView b) {
    require(b.size() >= 9 && b[0] == kMerkleTag);
    std::uint64_t n = get_u64be(b.data() + 1);
    require(b.size() == 9 + n * 33);
    auto out = std::make_unique<MerkleCommitment>();
    std::size_t off = 9;
    for (std::uint64_t i = 0; i < n; ++i) {
        Hash256 tag;
        std::memcpy(tag.data(), b.data() + off, kHashBytes);
        std::uint8_t flag = b[off + 32];
        require(flag <= 1);
        out->insert(tag, flag == 1);
        off += 33;
    }
    return out;
}

std::unique_ptr<TagCommitment> deserialize_commitment(ByteView b) {
    require(!b.empty());
    if (b[0] == kBloomTag) return BloomCommitment::from_bytes(b);
    if (b[0] == kMerkleTag) return MerkleCommitment::from_bytes(b);
    throw std::invalid_argument("tag commitment: unknown backend discriminator");
}

}  // namespace mixmeter
