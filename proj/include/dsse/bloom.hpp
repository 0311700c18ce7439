#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "dsse/bytes.hpp"

namespace dsse {

/// Sizing inputs: k = ceil(-log2 p), m = ceil(n * k / ln 2).
struct BloomParams {
    double target_fp = 0x1p-30;
    std::uint64_t capacity = 1;

    std::uint32_t hash_count() const;
    std::uint32_t bit_count() const;
};

/// Predicted false-positive rate (1 - e^{-kn/m})^k.
double bloom_fp_rate(std::uint32_t m, std::uint32_t k, std::uint64_t n);

/// Bit-array Bloom filter. Index i of element e is
/// BE64(SHA-256(tag || e || i)[0..8]) mod m for i in [0, k).
class BloomFilter {
public:
    explicit BloomFilter(const BloomParams& params);
    BloomFilter(std::uint32_t m, std::uint32_t k);

    void add(ByteView e);
    bool contains(ByteView e) const;

    std::uint32_t bit_count() const noexcept { return m_; }
    std::uint32_t hash_count() const noexcept { return k_; }
    /// Adds performed on this instance; not part of the serialized form.
    std::uint64_t inserted() const noexcept { return inserted_; }
    std::size_t popcount() const;

    bool test_bit(std::uint32_t i) const { return (bits_[i >> 3] >> (i & 7)) & 1u; }
    void flip_bit(std::uint32_t i) { bits_[i >> 3] ^= static_cast<std::uint8_t>(1u << (i & 7)); }

    /// The 8-byte prefix of the canonical form: m (u32 BE) || k (u32 BE).
    std::array<std::uint8_t, 8> header() const;
    /// Packed bit array, bit i at byte i/8, position i%8 from the LSB.
    ByteView bits() const noexcept { return bits_; }

    std::size_t serialized_size() const noexcept { return 8 + bits_.size(); }
    Bytes serialize() const;
    /// Throws FormatError on truncated or inconsistent input.
    static BloomFilter deserialize(ByteView data);

    bool operator==(const BloomFilter& o) const { return m_ == o.m_ && k_ == o.k_ && bits_ == o.bits_; }

private:
    template <typename Fn>
    void for_each_index(ByteView e, Fn&& fn) const;

    std::uint32_t m_;
    std::uint32_t k_;
    std::uint64_t inserted_ = 0;
    Bytes bits_;
};

/// Number of decimal digits of v (v >= 1).
std::uint32_t decimal_digits(std::uint64_t v);

/// Store cnt in the filter as one element F1(K, w||pos||digit) per decimal
/// digit, pos = 1 being the least significant. Throws UsageError for cnt = 0.
void embed_counter(BloomFilter& bf, const Block& k_prf, std::string_view keyword, std::uint64_t cnt);

/// Recover an embedded counter. Probes all ten digits per position and stops
/// at the first position with no hit. Returns nullopt when position 1 has no
/// hit; throws AmbiguityError when a position has more than one.
/// `probes`, if given, is incremented once per membership test.
std::optional<std::uint64_t> extract_counter(const BloomFilter& bf, const Block& k_prf,
                                             std::string_view keyword, std::uint64_t* probes = nullptr);

}  // namespace dsse
