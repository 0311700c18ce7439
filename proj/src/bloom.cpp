#include "dsse/bloom.hpp"

#include <cmath>
#include <limits>

#include "dsse/crypto.hpp"
#include "dsse/errors.hpp"
#include "dsse/kernels.hpp"

namespace dsse {

namespace {

constexpr std::string_view kIndexTag = "dsse.bloom.index";
constexpr std::uint32_t kMaxPositions = 20;  // digits of 2^64 - 1

}  // namespace

std::uint32_t BloomParams::hash_count() const {
    if (!(target_fp > 0.0 && target_fp < 1.0)) throw UsageError("bloom: target_fp must be in (0,1)");
    return static_cast<std::uint32_t>(std::max(1.0, std::ceil(-std::log2(target_fp))));
}

std::uint32_t BloomParams::bit_count() const {
    if (capacity < 1) throw UsageError("bloom: capacity must be >= 1");
    const double m = std::ceil(static_cast<double>(capacity) * hash_count() / std::log(2.0));
    if (m > std::numeric_limits<std::uint32_t>::max()) throw UsageError("bloom: filter exceeds 2^32 bits");
    return static_cast<std::uint32_t>(m);
}

double bloom_fp_rate(std::uint32_t m, std::uint32_t k, std::uint64_t n) {
    return std::pow(1.0 - std::exp(-static_cast<double>(k) * static_cast<double>(n) / m), k);
}

BloomFilter::BloomFilter(const BloomParams& params) : BloomFilter(params.bit_count(), params.hash_count()) {}

BloomFilter::BloomFilter(std::uint32_t m, std::uint32_t k) : m_(m), k_(k), bits_((std::size_t{m} + 7) / 8) {
    if (m == 0 || k == 0 || k > 255) throw UsageError("bloom: need m >= 1 and 1 <= k <= 255");
}

template <typename Fn>
void BloomFilter::for_each_index(ByteView e, Fn&& fn) const {
    for (std::uint32_t i = 0; i < k_; ++i) {
        const std::uint8_t suffix = static_cast<std::uint8_t>(i);
        const auto digest = crypto::sha256({view(kIndexTag), e, ByteView{&suffix, 1}});
        if (!fn(static_cast<std::uint32_t>(get_u64_be(digest) % m_))) return;
    }
}

void BloomFilter::add(ByteView e) {
    for_each_index(e, [&](std::uint32_t idx) {
        bits_[idx >> 3] |= static_cast<std::uint8_t>(1u << (idx & 7));
        return true;
    });
    ++inserted_;
}

bool BloomFilter::contains(ByteView e) const {
    bool all = true;
    for_each_index(e, [&](std::uint32_t idx) { return all = test_bit(idx); });
    return all;
}

std::size_t BloomFilter::popcount() const { return kernels::popcount(bits_); }

std::array<std::uint8_t, 8> BloomFilter::header() const {
    Bytes h;
    put_u32_be(h, m_);
    put_u32_be(h, k_);
    return to_array<8>(h);
}

Bytes BloomFilter::serialize() const {
    Bytes out;
    out.reserve(serialized_size());
    append(out, header());
    append(out, bits_);
    return out;
}

BloomFilter BloomFilter::deserialize(ByteView data) {
    if (data.size() < 8) throw FormatError("bloom: truncated header", data.size());
    const std::uint32_t m = get_u32_be(data);
    const std::uint32_t k = get_u32_be(data.subspan(4));
    if (m == 0 || k == 0 || k > 255) throw FormatError("bloom: invalid m/k", 0);
    const std::size_t want = 8 + (std::size_t{m} + 7) / 8;
    if (data.size() != want) throw FormatError("bloom: expected " + std::to_string(want) + " bytes", data.size());
    // Padding bits past m must be zero, otherwise two encodings map to one filter.
    if (m % 8 != 0 && (data.back() >> (m % 8)) != 0) throw FormatError("bloom: nonzero padding bits", want - 1);
    BloomFilter bf(m, k);
    std::copy(data.begin() + 8, data.end(), bf.bits_.begin());
    return bf;
}

std::uint32_t decimal_digits(std::uint64_t v) {
    std::uint32_t n = 1;
    while (v >= 10) {
        v /= 10;
        ++n;
    }
    return n;
}

void embed_counter(BloomFilter& bf, const Block& k_prf, std::string_view keyword, std::uint64_t cnt) {
    if (cnt == 0) throw UsageError("embed_counter: counter must be >= 1");
    for (std::uint32_t pos = 1; cnt != 0; ++pos, cnt /= 10) {
        const auto digit = static_cast<std::uint32_t>(cnt % 10);
        bf.add(crypto::prf1(k_prf, crypto::encode_digit(keyword, pos, digit)));
    }
}

std::optional<std::uint64_t> extract_counter(const BloomFilter& bf, const Block& k_prf,
                                             std::string_view keyword, std::uint64_t* probes) {
    std::uint64_t value = 0;
    std::uint64_t scale = 1;
    std::uint32_t pos = 1;
    for (; pos <= kMaxPositions; ++pos) {
        int hit = -1;
        for (std::uint32_t d = 0; d < 10; ++d) {
            if (probes) ++*probes;
            if (!bf.contains(crypto::prf1(k_prf, crypto::encode_digit(keyword, pos, d)))) continue;
            if (hit >= 0)
                throw AmbiguityError("embedded counter: digits " + std::to_string(hit) + " and " +
                                     std::to_string(d) + " both present at position " + std::to_string(pos));
            hit = static_cast<int>(d);
        }
        if (hit < 0) break;
        value += static_cast<std::uint64_t>(hit) * scale;
        scale *= 10;
    }
    if (pos == 1) return std::nullopt;
    return value;
}

}  // namespace dsse
