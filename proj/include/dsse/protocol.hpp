#pragma once

// Objects exchanged between the data owner, the cloud server and authorized
// users. Both constructions share these types; the mode decides mask width
// and whether the verifiability fields are populated.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsse/bloom.hpp"
#include "dsse/bytes.hpp"

namespace dsse {

enum class Mode : std::uint8_t {
    basic = 0x01,  // forward privacy only: 2*lambda masks, plaintext tokens
    full = 0x02,   // + group-key tokens, aggregate MACs, signed Bloom filter
};

std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view s);

/// Width of the masked chain entry: <tau_prev || K_prev> or <tau_prev || K_prev || gamma>.
constexpr std::size_t mask_width(Mode m) { return m == Mode::basic ? 2 * kLambda : 3 * kLambda; }

/// Fixed-capacity masked chain entry; only the first mask_width(mode) bytes are used.
struct MaskedEntry {
    std::array<std::uint8_t, 3 * kLambda> bytes{};
    std::uint8_t size = 0;

    ByteView view() const { return {bytes.data(), size}; }
    bool operator==(const MaskedEntry& o) const { return std::ranges::equal(view(), o.view()); }
};

struct IndexEntry {
    Block tau{};
    MaskedEntry mu;
    bool operator==(const IndexEntry&) const = default;
};

/// Owner -> server upload of one encrypted file and its index entries.
struct AddPayload {
    Mode mode = Mode::full;
    FileId file_id{};
    Bytes ciphertext;
    std::vector<IndexEntry> entries;
    Block sigma{};               // full mode only
    std::uint64_t timestamp = 0;  // full mode only, unix seconds

    bool operator==(const AddPayload&) const = default;
};

/// Bloom filter with the owner's MAC over (serialized filter || timestamp).
struct SignedBloom {
    std::shared_ptr<const BloomFilter> filter;
    Block sigma{};
    std::uint64_t timestamp = 0;

    bool operator==(const SignedBloom& o) const {
        return sigma == o.sigma && timestamp == o.timestamp &&
               (filter == o.filter || (filter && o.filter && *filter == *o.filter));
    }
};

/// Periodic owner -> server replacement of the server's filter.
using RefreshPayload = SignedBloom;

/// Search token. Basic mode: body = tau || K in the clear, epoch 0.
/// Full mode: body = SE.Enc(r, tau || K) under the group key of `epoch`.
struct SearchToken {
    Mode mode = Mode::full;
    std::uint64_t epoch = 0;
    Bytes body;

    bool operator==(const SearchToken&) const = default;
};

/// Material returned with a full-mode search result.
struct Proof {
    SignedBloom bloom;
    Block gamma{};

    bool operator==(const Proof&) const = default;
};

struct SearchResult {
    std::vector<FileId> ids;        // newest first
    std::vector<Bytes> ciphertexts;  // parallel to ids
    std::optional<Proof> proof;      // full mode only
    std::uint32_t lookups = 0;       // index-table lookups the server performed

    bool operator==(const SearchResult&) const = default;
};

/// sigma = Mac(K_Mac, serialize(bf) || T) with T as 8-byte big-endian.
Block bloom_mac(const Block& k_mac, const BloomFilter& bf, std::uint64_t timestamp);

SignedBloom sign_bloom(const Block& k_mac, BloomFilter bf, std::uint64_t timestamp);

}  // namespace dsse
