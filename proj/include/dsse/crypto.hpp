#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

#include "dsse/bytes.hpp"

namespace dsse::crypto {

using Mask2 = std::array<std::uint8_t, 2 * kLambda>;
using Mask3 = std::array<std::uint8_t, 3 * kLambda>;

/// Domain tags separating the three kinds of PRF/hash input.
enum class Domain : std::uint8_t {
    chain_label = 0x01,     // w || cnt        -> F1 -> tau
    key_derivation = 0x02,  // w || cnt        -> H -> F1 -> K_cnt
    digit = 0x03,           // w || pos || d   -> F1 -> Bloom element
};

/// tag(1) || len(w) as u32 BE || w || payload as u64 BE. Injective in (tag, w, payload).
Bytes encode_input(Domain tag, std::string_view keyword, std::uint64_t payload);

inline Bytes encode_digit(std::string_view keyword, std::uint32_t pos, std::uint32_t digit) {
    return encode_input(Domain::digit, keyword, (std::uint64_t{pos} << 32) | digit);
}

/// F1: HMAC-SHA-256 truncated to lambda bytes.
Block prf1(ByteView key, ByteView msg);
/// F2: HMAC-SHA-512 truncated to 2*lambda bytes.
Mask2 prf2(ByteView key, ByteView msg);
/// F3: HMAC-SHA-512 truncated to 3*lambda bytes.
Mask3 prf3(ByteView key, ByteView msg);

/// H: SHA-256 truncated to lambda bytes.
Block hash(ByteView msg);

/// Full 32-byte SHA-256 over the concatenation of parts.
std::array<std::uint8_t, 32> sha256(std::initializer_list<ByteView> parts);

/// Mac.GenMac: HMAC-SHA-256 truncated to lambda bytes over the concatenation of parts.
Block mac_generate(ByteView key, std::initializer_list<ByteView> parts);
inline Block mac_generate(ByteView key, ByteView msg) { return mac_generate(key, {msg}); }

/// XOR-fold of lambda-byte tags; empty input folds to 0^lambda.
Block aggregate_mac(std::span<const Block> tags);
/// Same fold over untyped tags; rejects any tag that is not lambda bytes.
Block aggregate_mac(std::span<const Bytes> tags);

/// AES-128-GCM with a fresh 96-bit nonce: nonce || ciphertext || tag.
Bytes se_encrypt(ByteView key, ByteView plaintext);
/// Throws DecryptionError when authentication fails.
Bytes se_decrypt(ByteView key, ByteView ciphertext);

/// Cryptographic RNG. Throws Error on RNG failure.
void random_bytes(std::span<std::uint8_t> out);
Block random_block();
FileId random_file_id();

/// Constant-time equality.
bool equal(ByteView a, ByteView b);

/// tau_cnt = F1(K, w||cnt).
Block chain_label(const Block& k_prf, std::string_view keyword, std::uint64_t cnt);
/// K_cnt = F1(K, H(w||cnt)).
Block chain_key(const Block& k_prf, std::string_view keyword, std::uint64_t cnt);

}  // namespace dsse::crypto

namespace dsse {

/// Rotating symmetric key wrapping search tokens.
struct GroupKey {
    Block key{};
    std::uint64_t epoch = 0;

    static GroupKey generate(std::uint64_t epoch);
    bool operator==(const GroupKey&) const = default;
};

/// Owner secret material (K, K_SE, K_Mac) plus the current group key r.
struct KeyBundle {
    Block k_prf{};
    Block k_se{};
    Block k_mac{};
    GroupKey group{};

    static KeyBundle generate();
    bool operator==(const KeyBundle&) const = default;
};

}  // namespace dsse
