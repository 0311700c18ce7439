#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dsse/bloom.hpp"
#include "dsse/owner.hpp"
#include "dsse/protocol.hpp"

namespace dsse {

/// Instrumentation for one counter guess.
struct GuessStats {
    std::uint64_t probes = 0;               // Bloom membership tests, digit probes included
    std::uint64_t digit_positions = 0;      // embedded-counter positions examined
    std::optional<std::uint64_t> embedded;  // counter recovered from a refresh, if any
};

/// Document-and-guess: the largest c <= max_counter such that F1(K, w||c) is in
/// the filter and F1(K, w||c+1) is not. Starts from an embedded counter when the
/// filter carries one, otherwise from 1; brackets by doubling the step, then
/// bisects. Returns nullopt for keywords with no entries. Throws
/// BoundExceededError when max_counter itself is present.
std::optional<std::uint64_t> guess_counter(const BloomFilter& bf, const Block& k_prf, std::string_view keyword,
                                           std::uint64_t max_counter, GuessStats* stats = nullptr);

struct UserToken {
    SearchToken token;
    std::uint64_t counter = 0;
};

/// Token for an explicit counter, sealed under the user's group key.
UserToken token_for_counter(const UserCredentials& creds, std::string_view keyword, std::uint64_t cnt);

/// Authenticate the fetched filter, guess the counter, seal the token.
/// Throws TamperedFilterError, StaleFilterError or NotFoundError.
UserToken gen_token_user(const UserCredentials& creds, const SignedBloom& bloom, std::string_view keyword,
                         std::uint64_t now, std::uint64_t freshness_window, GuessStats* stats = nullptr);

/// SSEVerify with the guessed counter and every check enabled.
bool user_verify(const UserCredentials& creds, std::string_view keyword, std::uint64_t guessed_cnt,
                 std::span<const FileId> ids, std::span<const Bytes> ciphertexts, const Proof& proof,
                 std::uint64_t now, std::uint64_t freshness_window);

/// Decrypt result files in order. Throws DecryptionError on a tampered file.
std::vector<Bytes> user_decrypt(const UserCredentials& creds, std::span<const Bytes> ciphertexts);

}  // namespace dsse
