#include "dsse/user.hpp"

#include "dsse/crypto.hpp"
#include "dsse/errors.hpp"

namespace dsse {

std::optional<std::uint64_t> guess_counter(const BloomFilter& bf, const Block& k_prf, std::string_view keyword,
                                           std::uint64_t max_counter, GuessStats* stats) {
    if (max_counter < 1) throw UsageError("guess_counter: max_counter must be >= 1");
    GuessStats local;
    GuessStats& s = stats ? *stats : local;

    std::uint64_t base = 0;
    try {
        s.embedded = extract_counter(bf, k_prf, keyword, &s.probes);
    } catch (const AmbiguityError&) {
        s.embedded.reset();  // fall back to probing from 1
    }
    if (s.embedded) base = *s.embedded;
    s.digit_positions = s.embedded ? decimal_digits(*s.embedded) + 1 : 1;
    if (base > max_counter) throw BoundExceededError("embedded counter exceeds max_counter");

    auto present = [&](std::uint64_t c) {
        ++s.probes;
        return bf.contains(crypto::chain_label(k_prf, keyword, c));
    };

    // Invariant: lo is known to be reached (present, or the embedded baseline);
    // hi is known to be absent (or one past max_counter).
    std::uint64_t lo = base;
    std::uint64_t hi = 0;
    for (std::uint64_t step = 1;; step *= 2) {
        const std::uint64_t probe = (max_counter - base < step) ? max_counter : base + step;
        if (probe <= lo) {
            hi = lo + 1;
            break;
        }
        if (!present(probe)) {
            hi = probe;
            break;
        }
        lo = probe;
        if (probe == max_counter) throw BoundExceededError("counter reached max_counter; raise the bound");
    }
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (present(mid) ? lo : hi) = mid;
    }
    if (lo == 0) return std::nullopt;
    return lo;
}

UserToken token_for_counter(const UserCredentials& creds, std::string_view keyword, std::uint64_t cnt) {
    Bytes plain;
    append(plain, crypto::chain_label(creds.k_prf, keyword, cnt));
    append(plain, crypto::chain_key(creds.k_prf, keyword, cnt));
    return {{Mode::full, creds.group.epoch, crypto::se_encrypt(creds.group.key, plain)}, cnt};
}

UserToken gen_token_user(const UserCredentials& creds, const SignedBloom& bloom, std::string_view keyword,
                         std::uint64_t now, std::uint64_t freshness_window, GuessStats* stats) {
    if (!bloom.filter || !crypto::equal(bloom_mac(creds.k_mac, *bloom.filter, bloom.timestamp), bloom.sigma))
        throw TamperedFilterError("Bloom filter MAC does not verify");
    const std::uint64_t age = now >= bloom.timestamp ? now - bloom.timestamp : bloom.timestamp - now;
    if (age > freshness_window)
        throw StaleFilterError("Bloom filter timestamp is " + std::to_string(age) + " s from now (window " +
                               std::to_string(freshness_window) + " s)");
    auto cnt = guess_counter(*bloom.filter, creds.k_prf, keyword, creds.max_counter, stats);
    if (!cnt) throw NotFoundError("keyword '" + std::string(keyword) + "' has no entries");
    return token_for_counter(creds, keyword, *cnt);
}

bool user_verify(const UserCredentials& creds, std::string_view keyword, std::uint64_t guessed_cnt,
                 std::span<const FileId> ids, std::span<const Bytes> ciphertexts, const Proof& proof,
                 std::uint64_t now, std::uint64_t freshness_window) {
    return sse_verify(creds.k_mac, keyword, guessed_cnt, ids, ciphertexts, proof, now,
                      VerifyOptions{freshness_window, true});
}

std::vector<Bytes> user_decrypt(const UserCredentials& creds, std::span<const Bytes> ciphertexts) {
    std::vector<Bytes> out;
    out.reserve(ciphertexts.size());
    for (const Bytes& c : ciphertexts) out.push_back(crypto::se_decrypt(creds.k_se, c));
    return out;
}

}  // namespace dsse
