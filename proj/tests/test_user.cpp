#include <doctest.h>

#include <cmath>

#include "dsse/crypto.hpp"
#include "dsse/errors.hpp"
#include "dsse/user.hpp"
#include "support.hpp"

using namespace dsse;
using testing::bytes_of;
using testing::Pair;

namespace {

std::uint64_t probe_budget(std::uint64_t distance, std::uint64_t positions) {
    return 2 * static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(distance + 2)))) + 10 * positions;
}

BloomFilter chain_filter(const Block& k, std::string_view w, std::uint64_t from, std::uint64_t to) {
    BloomFilter bf(BloomParams{0x1p-30, 10'000});
    for (std::uint64_t c = from; c <= to; ++c) bf.add(crypto::chain_label(k, w, c));
    return bf;
}

}  // namespace

TEST_SUITE("user") {

TEST_CASE("counter guess without an embedded baseline") {
    const Block k = crypto::random_block();
    for (std::uint64_t cnt : {1ULL, 2ULL, 3ULL, 5ULL, 100ULL, 456ULL, 1024ULL, 4097ULL}) {
        CAPTURE(cnt);
        const BloomFilter bf = chain_filter(k, "w", 1, cnt);
        GuessStats s;
        CHECK(guess_counter(bf, k, "w", 1ULL << 31, &s) == cnt);
        CHECK_FALSE(s.embedded.has_value());
        CHECK(s.digit_positions == 1);
        CHECK(s.probes <= probe_budget(cnt, 1));
    }
    const BloomFilter bf = chain_filter(k, "w", 1, 10);
    CHECK_FALSE(guess_counter(bf, k, "other", 1ULL << 31).has_value());
}

TEST_CASE("counter guess from an embedded baseline") {
    const Block k = crypto::random_block();
    for (std::uint64_t base : {1ULL, 5ULL, 100ULL, 456ULL, 4097ULL}) {
        for (std::uint64_t extra : {0ULL, 1ULL, 37ULL}) {
            CAPTURE(base);
            CAPTURE(extra);
            BloomFilter bf = chain_filter(k, "w", base + 1, base + extra);
            embed_counter(bf, k, "w", base);
            GuessStats s;
            CHECK(guess_counter(bf, k, "w", 1ULL << 31, &s) == base + extra);
            CHECK(s.embedded == base);
            CHECK(s.digit_positions == decimal_digits(base) + 1);
            CHECK(s.probes <= probe_budget(extra, s.digit_positions));
        }
    }
}

TEST_CASE("counter bound") {
    const Block k = crypto::random_block();
    const BloomFilter bf = chain_filter(k, "w", 1, 40);
    CHECK(guess_counter(bf, k, "w", 41) == 40);
    CHECK_THROWS_AS(guess_counter(bf, k, "w", 40), BoundExceededError);
    CHECK_THROWS_AS(guess_counter(bf, k, "w", 8), BoundExceededError);
    CHECK_THROWS_AS(guess_counter(bf, k, "w", 0), UsageError);
}

TEST_CASE("ambiguous embedding falls back to probing from one") {
    const Block k = crypto::random_block();
    BloomFilter bf = chain_filter(k, "w", 1, 30);
    embed_counter(bf, k, "w", 12);
    embed_counter(bf, k, "w", 13);
    GuessStats s;
    CHECK(guess_counter(bf, k, "w", 1ULL << 31, &s) == 30);
    CHECK_FALSE(s.embedded.has_value());
}

TEST_CASE("user tokens equal owner tokens") {
    Pair p(Mode::full);
    const UserCredentials u = p.owner.enroll_user("alice");
    for (int i = 0; i < 37; ++i) p.add({"w", "v" + std::to_string(i % 5)});
    for (const std::string w : {"w", "v0", "v4"}) {
        const UserToken t = gen_token_user(u, p.server.get_bloom(), w, p.clock, 1200);
        CHECK(t.counter == p.owner.lookup(w)->cnt);
        CHECK(crypto::se_decrypt(u.group.key, t.token.body) ==
              crypto::se_decrypt(p.owner.keys().group.key, p.owner.gen_token(w).body));
    }
    p.server.refresh(p.owner.refresh_bloom(p.clock));
    for (int i = 0; i < 3; ++i) p.add({"w"});
    const UserToken t = gen_token_user(u, p.server.get_bloom(), "w", p.clock, 1200);
    CHECK(t.counter == 40);
    const SearchResult r = p.server.search(t.token);
    CHECK(r.ids.size() == 40);
    CHECK(user_verify(u, "w", t.counter, r.ids, r.ciphertexts, *r.proof, p.clock, 1200));
}

TEST_CASE("filter gate") {
    Pair p(Mode::full);
    const UserCredentials u = p.owner.enroll_user("alice");
    p.add({"w"});
    SignedBloom b = p.server.get_bloom();
    CHECK_THROWS_AS(gen_token_user(u, b, "w", p.clock + 1201, 1200), StaleFilterError);
    CHECK_THROWS_AS(gen_token_user(u, b, "absent", p.clock, 1200), NotFoundError);
    BloomFilter flipped = *b.filter;
    flipped.flip_bit(17);
    b.filter = std::make_shared<const BloomFilter>(flipped);
    CHECK_THROWS_AS(gen_token_user(u, b, "w", p.clock, 1200), TamperedFilterError);
    b.filter.reset();
    CHECK_THROWS_AS(gen_token_user(u, b, "w", p.clock, 1200), TamperedFilterError);
}

TEST_CASE("decryption keeps order and detects tampering") {
    Pair p(Mode::full);
    const UserCredentials u = p.owner.enroll_user("alice");
    p.add({"w"}, "first");
    p.add({"w"}, "second");
    const SearchResult r = p.search("w");
    const auto plain = user_decrypt(u, r.ciphertexts);
    REQUIRE(plain.size() == 2);
    CHECK(std::string(plain[0].begin(), plain[0].end()).starts_with("second"));
    CHECK(std::string(plain[1].begin(), plain[1].end()).starts_with("first"));
    auto bad = r.ciphertexts;
    bad[1][20] ^= 4;
    CHECK_THROWS_AS(user_decrypt(u, bad), DecryptionError);
}

}
