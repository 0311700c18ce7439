#include <doctest.h>

#include <random>

#include "dsse/bloom.hpp"
#include "dsse/crypto.hpp"
#include "dsse/errors.hpp"
#include "dsse/protocol.hpp"
#include "support.hpp"

using namespace dsse;
using testing::bytes_of;
using testing::sequential_key;

TEST_SUITE("bloom") {

TEST_CASE("sizing") {
    const BloomParams year{0x1p-30, 52'560 * 15};
    CHECK(year.hash_count() == 30);
    CHECK(year.bit_count() == 34'122'624);
    CHECK(BloomParams{0.01, 100'000}.hash_count() == 7);
    CHECK(BloomParams{0.01, 100'000}.bit_count() == 1'009'887);
    CHECK(BloomParams{0x1p-30, 960'870}.bit_count() == 41'587'272);
    CHECK_THROWS_AS((BloomParams{0.0, 10}.hash_count()), UsageError);
    CHECK_THROWS_AS((BloomParams{1.0, 10}.hash_count()), UsageError);
    CHECK_THROWS_AS((BloomParams{0.5, 0}.bit_count()), UsageError);
}

TEST_CASE("index derivation") {
    BloomFilter bf(1000, 3);
    bf.add(bytes_of("abc"));
    CHECK(bf.popcount() == 3);
    CHECK(bf.test_bit(528));
    CHECK(bf.test_bit(811));
    CHECK(bf.test_bit(520));
    CHECK(bf.contains(bytes_of("abc")));
}

TEST_CASE("no false negatives") {
    BloomFilter bf(BloomParams{0x1p-20, 5000});
    std::vector<Block> items;
    for (int i = 0; i < 5000; ++i) {
        items.push_back(crypto::random_block());
        bf.add(items.back());
    }
    for (const auto& e : items) CHECK(bf.contains(e));
    CHECK(bf.inserted() == 5000);
}

TEST_CASE("serialization") {
    BloomFilter bf(16, 2);
    bf.flip_bit(0);
    bf.flip_bit(15);
    CHECK(to_hex(bf.serialize()) == "00000010000000020180");
    CHECK(BloomFilter::deserialize(bf.serialize()) == bf);
    CHECK(to_hex(bloom_mac(sequential_key(), bf, 1'577'836'800)) == "59da09a7ea4dde0c43e3d315f57c6ddb");

    BloomFilter odd(13, 4);
    odd.add(bytes_of("x"));
    const Bytes s = odd.serialize();
    CHECK(s.size() == 8 + 2);
    CHECK(BloomFilter::deserialize(s) == odd);
    Bytes padded = s;
    padded.back() |= 0x80;
    CHECK_THROWS_AS(BloomFilter::deserialize(padded), FormatError);
    for (std::size_t cut = 0; cut < s.size(); ++cut)
        CHECK_THROWS_AS(BloomFilter::deserialize(ByteView(s).first(cut)), FormatError);
    Bytes longer = s;
    longer.push_back(0);
    CHECK_THROWS_AS(BloomFilter::deserialize(longer), FormatError);
    CHECK_THROWS_AS(BloomFilter::deserialize(from_hex("0000000000000001")), FormatError);
}

TEST_CASE("digit embedding") {
    const Block k = sequential_key();
    CHECK(decimal_digits(1) == 1);
    CHECK(decimal_digits(9) == 1);
    CHECK(decimal_digits(10) == 2);
    CHECK(decimal_digits(456) == 3);
    CHECK(decimal_digits(UINT64_MAX) == 20);

    for (std::uint64_t cnt : {7ULL, 100ULL, 456ULL, 4097ULL, 1'000'000ULL}) {
        BloomFilter bf(BloomParams{0x1p-30, 100});
        embed_counter(bf, k, "heartbeat:75", cnt);
        CHECK(bf.inserted() == decimal_digits(cnt));
        std::uint64_t probes = 0;
        CHECK(extract_counter(bf, k, "heartbeat:75", &probes) == cnt);
        CHECK(probes == 10 * (decimal_digits(cnt) + 1));
        CHECK_FALSE(extract_counter(bf, k, "heartbeat:76").has_value());
    }
    BloomFilter bf(BloomParams{0x1p-30, 100});
    CHECK_THROWS_AS(embed_counter(bf, k, "w", 0), UsageError);
    embed_counter(bf, k, "w", 12);
    embed_counter(bf, k, "w", 13);
    CHECK_THROWS_AS(extract_counter(bf, k, "w"), AmbiguityError);
}

TEST_CASE("embedding round trip over many keywords") {
    const Block k = crypto::random_block();
    BloomFilter bf(BloomParams{0x1p-30, 6'000});
    std::mt19937_64 rng(11);
    std::vector<std::pair<std::string, std::uint64_t>> pairs;
    for (int i = 0; i < 1000; ++i) {
        pairs.emplace_back("kw:" + std::to_string(i), 1 + rng() % 999'999);
        embed_counter(bf, k, pairs.back().first, pairs.back().second);
    }
    for (const auto& [w, c] : pairs) CHECK(extract_counter(bf, k, w) == c);
}

TEST_CASE("measured false-positive rate follows the formula") {
    const BloomParams p{0.01, 20'000};
    BloomFilter bf(p);
    for (std::uint64_t i = 0; i < p.capacity; ++i) bf.add(bytes_of("in:" + std::to_string(i)));
    std::uint64_t fp = 0;
    const std::uint64_t trials = 200'000;
    for (std::uint64_t i = 0; i < trials; ++i) fp += bf.contains(bytes_of("out:" + std::to_string(i)));
    const double rate = static_cast<double>(fp) / trials;
    const double predicted = bloom_fp_rate(bf.bit_count(), bf.hash_count(), p.capacity);
    CHECK(predicted < 0.01);
    CHECK(rate > predicted * 0.8);
    CHECK(rate < predicted * 1.2);
}

}
