#include <doctest.h>

#include <set>

#include "dsse/crypto.hpp"
#include "dsse/errors.hpp"
#include "support.hpp"

using namespace dsse;
using testing::bytes_of;
using testing::sequential_key;

TEST_SUITE("crypto") {

TEST_CASE("hash of the empty string") {
    CHECK(to_hex(crypto::hash({})) == "e3b0c44298fc1c149afbf4c8996fb924");
    CHECK(to_hex(crypto::hash(bytes_of("abc"))) == "ba7816bf8f01cfea414140de5dae2223");
}

TEST_CASE("prf known answers") {
    const Block k = sequential_key();
    const Bytes abc = bytes_of("abc");
    CHECK(to_hex(crypto::prf1(k, abc)) == "d601cc177559b0248459787f7e804ed7");
    CHECK(to_hex(crypto::prf2(k, abc)) == "0764a658eb3e2fb02c067293cdaa3c05287315f2d3b45a2810201e26c3893548");
    CHECK(to_hex(crypto::prf3(k, abc)) ==
          "0764a658eb3e2fb02c067293cdaa3c05287315f2d3b45a2810201e26c3893548"
          "e9eaca72f02e041920317168b57a8640");
    CHECK(crypto::mac_generate(k, abc) == crypto::prf1(k, abc));
    CHECK(crypto::mac_generate(k, {view(std::string_view("a")), view(std::string_view("bc"))}) ==
          crypto::mac_generate(k, abc));
}

TEST_CASE("input encoding") {
    CHECK(to_hex(crypto::encode_input(crypto::Domain::chain_label, "heartbeat:75", 3)) ==
          "010000000c6865617274626561743a37350000000000000003");
    CHECK(crypto::encode_digit("w", 2, 5) == crypto::encode_input(crypto::Domain::digit, "w", (2ULL << 32) | 5));
}

TEST_CASE("chain label and key derivation") {
    const Block k = sequential_key();
    CHECK(to_hex(crypto::chain_label(k, "heartbeat:75", 3)) == "f4b71d657be9345a63e26f3d3273736c");
    CHECK(to_hex(crypto::chain_key(k, "heartbeat:75", 3)) == "7b66541f07549253ee5501cda8f6ed4a");
    CHECK(to_hex(crypto::prf1(k, crypto::encode_digit("heartbeat:75", 2, 5))) ==
          "fad8403d7f4312a61fefd8a1ca141d42");
}

TEST_CASE("encoding is injective across keyword/counter boundaries") {
    std::set<Bytes> seen;
    const std::vector<std::string> words{"", "a", "a1", "a:1", "1", "ab", "b"};
    for (auto tag : {crypto::Domain::chain_label, crypto::Domain::key_derivation, crypto::Domain::digit})
        for (const auto& w : words)
            for (std::uint64_t p : {0ULL, 1ULL, 10ULL, 256ULL, (1ULL << 32) | 1})
                CHECK(seen.insert(crypto::encode_input(tag, w, p)).second);
}

TEST_CASE("output lengths hold for arbitrary inputs") {
    for (int i = 0; i < 10'000; ++i) {
        Bytes msg(static_cast<std::size_t>(i % 300));
        crypto::random_bytes(msg);
        const Block k = crypto::random_block();
        CHECK(crypto::prf1(k, msg).size() == kLambda);
        CHECK(crypto::prf2(k, msg).size() == 2 * kLambda);
        CHECK(crypto::prf3(k, msg).size() == 3 * kLambda);
        CHECK(crypto::hash(msg).size() == kLambda);
    }
}

TEST_CASE("independent keys give distinct outputs") {
    std::set<Block> outs;
    for (int i = 0; i < 1000; ++i) outs.insert(crypto::prf1(crypto::random_block(), bytes_of("heartbeat:75")));
    CHECK(outs.size() == 1000);
}

TEST_CASE("wrong key lengths are rejected") {
    const Bytes short_key(15);
    CHECK_THROWS_AS(crypto::prf1(short_key, {}), UsageError);
    CHECK_THROWS_AS(crypto::prf3(Bytes(17), {}), UsageError);
    CHECK_THROWS_AS(crypto::se_encrypt(short_key, bytes_of("x")), UsageError);
}

TEST_CASE("aggregate MAC is an XOR fold") {
    const Block k = sequential_key();
    std::vector<Block> tags;
    for (int i = 0; i < 5; ++i) tags.push_back(crypto::mac_generate(k, bytes_of("c" + std::to_string(i))));
    Block manual{};
    for (const auto& t : tags)
        for (std::size_t j = 0; j < kLambda; ++j) manual[j] ^= t[j];
    CHECK(crypto::aggregate_mac(tags) == manual);
    CHECK(crypto::aggregate_mac(std::span<const Block>{}) == kZeroBlock);

    // Adding then removing a tag is the identity.
    std::vector<Block> twice = tags;
    twice.push_back(tags[2]);
    twice.push_back(tags[2]);
    CHECK(crypto::aggregate_mac(twice) == manual);

    std::vector<Bytes> loose{Bytes(16), Bytes(15)};
    CHECK_THROWS_AS(crypto::aggregate_mac(std::span<const Bytes>(loose)), UsageError);
}

TEST_CASE("AES-GCM decrypts an externally produced ciphertext") {
    const Bytes ct = from_hex(
        "6465666768696a6b6c6d6e6f6e0b23c0a876d997eb03661a5d62da7cff2a6379fa4e515b6cd84beb");
    CHECK(crypto::se_decrypt(sequential_key(), ct) == bytes_of("timestamp=1\n"));
}

TEST_CASE("AES-GCM round trip and tamper detection") {
    const Block k = crypto::random_block();
    const Bytes pt = bytes_of("heartbeat=75\nsystolic=120\n");
    const Bytes a = crypto::se_encrypt(k, pt);
    const Bytes b = crypto::se_encrypt(k, pt);
    CHECK(a.size() == pt.size() + 28);
    CHECK(a != b);
    CHECK(crypto::se_decrypt(k, a) == pt);
    for (std::size_t i = 0; i < a.size(); i += 7) {
        Bytes bad = a;
        bad[i] ^= 1;
        CHECK_THROWS_AS(crypto::se_decrypt(k, bad), DecryptionError);
    }
    CHECK_THROWS_AS(crypto::se_decrypt(k, Bytes(27)), DecryptionError);
    CHECK_THROWS_AS(crypto::se_decrypt(crypto::random_block(), a), DecryptionError);
}

TEST_CASE("constant-time equality") {
    CHECK(crypto::equal(bytes_of("abc"), bytes_of("abc")));
    CHECK_FALSE(crypto::equal(bytes_of("abc"), bytes_of("abd")));
    CHECK_FALSE(crypto::equal(bytes_of("abc"), bytes_of("ab")));
}

TEST_CASE("key bundles") {
    const KeyBundle a = KeyBundle::generate();
    const KeyBundle b = KeyBundle::generate();
    CHECK(a.group.epoch == 1);
    CHECK(a.k_prf != b.k_prf);
    CHECK(a.k_prf != a.k_se);
    CHECK(a.k_se != a.k_mac);
}

}
