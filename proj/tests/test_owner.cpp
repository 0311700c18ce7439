#include <doctest.h>

#include "dsse/crypto.hpp"
#include "dsse/errors.hpp"
#include "dsse/owner.hpp"
#include "support.hpp"

using namespace dsse;
using testing::bytes_of;
using testing::concat;
using testing::small_config;
using testing::unmask;

namespace {

std::vector<std::string> fifteen() {
    std::vector<std::string> w;
    for (int i = 0; i < 15; ++i) w.push_back("attr" + std::to_string(i) + ":" + std::to_string(60 + i));
    return w;
}

}  // namespace

TEST_SUITE("owner") {

TEST_CASE("fresh owner") {
    const Owner a = Owner::generate(small_config(Mode::full));
    const Owner b = Owner::generate(small_config(Mode::full));
    CHECK(a.table().empty());
    CHECK(a.bloom().popcount() == 0);
    CHECK(a.keys().group.epoch == 1);
    CHECK(a.keys().k_prf != b.keys().k_prf);
    CHECK(a.mode() == Mode::full);
    CHECK(a.table_bytes() == 4);
}

TEST_CASE("first and second entry of a keyword chain") {
    for (Mode mode : {Mode::basic, Mode::full}) {
        CAPTURE(mode_name(mode));
        Owner o = Owner::generate(small_config(mode));
        const Block k = o.keys().k_prf;
        const std::string w = "heartbeat:75";
        const AddPayload p1 = o.add_file(bytes_of("file one"), std::vector<std::string>{w}, 100);
        REQUIRE(p1.entries.size() == 1);
        CHECK(p1.entries[0].tau == crypto::chain_label(k, w, 1));
        CHECK(p1.entries[0].mu.size == mask_width(mode));
        CHECK(crypto::se_decrypt(o.keys().k_se, p1.ciphertext) == bytes_of("file one"));

        const Block gamma1 = crypto::mac_generate(o.keys().k_mac, {view(p1.ciphertext), view(w)});
        Bytes expect1 = concat({crypto::chain_label(k, w, 0), kZeroBlock});
        if (mode == Mode::full) append(expect1, gamma1);
        CHECK(unmask(k, w, 1, p1.entries[0].mu) == expect1);

        const AddPayload p2 = o.add_file(bytes_of("file two"), std::vector<std::string>{w}, 200);
        CHECK(p2.entries[0].tau != p1.entries[0].tau);
        CHECK(p2.file_id != p1.file_id);
        Block gamma2 = gamma1;
        for (std::size_t i = 0; i < kLambda; ++i)
            gamma2[i] ^= crypto::mac_generate(o.keys().k_mac, {view(p2.ciphertext), view(w)})[i];
        Bytes expect2 = concat({crypto::chain_label(k, w, 1), crypto::chain_key(k, w, 1)});
        if (mode == Mode::full) append(expect2, gamma2);
        CHECK(unmask(k, w, 2, p2.entries[0].mu) == expect2);

        const auto row = o.lookup(w);
        REQUIRE(row);
        CHECK(row->cnt == 2);
        if (mode == Mode::full) {
            CHECK(row->gamma == gamma2);
            CHECK(p2.timestamp == 200);
            CHECK(p2.sigma == bloom_mac(o.keys().k_mac, o.bloom(), 200));
            CHECK(o.bloom().contains(p1.entries[0].tau));
            CHECK(o.bloom().contains(p2.entries[0].tau));
        } else {
            CHECK(o.bloom().popcount() == 0);
        }
    }
}

TEST_CASE("fifteen keywords give fifteen entries") {
    Owner o = Owner::generate(small_config(Mode::full));
    const AddPayload p = o.add_file(bytes_of("phi"), fifteen(), 1);
    CHECK(p.entries.size() == 15);
    CHECK(o.table().size() == 15);
    std::size_t expect = 4;
    for (const auto& w : fifteen()) expect += 4 + w.size() + 8 + kLambda;
    CHECK(o.table_bytes() == expect);
}

TEST_CASE("add_file preconditions") {
    Owner o = Owner::generate(small_config(Mode::full));
    CHECK_THROWS_AS(o.add_file(bytes_of("x"), std::vector<std::string>{"a", "a"}, 1), UsageError);
    CHECK_THROWS_AS(o.add_file(bytes_of("x"), std::vector<std::string>{"a", ""}, 1), UsageError);
    CHECK_THROWS_AS(o.add_file(bytes_of("x"), std::vector<std::string>{}, 1), UsageError);
    CHECK_THROWS_AS(o.add_file(Bytes{}, std::vector<std::string>{"a"}, 1), UsageError);
    // A rejected call leaves the state untouched.
    CHECK(o.table().empty());
    CHECK(o.bloom().popcount() == 0);
}

TEST_CASE("owner tokens") {
    Owner full = Owner::generate(small_config(Mode::full));
    for (int i = 0; i < 3; ++i) full.add_file(bytes_of("f"), std::vector<std::string>{"w"}, 10 + i);
    const SearchToken t = full.gen_token("w");
    CHECK(t.mode == Mode::full);
    CHECK(t.epoch == 1);
    const Bytes plain = crypto::se_decrypt(full.keys().group.key, t.body);
    CHECK(plain == concat({crypto::chain_label(full.keys().k_prf, "w", 3), crypto::chain_key(full.keys().k_prf, "w", 3)}));
    CHECK_THROWS_AS(full.gen_token("absent"), NotFoundError);

    Owner basic = Owner::generate(small_config(Mode::basic));
    basic.add_file(bytes_of("f"), std::vector<std::string>{"w"}, 10);
    const SearchToken b = basic.gen_token("w");
    CHECK(b.mode == Mode::basic);
    CHECK(b.epoch == 0);
    CHECK(b.body == concat({crypto::chain_label(basic.keys().k_prf, "w", 1), crypto::chain_key(basic.keys().k_prf, "w", 1)}));
}

TEST_CASE("bloom refresh embeds current counters") {
    Owner o = Owner::generate(small_config(Mode::full));
    for (int i = 0; i < 456; ++i) {
        std::vector<std::string> kw{"heartbeat:75"};
        if (i < 7) kw.push_back("systolic:120");
        o.add_file(bytes_of("f" + std::to_string(i)), kw, 1000 + i);
    }
    const RefreshPayload r = o.refresh_bloom(5000);
    CHECK(o.last_refresh() == 5000);
    CHECK(r.timestamp == 5000);
    CHECK(*r.filter == o.bloom());
    CHECK(r.sigma == bloom_mac(o.keys().k_mac, o.bloom(), 5000));
    CHECK(o.bloom().inserted() == decimal_digits(456) + decimal_digits(7));
    CHECK(extract_counter(o.bloom(), o.keys().k_prf, "heartbeat:75") == 456);
    CHECK(extract_counter(o.bloom(), o.keys().k_prf, "systolic:120") == 7);
    CHECK_FALSE(o.bloom().contains(crypto::chain_label(o.keys().k_prf, "heartbeat:75", 456)));

    // Gamma keeps accumulating across the refresh.
    const Block before = o.lookup("heartbeat:75")->gamma;
    const AddPayload p = o.add_file(bytes_of("next"), std::vector<std::string>{"heartbeat:75"}, 6000);
    CHECK(o.bloom().contains(crypto::chain_label(o.keys().k_prf, "heartbeat:75", 457)));
    Block expect = before;
    const Block m = crypto::mac_generate(o.keys().k_mac, {view(p.ciphertext), view(std::string_view("heartbeat:75"))});
    for (std::size_t i = 0; i < kLambda; ++i) expect[i] ^= m[i];
    CHECK(o.lookup("heartbeat:75")->gamma == expect);

    Owner basic = Owner::generate(small_config(Mode::basic));
    CHECK_THROWS_AS(basic.refresh_bloom(1), UsageError);
}

TEST_CASE("group key rotation and enrollment") {
    Owner o = Owner::generate(small_config(Mode::full));
    const UserCredentials alice = o.enroll_user("alice");
    const UserCredentials bob = o.enroll_user("bob");
    CHECK(alice.k_prf == o.keys().k_prf);
    CHECK(alice.group == o.keys().group);
    const GroupKey g2 = o.rotate_group_key("bob");
    CHECK(g2.epoch == 2);
    CHECK(g2.key != bob.group.key);
    CHECK(o.is_revoked("bob"));
    CHECK(o.active_users() == std::vector<std::string>{"alice"});
    CHECK_THROWS_AS(o.enroll_user("bob"), UsageError);
    CHECK(o.enroll_user("alice").group == g2);
    CHECK(o.rotate_group_key("nobody").epoch == 3);
}

TEST_CASE("snapshot round trip") {
    Owner o = Owner::generate(small_config(Mode::full));
    o.enroll_user("alice");
    for (int i = 0; i < 20; ++i) o.add_file(bytes_of("f"), std::vector<std::string>{"a:" + std::to_string(i % 3), "b"}, 100 + i);
    o.refresh_bloom(500);
    o.rotate_group_key("mallory");
    const Owner r = Owner::restore(o.snapshot());
    CHECK(r.keys() == o.keys());
    CHECK(r.table() == o.table());
    CHECK(r.bloom() == o.bloom());
    CHECK(r.last_refresh() == 500);
    CHECK(r.mode() == Mode::full);
    CHECK(r.is_revoked("mallory"));
    CHECK(r.active_users() == o.active_users());
    CHECK(r.snapshot() == o.snapshot());

    Bytes bad = o.snapshot();
    bad[0] ^= 1;
    CHECK_THROWS_AS(Owner::restore(bad), FormatError);
    const Bytes good = o.snapshot();
    CHECK_THROWS_AS(Owner::restore(ByteView(good).first(good.size() - 1)), FormatError);
}

TEST_CASE("verification checks") {
    const Block k_mac = crypto::random_block();
    const std::string w = "heartbeat:75";
    std::vector<Bytes> cts{bytes_of("c1"), bytes_of("c2"), bytes_of("c3")};
    std::vector<FileId> ids{crypto::random_file_id(), crypto::random_file_id(), crypto::random_file_id()};
    Block gamma{};
    for (const auto& c : cts) {
        const Block m = crypto::mac_generate(k_mac, {view(c), view(w)});
        for (std::size_t i = 0; i < kLambda; ++i) gamma[i] ^= m[i];
    }
    BloomFilter bf(64, 2);
    bf.add(bytes_of("x"));
    Proof proof{sign_bloom(k_mac, bf, 1000), gamma};

    CHECK(sse_verify(k_mac, w, 3, ids, cts, proof, 1000));
    CHECK(sse_verify(k_mac, w, 3, ids, cts, proof, 2200));
    const VerifyReport late = sse_verify_report(k_mac, w, 3, ids, cts, proof, 2201);
    CHECK_FALSE(late.fresh);
    CHECK(late.cardinality);
    CHECK_FALSE(late.ok());
    CHECK(sse_verify(k_mac, w, 3, ids, cts, proof, 2201, {1200, false}));

    CHECK_FALSE(sse_verify_report(k_mac, w, 4, ids, cts, proof, 1000).cardinality);
    CHECK_FALSE(sse_verify_report(k_mac, "heartbeat:76", 3, ids, cts, proof, 1000).aggregate);

    Proof flipped = proof;
    BloomFilter tampered = bf;
    tampered.flip_bit(63);
    flipped.bloom.filter = std::make_shared<const BloomFilter>(tampered);
    const VerifyReport rf = sse_verify_report(k_mac, w, 3, ids, cts, flipped, 1000);
    CHECK_FALSE(rf.bloom_mac);
    CHECK(rf.aggregate);

    auto short_ids = ids;
    auto short_cts = cts;
    short_ids.pop_back();
    short_cts.pop_back();
    CHECK_FALSE(sse_verify(k_mac, w, 3, short_ids, short_cts, proof, 1000));
}

}
