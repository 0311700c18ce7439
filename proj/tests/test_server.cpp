#include <doctest.h>

#include <set>

#include "dsse/crypto.hpp"
#include "dsse/errors.hpp"
#include "dsse/server.hpp"
#include "dsse/user.hpp"
#include "support.hpp"

using namespace dsse;
using testing::bytes_of;
using testing::Pair;

TEST_SUITE("server") {

TEST_CASE("first search walks the whole chain, later searches start at the merge") {
    for (Mode mode : {Mode::basic, Mode::full}) {
        CAPTURE(mode_name(mode));
        Pair p(mode);
        std::vector<FileId> ids;
        for (int i = 0; i < 12; ++i) ids.insert(ids.begin(), p.add({"w", "x" + std::to_string(i)}));
        SearchResult r = p.search("w");
        CHECK(r.lookups == 12);
        CHECK(r.ids == ids);
        CHECK(r.ciphertexts.size() == 12);
        CHECK(p.server.stats().merges == 1);

        r = p.search("w");
        CHECK(r.lookups == 1);
        CHECK(r.ids == ids);

        for (int i = 0; i < 3; ++i) ids.insert(ids.begin(), p.add({"w"}));
        r = p.search("w");
        CHECK(r.lookups == 4);
        CHECK(r.ids == ids);
        CHECK(r.proof.has_value() == (mode == Mode::full));
        if (mode == Mode::full) CHECK(r.proof->gamma == p.owner.lookup("w")->gamma);
    }
}

TEST_CASE("pruning interior entries keeps results") {
    Pair p(Mode::full);
    p.server = Server([&] {
        auto sc = testing::server_for(p.owner);
        sc.prune_on_merge = true;
        return sc;
    }());
    p.server.refresh(p.owner.signed_bloom(p.clock));
    std::vector<FileId> ids;
    for (int i = 0; i < 10; ++i) ids.insert(ids.begin(), p.add({"w", "v"}));
    CHECK(p.server.entry_count() == 20);
    CHECK(p.search("w").ids == ids);
    CHECK(p.server.entry_count() == 11);
    ids.insert(ids.begin(), p.add({"w"}));
    const SearchResult r = p.search("w");
    CHECK(r.ids == ids);
    CHECK(r.lookups == 2);
    CHECK(p.search("v").ids.size() == 10);
}

TEST_CASE("proof carries the latest signed filter") {
    Pair p(Mode::full);
    p.add({"a"});
    p.add({"b"});
    const SearchResult r = p.search("a");
    REQUIRE(r.proof);
    CHECK(r.proof->bloom.timestamp == p.clock);
    CHECK(*r.proof->bloom.filter == p.owner.bloom());
    CHECK(r.proof->bloom.sigma == bloom_mac(p.owner.keys().k_mac, p.owner.bloom(), p.clock));
    CHECK(p.server.get_bloom() == r.proof->bloom);
    CHECK(p.server.bloom() == p.owner.bloom());
}

TEST_CASE("ingestion rejects malformed payloads") {
    Pair p(Mode::full);
    const AddPayload a = p.owner.add_file(bytes_of("one"), std::vector<std::string>{"w"}, p.clock + 10);
    p.server.add(a);
    try {
        p.server.add(a);
        FAIL("duplicate accepted");
    } catch (const ProtocolError& e) {
        CHECK(e.fault() == ProtocolError::Fault::duplicate_label);
    }
    AddPayload same_label = p.owner.add_file(bytes_of("two"), std::vector<std::string>{"v"}, p.clock + 20);
    same_label.entries[0].tau = a.entries[0].tau;
    CHECK_THROWS_AS(p.server.add(same_label), ProtocolError);

    const AddPayload old = p.owner.add_file(bytes_of("three"), std::vector<std::string>{"u"}, p.clock + 5);
    try {
        p.server.add(old);
        FAIL("non-monotonic timestamp accepted");
    } catch (const ProtocolError& e) {
        CHECK(e.fault() == ProtocolError::Fault::non_monotonic);
    }

    AddPayload wrong_mode = p.owner.add_file(bytes_of("four"), std::vector<std::string>{"t"}, p.clock + 30);
    wrong_mode.mode = Mode::basic;
    CHECK_THROWS_AS(p.server.add(wrong_mode), ProtocolError);
    // Rejected payloads leave no trace.
    CHECK(p.server.entry_count() == 1);
    CHECK(p.server.file_count() == 1);
}

TEST_CASE("token handling") {
    Pair p(Mode::full);
    p.add({"w"});
    CHECK_THROWS_AS(p.search("absent-is-not-even-tokenizable"), NotFoundError);

    UserCredentials u = p.owner.enroll_user("u");
    CHECK_THROWS_AS(p.server.search(token_for_counter(u, "w", 2).token), NotFoundError);
    CHECK_THROWS_AS(p.server.search(token_for_counter(u, "nope", 1).token), NotFoundError);

    SearchToken garbage = p.owner.gen_token("w");
    garbage.body[3] ^= 1;
    CHECK_THROWS_AS(p.server.search(garbage), ProtocolError);

    const GroupKey g2 = p.owner.rotate_group_key("x");
    p.server.rotate(g2);
    CHECK_THROWS_AS(p.server.search(token_for_counter(u, "w", 1).token), StaleEpochError);
    CHECK(p.search("w").ids.size() == 1);
    CHECK_THROWS_AS(p.server.rotate(g2), ProtocolError);

    Pair b(Mode::basic);
    b.add({"w"});
    CHECK_THROWS_AS(b.server.get_bloom(), ProtocolError);
    CHECK_THROWS_AS(b.server.search(p.owner.gen_token("w")), ProtocolError);
}

TEST_CASE("snapshot round trip preserves merged state") {
    Pair p(Mode::full);
    for (int i = 0; i < 6; ++i) p.add({"w", "v" + std::to_string(i % 2)});
    const SearchResult before = p.search("w");
    p.add({"w"});
    const Bytes snap = p.server.snapshot();
    Server restored = Server::restore(snap);
    CHECK(restored.snapshot() == snap);
    CHECK(restored.entry_count() == p.server.entry_count());
    CHECK(restored.get_bloom() == p.server.get_bloom());
    const SearchResult a = p.search("w");
    const SearchResult b = restored.search(p.owner.gen_token("w"));
    CHECK(a.ids == b.ids);
    CHECK(a.lookups == 2);
    CHECK(b.lookups == 2);
    CHECK(a.ids.size() == before.ids.size() + 1);

    Bytes bad = snap;
    bad[0] ^= 0xff;
    CHECK_THROWS_AS(Server::restore(bad), FormatError);
    CHECK_THROWS_AS(Server::restore(ByteView(snap).first(snap.size() / 2)), FormatError);
}

TEST_CASE("adversarial behaviours") {
    Pair p(Mode::full);
    for (int i = 0; i < 40; ++i) p.add({"w", "v", "k" + std::to_string(i % 4)});
    const SearchResult honest = p.search("w");
    p.search("k1");

    SUBCASE("drop_result") {
        p.server.set_adversary(Adversary::drop_result);
        const SearchResult r = p.search("w");
        CHECK(r.ids.size() == honest.ids.size() - 1);
        CHECK(r.ids.front() == honest.ids[1]);
    }
    SUBCASE("swap_keyword prefers an equally sized result") {
        p.server.set_adversary(Adversary::swap_keyword);
        const SearchResult r = p.search("v");
        CHECK(r.ids.size() == honest.ids.size());
        CHECK(r.ids == honest.ids);
        CHECK(r.proof->gamma == p.owner.lookup("w")->gamma);
    }
    SUBCASE("forge_gamma") {
        p.server.set_adversary(Adversary::forge_gamma);
        const SearchResult r = p.search("w");
        CHECK(r.ids == honest.ids);
        CHECK(r.proof->gamma != honest.proof->gamma);
    }
    SUBCASE("flip_bloom_bit") {
        p.server.set_adversary(Adversary::flip_bloom_bit);
        const SignedBloom b = p.server.get_bloom();
        CHECK(b.sigma == honest.proof->bloom.sigma);
        CHECK_FALSE(*b.filter == *honest.proof->bloom.filter);
        CHECK(p.server.bloom() == p.owner.bloom());  // the stored filter is untouched
    }
    SUBCASE("stale_bloom") {
        p.server.set_adversary(Adversary::stale_bloom);
        const SignedBloom b = p.server.get_bloom();
        CHECK(b.timestamp < p.clock);
        CHECK(b.sigma == bloom_mac(p.owner.keys().k_mac, *b.filter, b.timestamp));
    }
    CHECK(parse_adversary(adversary_name(Adversary::stale_bloom)) == Adversary::stale_bloom);
    CHECK_THROWS_AS(parse_adversary("bogus"), UsageError);
}

}
