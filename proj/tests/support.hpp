#pragma once

#include <string>
#include <vector>

#include "dsse/bytes.hpp"
#include "dsse/owner.hpp"
#include "dsse/server.hpp"

namespace testing {

inline dsse::Block key_from_hex(std::string_view hex) { return dsse::to_array<dsse::kLambda>(dsse::from_hex(hex)); }

inline dsse::Block sequential_key() {
    dsse::Block k;
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<std::uint8_t>(i);
    return k;
}

inline dsse::Bytes bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

inline dsse::OwnerConfig small_config(dsse::Mode mode, std::uint64_t capacity = 20'000) {
    dsse::OwnerConfig c;
    c.mode = mode;
    c.bloom.capacity = capacity;
    return c;
}

inline dsse::ServerConfig server_for(const dsse::Owner& owner) {
    dsse::ServerConfig sc;
    sc.mode = owner.mode();
    sc.bloom = owner.config().bloom;
    sc.group = owner.keys().group;
    return sc;
}

/// Owner plus server wired directly, no transport.
struct Pair {
    dsse::Owner owner;
    dsse::Server server;
    std::uint64_t clock = 1'000'000;

    explicit Pair(dsse::Mode mode, std::uint64_t capacity = 20'000)
        : owner(dsse::Owner::generate(small_config(mode, capacity))), server(server_for(owner)) {
        if (mode == dsse::Mode::full) server.refresh(owner.signed_bloom(clock));
    }

    dsse::FileId add(const std::vector<std::string>& keywords, std::string body = "file") {
        clock += 600;
        auto payload = owner.add_file(bytes_of(body + std::to_string(clock)), keywords, clock);
        server.add(payload);
        return payload.file_id;
    }

    dsse::SearchResult search(const std::string& w) { return server.search(owner.gen_token(w)); }
};

}  // namespace testing

namespace testing {

/// Remove the PRF mask from an index entry: tau_prev || K_prev (|| gamma).
inline dsse::Bytes unmask(const dsse::Block& k_prf, std::string_view w, std::uint64_t cnt,
                          const dsse::MaskedEntry& mu) {
    const dsse::Block k = dsse::crypto::chain_key(k_prf, w, cnt);
    const dsse::Block tau = dsse::crypto::chain_label(k_prf, w, cnt);
    dsse::Bytes out(mu.view().begin(), mu.view().end());
    if (mu.size == 3 * dsse::kLambda) {
        const auto m = dsse::crypto::prf3(k, tau);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= m[i];
    } else {
        const auto m = dsse::crypto::prf2(k, tau);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= m[i];
    }
    return out;
}

inline dsse::Bytes concat(std::initializer_list<dsse::ByteView> parts) {
    dsse::Bytes out;
    for (auto p : parts) dsse::append(out, p);
    return out;
}

}  // namespace testing
