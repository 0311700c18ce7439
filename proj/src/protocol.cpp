#include "dsse/protocol.hpp"

#include "dsse/crypto.hpp"
#include "dsse/errors.hpp"

namespace dsse {

std::string_view mode_name(Mode m) { return m == Mode::basic ? "basic" : "full"; }

Mode parse_mode(std::string_view s) {
    if (s == "basic") return Mode::basic;
    if (s == "full") return Mode::full;
    throw UsageError("unknown mode '" + std::string(s) + "' (expected basic or full)");
}

Block bloom_mac(const Block& k_mac, const BloomFilter& bf, std::uint64_t timestamp) {
    Bytes t;
    put_u64_be(t, timestamp);
    const auto header = bf.header();
    return crypto::mac_generate(k_mac, {view(header), bf.bits(), view(t)});
}

SignedBloom sign_bloom(const Block& k_mac, BloomFilter bf, std::uint64_t timestamp) {
    const Block sigma = bloom_mac(k_mac, bf, timestamp);
    return {std::make_shared<const BloomFilter>(std::move(bf)), sigma, timestamp};
}

}  // namespace dsse
