#pragma once

#include <cstdint>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dsse/bloom.hpp"
#include "dsse/crypto.hpp"
#include "dsse/protocol.hpp"

namespace dsse {

/// Misbehaviours the server can be switched into for verifiability testing.
enum class Adversary : std::uint8_t {
    honest,
    drop_result,     // omit the newest file id from every result
    swap_keyword,    // answer with another keyword's cached result and gamma
    stale_bloom,     // serve the oldest retained (filter, sigma, T)
    flip_bloom_bit,  // flip one filter bit, keep sigma
    forge_gamma,     // random gamma in the proof
};

std::string_view adversary_name(Adversary a);
Adversary parse_adversary(std::string_view s);
inline constexpr Adversary kAllAdversaries[] = {Adversary::drop_result, Adversary::swap_keyword,
                                                Adversary::stale_bloom, Adversary::flip_bloom_bit,
                                                Adversary::forge_gamma};

struct ServerConfig {
    Mode mode = Mode::full;
    BloomParams bloom{0x1p-30, 52'560 * 15};
    GroupKey group{};
    /// Drop interior chain entries once a search has merged them into the head.
    bool prune_on_merge = false;
    /// Retain a (filter, sigma, T) snapshot every `history_stride` payloads,
    /// keeping the last `history_depth` of them. 0 disables retention.
    std::uint32_t history_stride = 8;
    std::uint32_t history_depth = 8;
};

struct BlockHash {
    std::size_t operator()(const Block& b) const noexcept {
        std::size_t h;
        std::memcpy(&h, b.data(), sizeof h);
        return h;
    }
};

struct ServerStats {
    std::uint64_t searches = 0;
    std::uint64_t lookups = 0;
    std::uint64_t merges = 0;
};

/// Cloud server. Not internally synchronized; ServerEndpoint serializes access.
class Server {
public:
    explicit Server(const ServerConfig& config);

    Mode mode() const noexcept { return config_.mode; }
    const ServerConfig& config() const noexcept { return config_; }

    /// Store index entries, the ciphertext and (full mode) the new sigma/T.
    /// Throws ProtocolError on duplicate labels, mode mismatch or non-monotonic T.
    void add(const AddPayload& payload);

    /// Replace BF_s and (sigma, T) wholesale. Full mode only.
    void refresh(const RefreshPayload& payload);

    /// Walk the chain named by the token, merge it into its head, attach the proof.
    /// Throws StaleEpochError, NotFoundError, ProtocolError.
    SearchResult search(const SearchToken& token);

    /// Current (BF_s, sigma, T), subject to the adversary setting. Full mode only.
    SignedBloom get_bloom();

    void rotate(const GroupKey& group);
    const GroupKey& group() const noexcept { return config_.group; }

    void set_adversary(Adversary behavior) { adversary_ = behavior; }
    Adversary adversary() const noexcept { return adversary_; }

    std::size_t entry_count() const noexcept { return table_.size(); }
    std::size_t file_count() const noexcept { return files_.size(); }
    const BloomFilter& bloom() const noexcept { return *bloom_; }
    const ServerStats& stats() const noexcept { return stats_; }
    const Bytes* file(const FileId& id) const;

    Bytes snapshot() const;
    static Server restore(ByteView data);

private:
    struct ChainSlot {
        MaskedEntry mu;
        FileId id{};
    };
    /// Merge at the chain head: stop sign followed by every id found from this head.
    struct MergedSlot {
        std::vector<FileId> ids;
        Block gamma{};
    };
    struct Slot {
        ChainSlot chain;
        std::uint32_t merged = kNoMerge;  // index into merged_
    };
    static constexpr std::uint32_t kNoMerge = UINT32_MAX;

    BloomFilter& mutable_bloom();
    void record_history();
    SignedBloom current_signed() const;
    SignedBloom served_bloom();
    std::pair<Block, Block> open_token(const SearchToken& token) const;
    void corrupt(const Block& head, SearchResult& result);

    ServerConfig config_;
    std::unordered_map<Block, Slot, BlockHash> table_;
    std::vector<MergedSlot> merged_;
    std::unordered_map<FileId, Bytes, BlockHash> files_;
    std::shared_ptr<BloomFilter> bloom_;
    Block sigma_{};
    std::uint64_t timestamp_ = 0;
    bool have_signature_ = false;
    std::uint64_t payloads_ = 0;
    std::deque<SignedBloom> history_;
    ServerStats stats_;

    Adversary adversary_ = Adversary::honest;
    std::mt19937_64 adversary_rng_{0x5eed};
    std::map<Block, std::pair<std::vector<FileId>, Block>> result_cache_;
};

}  // namespace dsse
