#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsse/bloom.hpp"
#include "dsse/crypto.hpp"
#include "dsse/protocol.hpp"

namespace dsse {

struct OwnerConfig {
    Mode mode = Mode::full;
    BloomParams bloom{0x1p-30, 52'560 * 15};
};

/// TBL_c row. gamma is only meaningful in full mode.
struct KeywordState {
    std::uint64_t cnt = 0;
    Block gamma{};
    bool operator==(const KeywordState&) const = default;
};

/// Key material handed to an authorized user.
struct UserCredentials {
    std::string name;
    Block k_prf{};
    Block k_se{};
    Block k_mac{};
    GroupKey group{};
    std::uint64_t max_counter = std::uint64_t{1} << 31;

    bool operator==(const UserCredentials&) const = default;
};

/// Data owner (IoT gateway). Single writer: add_file, refresh_bloom and
/// rotate_group_key must not run concurrently with anything else.
class Owner {
public:
    /// GenKey: fresh keys, empty TBL_c and BF_c, group-key epoch 1.
    static Owner generate(const OwnerConfig& config);

    Mode mode() const noexcept { return config_.mode; }
    const OwnerConfig& config() const noexcept { return config_; }
    const KeyBundle& keys() const noexcept { return keys_; }

    /// AddFile. Encrypts the file, extends each keyword's chain and, in full
    /// mode, updates gamma and BF_c and signs BF_c || now.
    AddPayload add_file(ByteView file, std::span<const std::string> keywords, std::uint64_t now);

    /// GenToken for the latest counter of w. Throws NotFoundError for unknown keywords.
    SearchToken gen_token(std::string_view keyword) const;

    /// Periodic refresh: replace BF_c with the digit embeddings of every
    /// current counter and sign it. Full mode only.
    RefreshPayload refresh_bloom(std::uint64_t now);

    /// The current BF_c signed at `now`; used to seed a freshly created server.
    SignedBloom signed_bloom(std::uint64_t now) const;

    /// Issue credentials for a new (or re-keyed) user. Throws UsageError if revoked.
    UserCredentials enroll_user(const std::string& name);
    /// Replace r, bump the epoch and mark `revoked_user` as revoked.
    GroupKey rotate_group_key(const std::string& revoked_user);
    bool is_revoked(const std::string& name) const { return revoked_.contains(name); }
    std::vector<std::string> active_users() const;

    std::optional<KeywordState> lookup(std::string_view keyword) const;
    const std::map<std::string, KeywordState, std::less<>>& table() const noexcept { return table_; }
    const BloomFilter& bloom() const noexcept { return bloom_; }
    std::uint64_t last_refresh() const noexcept { return last_refresh_; }

    /// Bytes TBL_c occupies in its snapshot encoding.
    std::size_t table_bytes() const;

    Bytes snapshot() const;
    static Owner restore(ByteView data);

private:
    Owner(const OwnerConfig& config, const KeyBundle& keys);

    OwnerConfig config_;
    KeyBundle keys_;
    std::map<std::string, KeywordState, std::less<>> table_;
    BloomFilter bloom_;
    std::uint64_t last_refresh_ = 0;
    std::set<std::string, std::less<>> users_;
    std::set<std::string, std::less<>> revoked_;
};

/// Which SSEVerify checks held.
struct VerifyReport {
    bool cardinality = false;  // |rst| == cnt
    bool aggregate = false;    // XOR of Mac(K_Mac, C_i || w) == gamma
    bool bloom_mac = false;    // Mac(K_Mac, BF_s || T) == sigma
    bool fresh = false;        // now - T <= window

    bool ok() const { return cardinality && aggregate && bloom_mac && fresh; }
};

struct VerifyOptions {
    std::uint64_t freshness_window = 1200;
    /// The owner knows cnt and may skip the filter MAC and freshness checks.
    bool check_bloom = true;
};

VerifyReport sse_verify_report(const Block& k_mac, std::string_view keyword, std::uint64_t cnt,
                               std::span<const FileId> ids, std::span<const Bytes> ciphertexts,
                               const Proof& proof, std::uint64_t now, const VerifyOptions& options = {});

/// SSEVerify: true iff every enabled check holds.
bool sse_verify(const Block& k_mac, std::string_view keyword, std::uint64_t cnt, std::span<const FileId> ids,
                std::span<const Bytes> ciphertexts, const Proof& proof, std::uint64_t now,
                const VerifyOptions& options = {});

}  // namespace dsse
