#include "dsse/owner.hpp"

#include <bit>
#include <unordered_set>

#include "dsse/codec.hpp"
#include "dsse/errors.hpp"
#include "dsse/kernels.hpp"

namespace dsse {

namespace {

constexpr std::string_view kSnapshotMagic = "DSSEOWN1";

void validate_keywords(std::span<const std::string> keywords) {
    if (keywords.empty()) throw UsageError("add_file: keyword set is empty");
    std::unordered_set<std::string_view> seen;
    for (const auto& w : keywords) {
        if (w.empty()) throw UsageError("add_file: empty keyword");
        if (!seen.insert(w).second) throw UsageError("add_file: duplicate keyword '" + w + "'");
    }
}

}  // namespace

Owner::Owner(const OwnerConfig& config, const KeyBundle& keys)
    : config_(config), keys_(keys), bloom_(config.bloom) {}

Owner Owner::generate(const OwnerConfig& config) { return Owner(config, KeyBundle::generate()); }

AddPayload Owner::add_file(ByteView file, std::span<const std::string> keywords, std::uint64_t now) {
    if (file.empty()) throw UsageError("add_file: file is empty");
    validate_keywords(keywords);

    const bool full = mode() == Mode::full;
    AddPayload payload;
    payload.mode = mode();
    payload.file_id = crypto::random_file_id();
    payload.ciphertext = crypto::se_encrypt(keys_.k_se, file);
    payload.entries.reserve(keywords.size());

    for (const auto& w : keywords) {
        KeywordState& row = table_[w];
        const std::uint64_t cnt_prev = row.cnt;
        const Block tau_prev = crypto::chain_label(keys_.k_prf, w, cnt_prev);
        const Block k_prev = cnt_prev == 0 ? kZeroBlock : crypto::chain_key(keys_.k_prf, w, cnt_prev);
        const std::uint64_t cnt = cnt_prev + 1;
        const Block k_cnt = crypto::chain_key(keys_.k_prf, w, cnt);

        IndexEntry entry;
        entry.tau = crypto::chain_label(keys_.k_prf, w, cnt);
        entry.mu.size = static_cast<std::uint8_t>(mask_width(mode()));
        auto mu = std::span(entry.mu.bytes).first(entry.mu.size);
        std::copy(tau_prev.begin(), tau_prev.end(), mu.begin());
        std::copy(k_prev.begin(), k_prev.end(), mu.begin() + kLambda);
        if (full) {
            const Block tag = crypto::mac_generate(keys_.k_mac, {view(payload.ciphertext), view(w)});
            kernels::xor_into(row.gamma, tag);
            std::copy(row.gamma.begin(), row.gamma.end(), mu.begin() + 2 * kLambda);
            kernels::xor_into(mu, crypto::prf3(k_cnt, entry.tau));
            bloom_.add(entry.tau);
        } else {
            kernels::xor_into(mu, crypto::prf2(k_cnt, entry.tau));
        }
        row.cnt = cnt;
        payload.entries.push_back(entry);
    }

    if (full) {
        payload.timestamp = now;
        payload.sigma = bloom_mac(keys_.k_mac, bloom_, now);
    }
    return payload;
}

SearchToken Owner::gen_token(std::string_view keyword) const {
    auto row = lookup(keyword);
    if (!row) throw NotFoundError("no file has been added with keyword '" + std::string(keyword) + "'");
    const Block tau = crypto::chain_label(keys_.k_prf, keyword, row->cnt);
    const Block k_cnt = crypto::chain_key(keys_.k_prf, keyword, row->cnt);
    Bytes plain;
    append(plain, tau);
    append(plain, k_cnt);
    if (mode() == Mode::basic) return {Mode::basic, 0, std::move(plain)};
    return {Mode::full, keys_.group.epoch, crypto::se_encrypt(keys_.group.key, plain)};
}

RefreshPayload Owner::refresh_bloom(std::uint64_t now) {
    if (mode() != Mode::full) throw UsageError("refresh_bloom: basic mode has no Bloom filter");
    BloomFilter fresh(config_.bloom);
    for (const auto& [w, row] : table_) embed_counter(fresh, keys_.k_prf, w, row.cnt);
    bloom_ = fresh;
    last_refresh_ = now;
    return sign_bloom(keys_.k_mac, std::move(fresh), now);
}

SignedBloom Owner::signed_bloom(std::uint64_t now) const {
    if (mode() != Mode::full) throw UsageError("signed_bloom: basic mode has no Bloom filter");
    return sign_bloom(keys_.k_mac, bloom_, now);
}

UserCredentials Owner::enroll_user(const std::string& name) {
    if (name.empty()) throw UsageError("enroll_user: empty user name");
    if (revoked_.contains(name)) throw UsageError("enroll_user: '" + name + "' has been revoked");
    users_.insert(name);
    return {name, keys_.k_prf, keys_.k_se, keys_.k_mac, keys_.group};
}

GroupKey Owner::rotate_group_key(const std::string& revoked_user) {
    keys_.group = GroupKey::generate(keys_.group.epoch + 1);
    if (!revoked_user.empty()) {
        users_.erase(revoked_user);
        revoked_.insert(revoked_user);
    }
    return keys_.group;
}

std::vector<std::string> Owner::active_users() const { return {users_.begin(), users_.end()}; }

std::optional<KeywordState> Owner::lookup(std::string_view keyword) const {
    auto it = table_.find(keyword);
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

std::size_t Owner::table_bytes() const {
    const std::size_t per_row = 4 + 8 + (mode() == Mode::full ? kLambda : 0);
    std::size_t total = 4;
    for (const auto& [w, row] : table_) total += per_row + w.size();
    return total;
}

Bytes Owner::snapshot() const {
    Writer out;
    out.raw(view(kSnapshotMagic));
    out.u8(static_cast<std::uint8_t>(mode()));
    out.u64(std::bit_cast<std::uint64_t>(config_.bloom.target_fp));
    out.u64(config_.bloom.capacity);
    out.raw(keys_.k_prf);
    out.raw(keys_.k_se);
    out.raw(keys_.k_mac);
    out.raw(keys_.group.key);
    out.u64(keys_.group.epoch);
    out.u64(last_refresh_);
    out.u32(static_cast<std::uint32_t>(table_.size()));
    for (const auto& [w, row] : table_) {
        out.str(w);
        out.u64(row.cnt);
        if (mode() == Mode::full) out.raw(row.gamma);
    }
    if (mode() == Mode::full) out.blob(bloom_.serialize());
    out.u32(static_cast<std::uint32_t>(users_.size()));
    for (const auto& u : users_) out.str(u);
    out.u32(static_cast<std::uint32_t>(revoked_.size()));
    for (const auto& u : revoked_) out.str(u);
    return out.take();
}

Owner Owner::restore(ByteView data) {
    Reader in(data);
    if (!std::ranges::equal(in.raw(kSnapshotMagic.size()), view(kSnapshotMagic)))
        throw FormatError("owner snapshot: bad magic", 0);
    OwnerConfig config;
    const std::uint8_t mode = in.u8();
    if (mode != 0x01 && mode != 0x02) throw FormatError("owner snapshot: bad mode", in.offset() - 1);
    config.mode = static_cast<Mode>(mode);
    config.bloom.target_fp = std::bit_cast<double>(in.u64());
    config.bloom.capacity = in.u64();
    KeyBundle keys;
    keys.k_prf = in.fixed<kLambda>();
    keys.k_se = in.fixed<kLambda>();
    keys.k_mac = in.fixed<kLambda>();
    keys.group.key = in.fixed<kLambda>();
    keys.group.epoch = in.u64();
    Owner owner(config, keys);
    owner.last_refresh_ = in.u64();
    const std::uint32_t rows = in.count(12);
    for (std::uint32_t i = 0; i < rows; ++i) {
        std::string w = in.str();
        KeywordState row;
        row.cnt = in.u64();
        if (config.mode == Mode::full) row.gamma = in.fixed<kLambda>();
        owner.table_.emplace(std::move(w), row);
    }
    if (config.mode == Mode::full) owner.bloom_ = BloomFilter::deserialize(in.blob());
    for (std::uint32_t i = 0, n = in.count(4); i < n; ++i) owner.users_.insert(in.str());
    for (std::uint32_t i = 0, n = in.count(4); i < n; ++i) owner.revoked_.insert(in.str());
    in.expect_end();
    return owner;
}

VerifyReport sse_verify_report(const Block& k_mac, std::string_view keyword, std::uint64_t cnt,
                               std::span<const FileId> ids, std::span<const Bytes> ciphertexts,
                               const Proof& proof, std::uint64_t now, const VerifyOptions& options) {
    VerifyReport report;
    report.cardinality = ids.size() == cnt && ciphertexts.size() == ids.size();

    Block acc{};
    for (const Bytes& c : ciphertexts) kernels::xor_into(acc, crypto::mac_generate(k_mac, {view(c), view(keyword)}));
    report.aggregate = crypto::equal(acc, proof.gamma);

    if (!options.check_bloom) {
        report.bloom_mac = report.fresh = true;
        return report;
    }
    if (proof.bloom.filter)
        report.bloom_mac =
            crypto::equal(bloom_mac(k_mac, *proof.bloom.filter, proof.bloom.timestamp), proof.bloom.sigma);
    const std::uint64_t t = proof.bloom.timestamp;
    report.fresh = (now >= t ? now - t : t - now) <= options.freshness_window;
    return report;
}

bool sse_verify(const Block& k_mac, std::string_view keyword, std::uint64_t cnt, std::span<const FileId> ids,
                std::span<const Bytes> ciphertexts, const Proof& proof, std::uint64_t now,
                const VerifyOptions& options) {
    return sse_verify_report(k_mac, keyword, cnt, ids, ciphertexts, proof, now, options).ok();
}

}  // namespace dsse
