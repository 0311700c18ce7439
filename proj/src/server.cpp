#include "dsse/server.hpp"

#include <algorithm>
#include <bit>
#include <unordered_set>

#include "dsse/codec.hpp"
#include "dsse/errors.hpp"
#include "dsse/kernels.hpp"

namespace dsse {

namespace {

constexpr std::string_view kSnapshotMagic = "DSSESRV1";
constexpr std::uint8_t kMergedMarker = 0x00;  // stop sign
constexpr std::uint8_t kChainMarker = 0x01;
constexpr std::size_t kResultCacheLimit = 1024;

bool is_zero(const Block& b) { return b == kZeroBlock; }

}  // namespace

std::string_view adversary_name(Adversary a) {
    switch (a) {
        case Adversary::honest:
            return "honest";
        case Adversary::drop_result:
            return "drop_result";
        case Adversary::swap_keyword:
            return "swap_keyword";
        case Adversary::stale_bloom:
            return "stale_bloom";
        case Adversary::flip_bloom_bit:
            return "flip_bloom_bit";
        case Adversary::forge_gamma:
            return "forge_gamma";
    }
    return "unknown";
}

Adversary parse_adversary(std::string_view s) {
    for (Adversary a : {Adversary::honest, Adversary::drop_result, Adversary::swap_keyword,
                        Adversary::stale_bloom, Adversary::flip_bloom_bit, Adversary::forge_gamma})
        if (adversary_name(a) == s) return a;
    throw UsageError("unknown adversary behavior '" + std::string(s) + "'");
}

Server::Server(const ServerConfig& config)
    : config_(config), bloom_(std::make_shared<BloomFilter>(config.bloom)) {}

BloomFilter& Server::mutable_bloom() {
    // Snapshots and proofs share the filter; copy before the first write after sharing.
    if (bloom_.use_count() > 1) bloom_ = std::make_shared<BloomFilter>(*bloom_);
    return *bloom_;
}

SignedBloom Server::current_signed() const { return {bloom_, sigma_, timestamp_}; }

void Server::record_history() {
    ++payloads_;
    if (config_.history_stride == 0 || config_.history_depth == 0) return;
    if (payloads_ % config_.history_stride != 0) return;
    history_.push_back(current_signed());
    while (history_.size() > config_.history_depth) history_.pop_front();
}

void Server::add(const AddPayload& payload) {
    if (payload.mode != mode()) throw ProtocolError("add: payload mode does not match server mode");
    const bool full = mode() == Mode::full;
    if (full && have_signature_ && payload.timestamp < timestamp_)
        throw ProtocolError("add: timestamp " + std::to_string(payload.timestamp) + " precedes " +
                                std::to_string(timestamp_),
                            ProtocolError::Fault::non_monotonic);
    if (files_.contains(payload.file_id)) throw ProtocolError("add: duplicate file id", ProtocolError::Fault::duplicate_label);
    std::unordered_set<Block, BlockHash> fresh;
    for (const auto& e : payload.entries) {
        if (e.mu.size != mask_width(mode())) throw ProtocolError("add: masked entry has wrong width");
        if (table_.contains(e.tau) || !fresh.insert(e.tau).second) throw ProtocolError("add: duplicate label", ProtocolError::Fault::duplicate_label);
    }

    for (const auto& e : payload.entries) table_.emplace(e.tau, Slot{ChainSlot{e.mu, payload.file_id}});
    files_.emplace(payload.file_id, payload.ciphertext);
    if (full) {
        BloomFilter& bf = mutable_bloom();
        for (const auto& e : payload.entries) bf.add(e.tau);
        sigma_ = payload.sigma;
        timestamp_ = payload.timestamp;
        have_signature_ = true;
    }
    record_history();
}

void Server::refresh(const RefreshPayload& payload) {
    if (mode() != Mode::full) throw ProtocolError("refresh: basic mode keeps no Bloom filter", ProtocolError::Fault::unsupported);
    if (!payload.filter) throw ProtocolError("refresh: missing filter");
    if (have_signature_ && payload.timestamp < timestamp_) throw ProtocolError("refresh: timestamp went backwards", ProtocolError::Fault::non_monotonic);
    bloom_ = std::make_shared<BloomFilter>(*payload.filter);
    sigma_ = payload.sigma;
    timestamp_ = payload.timestamp;
    have_signature_ = true;
    record_history();
}

void Server::rotate(const GroupKey& group) {
    if (group.epoch <= config_.group.epoch)
        throw ProtocolError("rotate: epoch " + std::to_string(group.epoch) + " is not newer than " +
                            std::to_string(config_.group.epoch));
    config_.group = group;
}

std::pair<Block, Block> Server::open_token(const SearchToken& token) const {
    if (token.mode != mode()) throw ProtocolError("search: token mode does not match server mode");
    Bytes plain;
    if (mode() == Mode::full) {
        if (token.epoch != config_.group.epoch) throw StaleEpochError(token.epoch, config_.group.epoch);
        try {
            plain = crypto::se_decrypt(config_.group.key, token.body);
        } catch (const DecryptionError&) {
            throw ProtocolError("search: token does not decrypt under the current group key");
        }
    } else {
        plain = token.body;
    }
    if (plain.size() != 2 * kLambda) throw ProtocolError("search: token body must be 2*lambda bytes");
    return {to_array<kLambda>(view(plain)), to_array<kLambda>(ByteView(plain).subspan(kLambda))};
}

SearchResult Server::search(const SearchToken& token) {
    const auto [head, head_key] = open_token(token);
    const bool full = mode() == Mode::full;

    SearchResult result;
    Block gamma{};
    std::vector<Block> interior;
    Block label = head;
    Block key = head_key;
    for (bool first = true;; first = false) {
        auto it = table_.find(label);
        ++result.lookups;
        if (it == table_.end()) {
            if (first) throw NotFoundError("search: no index entry for the token's label");
            throw ProtocolError("search: chain broken after " + std::to_string(result.ids.size()) + " entries");
        }
        const Slot& slot = it->second;
        if (!first) interior.push_back(label);
        if (slot.merged != kNoMerge) {
            const MergedSlot& m = merged_[slot.merged];
            result.ids.insert(result.ids.end(), m.ids.begin(), m.ids.end());
            if (first) gamma = m.gamma;
            break;
        }
        result.ids.push_back(slot.chain.id);
        std::array<std::uint8_t, 3 * kLambda> plain = slot.chain.mu.bytes;
        auto unmasked = std::span(plain).first(slot.chain.mu.size);
        if (full)
            kernels::xor_into(unmasked, crypto::prf3(key, label));
        else
            kernels::xor_into(unmasked, crypto::prf2(key, label));
        std::copy_n(plain.begin(), kLambda, label.begin());
        std::copy_n(plain.begin() + kLambda, kLambda, key.begin());
        if (first && full) std::copy_n(plain.begin() + 2 * kLambda, kLambda, gamma.begin());
        if (is_zero(key)) break;
    }

    Slot& head_slot = table_.at(head);
    if (head_slot.merged == kNoMerge) {
        head_slot.merged = static_cast<std::uint32_t>(merged_.size());
        merged_.push_back({result.ids, gamma});
        ++stats_.merges;
        if (config_.prune_on_merge) {
            for (const Block& label_done : interior) {
                auto it = table_.find(label_done);
                if (it->second.merged != kNoMerge) std::vector<FileId>().swap(merged_[it->second.merged].ids);
                table_.erase(it);
            }
        }
    }

    result.ciphertexts.reserve(result.ids.size());
    for (const FileId& id : result.ids) {
        auto it = files_.find(id);
        if (it == files_.end()) throw ProtocolError("search: indexed file is missing from storage");
        result.ciphertexts.push_back(it->second);
    }
    if (full) result.proof = Proof{served_bloom(), gamma};

    ++stats_.searches;
    stats_.lookups += result.lookups;
    if (result_cache_.size() >= kResultCacheLimit) result_cache_.erase(result_cache_.begin());
    result_cache_[head] = {result.ids, gamma};
    corrupt(head, result);
    return result;
}

SignedBloom Server::get_bloom() {
    if (mode() != Mode::full) throw ProtocolError("get_bloom: basic mode keeps no Bloom filter", ProtocolError::Fault::unsupported);
    if (!have_signature_) throw NotFoundError("get_bloom: no signed filter received yet");
    return served_bloom();
}

SignedBloom Server::served_bloom() {
    switch (adversary_) {
        case Adversary::stale_bloom:
            if (!history_.empty()) return history_.front();
            break;
        case Adversary::flip_bloom_bit: {
            auto copy = std::make_shared<BloomFilter>(*bloom_);
            copy->flip_bit(static_cast<std::uint32_t>(adversary_rng_() % copy->bit_count()));
            return {copy, sigma_, timestamp_};
        }
        default:
            break;
    }
    return current_signed();
}

void Server::corrupt(const Block& head, SearchResult& result) {
    auto drop_newest = [&] {
        if (result.ids.empty()) return;
        result.ids.erase(result.ids.begin());
        result.ciphertexts.erase(result.ciphertexts.begin());
    };
    switch (adversary_) {
        case Adversary::drop_result:
            drop_newest();
            break;
        case Adversary::swap_keyword: {
            const std::pair<std::vector<FileId>, Block>* pick = nullptr;
            for (const auto& [label, cached] : result_cache_) {
                if (label == head) continue;
                if (cached.first.size() == result.ids.size()) {
                    pick = &cached;
                    break;
                }
                if (!pick) pick = &cached;
            }
            if (!pick) {
                drop_newest();
                break;
            }
            result.ids = pick->first;
            result.ciphertexts.clear();
            for (const FileId& id : result.ids) result.ciphertexts.push_back(files_.at(id));
            if (result.proof) result.proof->gamma = pick->second;
            break;
        }
        case Adversary::forge_gamma:
            if (result.proof) {
                Block forged;
                do {
                    for (auto& b : forged) b = static_cast<std::uint8_t>(adversary_rng_());
                } while (forged == result.proof->gamma);
                result.proof->gamma = forged;
            }
            break;
        default:
            break;
    }
}

const Bytes* Server::file(const FileId& id) const {
    auto it = files_.find(id);
    return it == files_.end() ? nullptr : &it->second;
}

Bytes Server::snapshot() const {
    Writer out;
    out.raw(view(kSnapshotMagic));
    out.u8(static_cast<std::uint8_t>(mode()));
    out.u64(std::bit_cast<std::uint64_t>(config_.bloom.target_fp));
    out.u64(config_.bloom.capacity);
    out.raw(config_.group.key);
    out.u64(config_.group.epoch);
    out.u8(config_.prune_on_merge ? 1 : 0);
    out.u32(config_.history_stride);
    out.u32(config_.history_depth);
    out.u8(have_signature_ ? 1 : 0);
    out.raw(sigma_);
    out.u64(timestamp_);
    out.u64(payloads_);
    out.blob(bloom_->serialize());

    std::vector<const std::pair<const Block, Slot>*> rows;
    rows.reserve(table_.size());
    for (const auto& row : table_) rows.push_back(&row);
    std::ranges::sort(rows, {}, [](const auto* r) { return r->first; });
    out.u32(static_cast<std::uint32_t>(rows.size()));
    for (const auto* row : rows) {
        out.raw(row->first);
        const Slot& slot = row->second;
        if (slot.merged != kNoMerge) {
            const MergedSlot& m = merged_[slot.merged];
            out.u8(kMergedMarker);
            out.raw(m.gamma);
            out.u32(static_cast<std::uint32_t>(m.ids.size()));
            for (const FileId& id : m.ids) out.raw(id);
        } else {
            out.u8(kChainMarker);
            out.blob(slot.chain.mu.view());
            out.raw(slot.chain.id);
        }
    }

    std::vector<const std::pair<const FileId, Bytes>*> files;
    files.reserve(files_.size());
    for (const auto& f : files_) files.push_back(&f);
    std::ranges::sort(files, {}, [](const auto* f) { return f->first; });
    out.u32(static_cast<std::uint32_t>(files.size()));
    for (const auto* f : files) {
        out.raw(f->first);
        out.blob(f->second);
    }
    return out.take();
}

Server Server::restore(ByteView data) {
    Reader in(data);
    if (!std::ranges::equal(in.raw(kSnapshotMagic.size()), view(kSnapshotMagic)))
        throw FormatError("server snapshot: bad magic", 0);
    ServerConfig config;
    const std::uint8_t mode = in.u8();
    if (mode != 0x01 && mode != 0x02) throw FormatError("server snapshot: bad mode", in.offset() - 1);
    config.mode = static_cast<Mode>(mode);
    config.bloom.target_fp = std::bit_cast<double>(in.u64());
    config.bloom.capacity = in.u64();
    config.group.key = in.fixed<kLambda>();
    config.group.epoch = in.u64();
    config.prune_on_merge = in.u8() != 0;
    config.history_stride = in.u32();
    config.history_depth = in.u32();
    Server server(config);
    server.have_signature_ = in.u8() != 0;
    server.sigma_ = in.fixed<kLambda>();
    server.timestamp_ = in.u64();
    server.payloads_ = in.u64();
    server.bloom_ = std::make_shared<BloomFilter>(BloomFilter::deserialize(in.blob()));

    const std::uint32_t rows = in.count(kLambda + 1);
    server.table_.reserve(rows);
    for (std::uint32_t i = 0; i < rows; ++i) {
        const Block label = in.fixed<kLambda>();
        Slot slot;
        const std::size_t at = in.offset();
        const std::uint8_t marker = in.u8();
        if (marker == kMergedMarker) {
            MergedSlot m;
            m.gamma = in.fixed<kLambda>();
            const std::uint32_t n = in.count(16);
            m.ids.reserve(n);
            for (std::uint32_t j = 0; j < n; ++j) m.ids.push_back(in.fixed<16>());
            slot.merged = static_cast<std::uint32_t>(server.merged_.size());
            server.merged_.push_back(std::move(m));
        } else if (marker == kChainMarker) {
            ByteView mu = in.blob();
            if (mu.size() != mask_width(config.mode)) throw FormatError("server snapshot: bad mask width", at);
            std::copy(mu.begin(), mu.end(), slot.chain.mu.bytes.begin());
            slot.chain.mu.size = static_cast<std::uint8_t>(mu.size());
            slot.chain.id = in.fixed<16>();
        } else {
            throw FormatError("server snapshot: unknown entry marker", at);
        }
        if (!server.table_.emplace(label, std::move(slot)).second)
            throw FormatError("server snapshot: duplicate label", at);
    }
    const std::uint32_t files = in.count(20);
    for (std::uint32_t i = 0; i < files; ++i) {
        const FileId id = in.fixed<16>();
        server.files_.emplace(id, in.blob_copy());
    }
    in.expect_end();
    return server;
}

}  // namespace dsse
