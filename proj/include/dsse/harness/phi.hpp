#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dsse/bytes.hpp"

namespace dsse::harness {

/// One synthetic vital sign: keywords are "name:value" with value in [lo, hi].
struct Attribute {
    std::string_view name;
    std::uint32_t lo;
    std::uint32_t hi;
};

inline constexpr std::size_t kAttributesPerFile = 15;

/// The fixed attribute table. Fractional vitals are in tenths
/// (temperature 367 = 36.7 C, weight 725 = 72.5 kg, body_fat 215 = 21.5 %).
const std::array<Attribute, kAttributesPerFile>& attributes();

/// Number of distinct keywords the attribute table can produce.
std::uint64_t keyword_universe();

struct PhiFile {
    std::uint64_t timestamp = 0;
    std::array<std::uint32_t, kAttributesPerFile> values{};

    std::vector<std::string> keywords() const;
    /// Plaintext document body that gets encrypted and uploaded.
    Bytes render() const;
};

/// Deterministic PHI stream: file i has timestamp start + i * period.
class PhiStream {
public:
    PhiStream(std::uint64_t seed, std::uint64_t period_seconds, std::uint64_t start_time);
    PhiFile next();
    std::uint64_t produced() const noexcept { return produced_; }

private:
    std::mt19937_64 rng_;
    std::uint64_t period_;
    std::uint64_t start_;
    std::uint64_t produced_ = 0;
};

std::vector<PhiFile> synthesize_stream(std::uint64_t seed, std::uint64_t n_files, std::uint64_t period_seconds,
                                       std::uint64_t start_time);

/// Ground-truth inverted index maintained alongside every upload.
class PlaintextOracle {
public:
    void add(const FileId& id, const std::vector<std::string>& keywords);
    /// Ids of files containing w, newest first.
    std::vector<FileId> lookup(std::string_view keyword) const;
    std::uint64_t count(std::string_view keyword) const;
    /// All keywords seen, sorted.
    std::vector<std::string> keywords() const;
    std::size_t size() const noexcept { return index_.size(); }

private:
    std::unordered_map<std::string, std::vector<FileId>> index_;
};

}  // namespace dsse::harness
