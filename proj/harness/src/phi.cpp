#include "dsse/harness/phi.hpp"

#include <algorithm>

#include "dsse/errors.hpp"

namespace dsse::harness {

const std::array<Attribute, kAttributesPerFile>& attributes() {
    static constexpr std::array<Attribute, kAttributesPerFile> table{{
        {"heartbeat", 40, 180},
        {"blood_sugar", 60, 400},
        {"systolic", 80, 200},
        {"diastolic", 40, 130},
        {"temperature", 350, 420},
        {"pulse_oxygen", 80, 100},
        {"respiration_rate", 8, 40},
        {"weight", 300, 1500},
        {"step_count", 0, 19999},
        {"sleep_minutes", 0, 720},
        {"calories", 0, 4999},
        {"cholesterol", 100, 350},
        {"qt_interval", 300, 500},
        {"body_fat", 50, 500},
        {"hydration", 0, 100},
    }};
    return table;
}

std::uint64_t keyword_universe() {
    std::uint64_t n = 0;
    for (const auto& a : attributes()) n += a.hi - a.lo + 1;
    return n;
}

std::vector<std::string> PhiFile::keywords() const {
    std::vector<std::string> out;
    out.reserve(kAttributesPerFile);
    for (std::size_t i = 0; i < kAttributesPerFile; ++i)
        out.push_back(std::string(attributes()[i].name) + ":" + std::to_string(values[i]));
    return out;
}

Bytes PhiFile::render() const {
    std::string doc = "timestamp=" + std::to_string(timestamp) + "\n";
    for (std::size_t i = 0; i < kAttributesPerFile; ++i)
        doc += std::string(attributes()[i].name) + "=" + std::to_string(values[i]) + "\n";
    return {doc.begin(), doc.end()};
}

PhiStream::PhiStream(std::uint64_t seed, std::uint64_t period_seconds, std::uint64_t start_time)
    : rng_(seed), period_(period_seconds), start_(start_time) {}

PhiFile PhiStream::next() {
    PhiFile f;
    f.timestamp = start_ + produced_ * period_;
    // Plain modulo rather than std::uniform_int_distribution keeps streams
    // identical across standard libraries; the bias is below 2^-40.
    for (std::size_t i = 0; i < kAttributesPerFile; ++i) {
        const auto& a = attributes()[i];
        f.values[i] = a.lo + static_cast<std::uint32_t>(rng_() % (a.hi - a.lo + 1));
    }
    ++produced_;
    return f;
}

std::vector<PhiFile> synthesize_stream(std::uint64_t seed, std::uint64_t n_files, std::uint64_t period_seconds,
                                       std::uint64_t start_time) {
    if (n_files < 1) throw UsageError("synthesize_stream: n_files must be >= 1");
    PhiStream stream(seed, period_seconds, start_time);
    std::vector<PhiFile> out;
    out.reserve(n_files);
    for (std::uint64_t i = 0; i < n_files; ++i) out.push_back(stream.next());
    return out;
}

void PlaintextOracle::add(const FileId& id, const std::vector<std::string>& keywords) {
    for (const auto& w : keywords) index_[w].push_back(id);
}

std::vector<FileId> PlaintextOracle::lookup(std::string_view keyword) const {
    auto it = index_.find(std::string(keyword));
    if (it == index_.end()) return {};
    return {it->second.rbegin(), it->second.rend()};
}

std::uint64_t PlaintextOracle::count(std::string_view keyword) const {
    auto it = index_.find(std::string(keyword));
    return it == index_.end() ? 0 : it->second.size();
}

std::vector<std::string> PlaintextOracle::keywords() const {
    std::vector<std::string> out;
    out.reserve(index_.size());
    for (const auto& [w, ids] : index_) out.push_back(w);
    std::ranges::sort(out);
    return out;
}

}  // namespace dsse::harness
