#include "dsse/kernels.hpp"

#include <atomic>

#include "dsse/errors.hpp"

namespace dsse::kernels {

namespace {

bool cpu_has(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
#if defined(__x86_64__) || defined(__i386__)
        case Isa::sse2:
            return __builtin_cpu_supports("sse2");
        case Isa::avx2:
            return __builtin_cpu_supports("avx2");
#else
        default:
            return false;
#endif
    }
    return false;
}

Isa detect() {
    if (cpu_has(Isa::avx2)) return Isa::avx2;
    if (cpu_has(Isa::sse2)) return Isa::sse2;
    return Isa::scalar;
}

std::atomic<Isa>& active() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::sse2:
            return "sse2";
        case Isa::avx2:
            return "avx2";
    }
    return "unknown";
}

std::vector<Isa> supported_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::scalar, Isa::sse2, Isa::avx2})
        if (cpu_has(isa)) out.push_back(isa);
    return out;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!cpu_has(isa)) throw UsageError("CPU does not support " + std::string(isa_name(isa)));
    active().store(isa, std::memory_order_relaxed);
}

void xor_into(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src) {
    if (dst.size() != src.size()) throw UsageError("xor_into: length mismatch");
    switch (active_isa()) {
#if defined(__x86_64__) || defined(__i386__)
        case Isa::avx2:
            return avx2::xor_into(dst.data(), src.data(), dst.size());
        case Isa::sse2:
            return sse2::xor_into(dst.data(), src.data(), dst.size());
#endif
        default:
            return scalar::xor_into(dst.data(), src.data(), dst.size());
    }
}

std::size_t popcount(std::span<const std::uint8_t> data) {
    switch (active_isa()) {
#if defined(__x86_64__) || defined(__i386__)
        case Isa::avx2:
            return avx2::popcount(data.data(), data.size());
        case Isa::sse2:
            return sse2::popcount(data.data(), data.size());
#endif
        default:
            return scalar::popcount(data.data(), data.size());
    }
}

}  // namespace dsse::kernels
