#pragma once

// Byte-array inner loops shared by the crypto and Bloom filter layers:
// XOR masking/aggregation and population count. Each kernel has a scalar
// reference and x86 SIMD variants; the active variant is picked once at
// startup from CPUID and can be pinned for equivalence testing.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dsse::kernels {

enum class Isa { scalar, sse2, avx2 };

std::string_view isa_name(Isa isa);

/// Variants this CPU can execute, scalar first.
std::vector<Isa> supported_isas();

/// Best supported variant unless pinned with set_active_isa.
Isa active_isa();

/// Pin the dispatch target. Throws UsageError if the CPU lacks it.
void set_active_isa(Isa isa);

/// dst[i] ^= src[i]. Spans must have equal length.
void xor_into(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src);

/// Number of set bits across the buffer.
std::size_t popcount(std::span<const std::uint8_t> data);

namespace scalar {
void xor_into(std::uint8_t* dst, const std::uint8_t* src, std::size_t n);
std::size_t popcount(const std::uint8_t* data, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
namespace sse2 {
void xor_into(std::uint8_t* dst, const std::uint8_t* src, std::size_t n);
std::size_t popcount(const std::uint8_t* data, std::size_t n);
}  // namespace sse2

namespace avx2 {
void xor_into(std::uint8_t* dst, const std::uint8_t* src, std::size_t n);
std::size_t popcount(const std::uint8_t* data, std::size_t n);
}  // namespace avx2
#endif

}  // namespace dsse::kernels
