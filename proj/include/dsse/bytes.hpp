#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dsse {

/// Security parameter in bytes (128 bits).
inline constexpr std::size_t kLambda = 16;

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Fixed-width lambda-byte value: PRF labels, chain keys, MAC tags, group keys.
using Block = std::array<std::uint8_t, kLambda>;

/// 16-byte random file identifier.
using FileId = std::array<std::uint8_t, 16>;

inline constexpr Block kZeroBlock{};

inline ByteView view(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

template <std::size_t N>
ByteView view(const std::array<std::uint8_t, N>& a) {
    return {a.data(), a.size()};
}

inline ByteView view(const Bytes& b) { return {b.data(), b.size()}; }

template <std::size_t N>
std::array<std::uint8_t, N> to_array(ByteView b) {
    std::array<std::uint8_t, N> out{};
    std::copy_n(b.begin(), std::min(N, b.size()), out.begin());
    return out;
}

inline void append(Bytes& dst, ByteView src) { dst.insert(dst.end(), src.begin(), src.end()); }

inline void put_u32_be(Bytes& dst, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) dst.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline void put_u64_be(Bytes& dst, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) dst.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline std::uint32_t get_u32_be(ByteView b) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | b[i];
    return v;
}

inline std::uint64_t get_u64_be(ByteView b) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | b[i];
    return v;
}

std::string to_hex(ByteView b);
Bytes from_hex(std::string_view hex);

}  // namespace dsse
