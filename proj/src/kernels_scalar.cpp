#include "dsse/kernels.hpp"

#include <bit>
#include <cstring>

namespace dsse::kernels::scalar {

void xor_into(std::uint8_t* dst, const std::uint8_t* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] ^= src[i];
}

std::size_t popcount(const std::uint8_t* data, std::size_t n) {
    std::size_t total = 0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        std::uint64_t word;
        std::memcpy(&word, data + i, 8);
        total += static_cast<std::size_t>(std::popcount(word));
    }
    for (; i < n; ++i) total += static_cast<std::size_t>(std::popcount(data[i]));
    return total;
}

}  // namespace dsse::kernels::scalar
