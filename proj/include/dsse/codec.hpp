#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dsse/bytes.hpp"
#include "dsse/errors.hpp"

namespace dsse {

/// Append-only big-endian writer for length-prefixed binary formats.
class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) { put_u32_be(out_, v); }
    void u64(std::uint64_t v) { put_u64_be(out_, v); }
    void raw(ByteView b) { append(out_, b); }
    /// u32 length || bytes
    void blob(ByteView b) {
        if (b.size() > UINT32_MAX) throw UsageError("field exceeds 2^32-1 bytes");
        u32(static_cast<std::uint32_t>(b.size()));
        raw(b);
    }
    void str(std::string_view s) { blob(view(s)); }

    Bytes& bytes() { return out_; }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

/// Bounds-checked reader; every failure is a FormatError carrying the offset.
class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}

    std::uint8_t u8() { return need(1)[0]; }
    std::uint32_t u32() { return get_u32_be(need(4)); }
    std::uint64_t u64() { return get_u64_be(need(8)); }
    ByteView raw(std::size_t n) { return need(n); }
    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        return to_array<N>(need(N));
    }
    ByteView blob() {
        const std::size_t at = pos_;
        const std::uint32_t n = u32();
        if (n > remaining()) throw FormatError("length prefix " + std::to_string(n) + " overruns input", at);
        return need(n);
    }
    Bytes blob_copy() {
        ByteView b = blob();
        return {b.begin(), b.end()};
    }
    std::string str() {
        ByteView b = blob();
        return {b.begin(), b.end()};
    }
    /// Element count for a following array whose entries take at least min_size bytes.
    std::uint32_t count(std::size_t min_size) {
        const std::size_t at = pos_;
        const std::uint32_t n = u32();
        if (min_size != 0 && n > remaining() / min_size)
            throw FormatError("element count " + std::to_string(n) + " overruns input", at);
        return n;
    }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    void expect_end() const {
        if (remaining() != 0) throw FormatError(std::to_string(remaining()) + " trailing bytes", pos_);
    }

private:
    ByteView need(std::size_t n) {
        if (n > remaining()) throw FormatError("truncated input", pos_);
        ByteView out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace dsse
