#pragma once

// Frame: version (0x01) || kind || u32 BE body length || body.
// Variable-length fields inside bodies are u32 BE length || bytes.
// Response bodies start with a status byte; a non-OK status is followed by
// a length-prefixed UTF-8 message instead of the kind-specific fields.

#include <cstdint>
#include <string>
#include <variant>

#include "dsse/crypto.hpp"
#include "dsse/protocol.hpp"

namespace dsse::wire {

inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kFrameHeader = 6;

enum class Kind : std::uint8_t {
    add = 0x01,
    refresh = 0x02,
    search = 0x03,
    get_bloom = 0x04,
    rotate = 0x05,
    add_ack = 0x81,
    refresh_ack = 0x82,
    search_result = 0x83,
    bloom = 0x84,
    rotate_ack = 0x85,
};

enum class Status : std::uint8_t {
    ok = 0x00,
    bad_request = 0x01,
    stale_epoch = 0x02,
    not_found = 0x03,
    duplicate_label = 0x04,
    non_monotonic = 0x05,
    unsupported = 0x06,
    protocol = 0x07,
    internal = 0x08,
};

std::string_view status_name(Status s);

struct Refresh {
    RefreshPayload bloom;
    bool operator==(const Refresh&) const = default;
};

struct GetBloom {
    bool operator==(const GetBloom&) const = default;
};

struct Rotate {
    GroupKey group;
    bool operator==(const Rotate&) const = default;
};

/// Successful reply without payload (0x81, 0x82, 0x85).
struct Ack {
    Kind kind = Kind::add_ack;
    bool operator==(const Ack&) const = default;
};

struct BloomReply {
    SignedBloom bloom;
    bool operator==(const BloomReply&) const = default;
};

/// Any response kind carrying a non-OK status.
struct ErrorReply {
    Kind kind = Kind::search_result;
    Status status = Status::internal;
    std::string message;
    bool operator==(const ErrorReply&) const = default;
};

using Message = std::variant<AddPayload, Refresh, SearchToken, GetBloom, Rotate, Ack, SearchResult, BloomReply,
                             ErrorReply>;

Kind kind_of(const Message& m);

Bytes encode(const Message& m);

/// Decode exactly one frame. Throws FormatError (with offset) on truncation,
/// unknown version/kind, length overflow or trailing bytes.
Message decode(ByteView frame);

/// Body length announced by a frame header (first kFrameHeader bytes).
std::uint32_t body_length(ByteView header);

/// Human-readable one-line dump for logs.
std::string describe(const Message& m);

}  // namespace dsse::wire
