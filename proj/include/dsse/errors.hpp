#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dsse {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (wrong key length, duplicate keywords, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed serialized input. Carries the byte offset where decoding stopped.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// AEAD authentication failed.
class DecryptionError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// A search token sealed under a group-key epoch the server no longer accepts.
class StaleEpochError : public Error {
public:
    StaleEpochError(std::uint64_t got, std::uint64_t current)
        : Error("stale group-key epoch " + std::to_string(got) + " (current " +
                std::to_string(current) + ")") {}
    explicit StaleEpochError(const std::string& what) : Error(what) {}
};

/// Two or more digits matched at one embedded-counter position.
class AmbiguityError : public Error {
public:
    using Error::Error;
};

/// Counter guessing reached the configured upper bound.
class BoundExceededError : public Error {
public:
    using Error::Error;
};

/// The fetched Bloom filter does not match its MAC.
class TamperedFilterError : public Error {
public:
    using Error::Error;
};

/// The fetched Bloom filter's timestamp is outside the freshness window.
class StaleFilterError : public Error {
public:
    using Error::Error;
};

/// Protocol-level rejection.
class ProtocolError : public Error {
public:
    enum class Fault { generic, duplicate_label, non_monotonic, unsupported };

    explicit ProtocolError(const std::string& what, Fault fault = Fault::generic) : Error(what), fault_(fault) {}
    Fault fault() const noexcept { return fault_; }

private:
    Fault fault_;
};

/// Socket or channel failure, distinct from anything the peer said.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace dsse
