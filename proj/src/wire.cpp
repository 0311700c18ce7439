#include "dsse/wire.hpp"

#include <sstream>

#include "dsse/codec.hpp"
#include "dsse/errors.hpp"

namespace dsse::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Mode read_mode(Reader& in) {
    const std::size_t at = in.offset();
    const std::uint8_t m = in.u8();
    if (m != static_cast<std::uint8_t>(Mode::basic) && m != static_cast<std::uint8_t>(Mode::full))
        throw FormatError("unknown mode byte", at);
    return static_cast<Mode>(m);
}

void write_bloom(Writer& out, const SignedBloom& b) {
    if (!b.filter) throw UsageError("encode: signed bloom without a filter");
    // Write header and bits straight from the filter; same bytes as serialize().
    out.u32(static_cast<std::uint32_t>(b.filter->serialized_size()));
    out.raw(b.filter->header());
    out.raw(b.filter->bits());
    out.raw(b.sigma);
    out.u64(b.timestamp);
}

SignedBloom read_bloom(Reader& in) {
    const std::size_t at = in.offset();
    ByteView raw = in.blob();
    SignedBloom b;
    try {
        b.filter = std::make_shared<const BloomFilter>(BloomFilter::deserialize(raw));
    } catch (const FormatError& e) {
        throw FormatError(std::string("bloom field: ") + e.what(), at);
    }
    b.sigma = in.fixed<kLambda>();
    b.timestamp = in.u64();
    return b;
}

void encode_body(Writer& out, const AddPayload& p) {
    out.u8(static_cast<std::uint8_t>(p.mode));
    out.raw(p.file_id);
    out.blob(p.ciphertext);
    out.u32(static_cast<std::uint32_t>(p.entries.size()));
    for (const auto& e : p.entries) {
        if (e.mu.size != mask_width(p.mode)) throw UsageError("encode: masked entry width does not match mode");
        out.raw(e.tau);
        out.raw(e.mu.view());
        out.raw(p.file_id);
    }
    if (p.mode == Mode::full) {
        out.raw(p.sigma);
        out.u64(p.timestamp);
    }
}

AddPayload decode_add(Reader& in) {
    AddPayload p;
    p.mode = read_mode(in);
    p.file_id = in.fixed<16>();
    p.ciphertext = in.blob_copy();
    const std::size_t width = mask_width(p.mode);
    const std::uint32_t n = in.count(kLambda + width + 16);
    p.entries.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        IndexEntry e;
        e.tau = in.fixed<kLambda>();
        ByteView mu = in.raw(width);
        std::copy(mu.begin(), mu.end(), e.mu.bytes.begin());
        e.mu.size = static_cast<std::uint8_t>(width);
        const std::size_t at = in.offset();
        if (in.fixed<16>() != p.file_id) throw FormatError("index entry names a different file id", at);
        p.entries.push_back(e);
    }
    if (p.mode == Mode::full) {
        p.sigma = in.fixed<kLambda>();
        p.timestamp = in.u64();
    }
    return p;
}

void encode_body(Writer& out, const SearchResult& r) {
    out.u8(static_cast<std::uint8_t>(Status::ok));
    out.u32(r.lookups);
    out.u32(static_cast<std::uint32_t>(r.ids.size()));
    for (const auto& id : r.ids) out.raw(id);
    out.u32(static_cast<std::uint32_t>(r.ciphertexts.size()));
    for (const auto& c : r.ciphertexts) out.blob(c);
    out.u8(r.proof ? 1 : 0);
    if (r.proof) {
        write_bloom(out, r.proof->bloom);
        out.raw(r.proof->gamma);
    }
}

SearchResult decode_search_result(Reader& in) {
    SearchResult r;
    r.lookups = in.u32();
    const std::uint32_t n = in.count(16);
    r.ids.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) r.ids.push_back(in.fixed<16>());
    const std::uint32_t m = in.count(4);
    r.ciphertexts.reserve(m);
    for (std::uint32_t i = 0; i < m; ++i) r.ciphertexts.push_back(in.blob_copy());
    const std::size_t at = in.offset();
    const std::uint8_t has_proof = in.u8();
    if (has_proof > 1) throw FormatError("proof flag must be 0 or 1", at);
    if (has_proof) {
        Proof p;
        p.bloom = read_bloom(in);
        p.gamma = in.fixed<kLambda>();
        r.proof = std::move(p);
    }
    return r;
}

bool is_response(Kind k) { return static_cast<std::uint8_t>(k) & 0x80; }

bool known_kind(std::uint8_t k) {
    return (k >= 0x01 && k <= 0x05) || (k >= 0x81 && k <= 0x85);
}

}  // namespace

std::string_view status_name(Status s) {
    switch (s) {
        case Status::ok:
            return "OK";
        case Status::bad_request:
            return "BAD_REQUEST";
        case Status::stale_epoch:
            return "STALE_EPOCH";
        case Status::not_found:
            return "NOT_FOUND";
        case Status::duplicate_label:
            return "DUPLICATE_LABEL";
        case Status::non_monotonic:
            return "NON_MONOTONIC";
        case Status::unsupported:
            return "UNSUPPORTED";
        case Status::protocol:
            return "PROTOCOL";
        case Status::internal:
            return "INTERNAL";
    }
    return "UNKNOWN";
}

Kind kind_of(const Message& m) {
    return std::visit(overloaded{
                          [](const AddPayload&) { return Kind::add; },
                          [](const Refresh&) { return Kind::refresh; },
                          [](const SearchToken&) { return Kind::search; },
                          [](const GetBloom&) { return Kind::get_bloom; },
                          [](const Rotate&) { return Kind::rotate; },
                          [](const Ack& a) { return a.kind; },
                          [](const SearchResult&) { return Kind::search_result; },
                          [](const BloomReply&) { return Kind::bloom; },
                          [](const ErrorReply& e) { return e.kind; },
                      },
                      m);
}

Bytes encode(const Message& m) {
    const Kind kind = kind_of(m);
    Writer out;
    out.u8(kVersion);
    out.u8(static_cast<std::uint8_t>(kind));
    out.u32(0);  // patched below
    std::visit(overloaded{
                   [&](const AddPayload& p) { encode_body(out, p); },
                   [&](const Refresh& r) { write_bloom(out, r.bloom); },
                   [&](const SearchToken& t) {
                       out.u8(static_cast<std::uint8_t>(t.mode));
                       out.u64(t.epoch);
                       out.blob(t.body);
                   },
                   [&](const GetBloom&) {},
                   [&](const Rotate& r) {
                       out.raw(r.group.key);
                       out.u64(r.group.epoch);
                   },
                   [&](const Ack& a) {
                       if (a.kind != Kind::add_ack && a.kind != Kind::refresh_ack && a.kind != Kind::rotate_ack)
                           throw UsageError("encode: Ack must use an ack kind");
                       out.u8(static_cast<std::uint8_t>(Status::ok));
                   },
                   [&](const SearchResult& r) { encode_body(out, r); },
                   [&](const BloomReply& b) {
                       out.u8(static_cast<std::uint8_t>(Status::ok));
                       write_bloom(out, b.bloom);
                   },
                   [&](const ErrorReply& e) {
                       if (!is_response(e.kind) || e.status == Status::ok)
                           throw UsageError("encode: ErrorReply needs a response kind and non-OK status");
                       out.u8(static_cast<std::uint8_t>(e.status));
                       out.str(e.message);
                   },
               },
               m);
    Bytes frame = out.take();
    const std::size_t body = frame.size() - kFrameHeader;
    if (body > UINT32_MAX) throw UsageError("encode: message body exceeds 2^32-1 bytes");
    Bytes len;
    put_u32_be(len, static_cast<std::uint32_t>(body));
    std::copy(len.begin(), len.end(), frame.begin() + 2);
    return frame;
}

std::uint32_t body_length(ByteView header) {
    if (header.size() < kFrameHeader) throw FormatError("truncated frame header", header.size());
    if (header[0] != kVersion) throw FormatError("unsupported version " + std::to_string(header[0]), 0);
    return get_u32_be(header.subspan(2));
}

Message decode(ByteView frame) {
    const std::uint32_t len = body_length(frame);
    if (frame.size() - kFrameHeader < len) throw FormatError("body shorter than announced length", frame.size());
    if (frame.size() - kFrameHeader > len) throw FormatError("trailing bytes after frame", kFrameHeader + len);
    if (!known_kind(frame[1])) throw FormatError("unknown message kind " + std::to_string(frame[1]), 1);
    const Kind kind = static_cast<Kind>(frame[1]);
    Reader in(frame);
    in.raw(kFrameHeader);

    if (is_response(kind)) {
        const std::size_t at = in.offset();
        const std::uint8_t status = in.u8();
        if (status > static_cast<std::uint8_t>(Status::internal)) throw FormatError("unknown status code", at);
        if (status != 0) {
            ErrorReply e{kind, static_cast<Status>(status), in.str()};
            in.expect_end();
            return e;
        }
    }

    Message m;
    switch (kind) {
        case Kind::add:
            m = decode_add(in);
            break;
        case Kind::refresh:
            m = Refresh{read_bloom(in)};
            break;
        case Kind::search: {
            SearchToken t;
            t.mode = read_mode(in);
            t.epoch = in.u64();
            t.body = in.blob_copy();
            m = std::move(t);
            break;
        }
        case Kind::get_bloom:
            m = GetBloom{};
            break;
        case Kind::rotate: {
            Rotate r;
            r.group.key = in.fixed<kLambda>();
            r.group.epoch = in.u64();
            m = r;
            break;
        }
        case Kind::add_ack:
        case Kind::refresh_ack:
        case Kind::rotate_ack:
            m = Ack{kind};
            break;
        case Kind::search_result:
            m = decode_search_result(in);
            break;
        case Kind::bloom:
            m = BloomReply{read_bloom(in)};
            break;
    }
    in.expect_end();
    return m;
}

std::string describe(const Message& m) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const AddPayload& p) {
                       os << "ADD mode=" << mode_name(p.mode) << " file=" << to_hex(p.file_id)
                          << " ct=" << p.ciphertext.size() << "B entries=" << p.entries.size();
                       if (p.mode == Mode::full) os << " T=" << p.timestamp << " sigma=" << to_hex(p.sigma);
                   },
                   [&](const Refresh& r) {
                       os << "REFRESH m=" << r.bloom.filter->bit_count() << " k=" << r.bloom.filter->hash_count()
                          << " T=" << r.bloom.timestamp;
                   },
                   [&](const SearchToken& t) {
                       os << "SEARCH mode=" << mode_name(t.mode) << " epoch=" << t.epoch << " body=" << t.body.size()
                          << "B";
                   },
                   [&](const GetBloom&) { os << "GET_BLOOM"; },
                   [&](const Rotate& r) { os << "ROTATE epoch=" << r.group.epoch; },
                   [&](const Ack& a) { os << "ACK kind=0x" << std::hex << static_cast<int>(a.kind); },
                   [&](const SearchResult& r) {
                       os << "SEARCH_RESULT ids=" << r.ids.size() << " lookups=" << r.lookups
                          << " proof=" << (r.proof ? "yes" : "no");
                   },
                   [&](const BloomReply& b) {
                       os << "BLOOM m=" << b.bloom.filter->bit_count() << " T=" << b.bloom.timestamp;
                   },
                   [&](const ErrorReply& e) {
                       os << "ERROR kind=0x" << std::hex << static_cast<int>(e.kind) << std::dec << " "
                          << status_name(e.status) << ": " << e.message;
                   },
               },
               m);
    return os.str();
}

}  // namespace dsse::wire
