#include "dsse/crypto.hpp"

#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <memory>

#include "dsse/errors.hpp"
#include "dsse/kernels.hpp"

namespace dsse::crypto {

namespace {

struct MacDeleter {
    void operator()(EVP_MAC* p) const { EVP_MAC_free(p); }
    void operator()(EVP_MAC_CTX* p) const { EVP_MAC_CTX_free(p); }
    void operator()(EVP_MD* p) const { EVP_MD_free(p); }
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
    void operator()(EVP_CIPHER* p) const { EVP_CIPHER_free(p); }
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};

template <typename T>
using Owned = std::unique_ptr<T, MacDeleter>;

void check_key(ByteView key, const char* who) {
    if (key.size() != kLambda)
        throw UsageError(std::string(who) + ": key must be " + std::to_string(kLambda) +
                         " bytes, got " + std::to_string(key.size()));
}

void ossl_check(int rc, const char* what) {
    if (rc != 1) throw Error(std::string("openssl: ") + what + " failed");
}

// Fetched algorithm objects are immutable and shared across threads.
EVP_MAC* hmac_algorithm() {
    static Owned<EVP_MAC> mac{EVP_MAC_fetch(nullptr, "HMAC", nullptr)};
    if (!mac) throw Error("openssl: HMAC unavailable");
    return mac.get();
}

const EVP_MD* sha256_md() {
    static Owned<EVP_MD> md{EVP_MD_fetch(nullptr, "SHA256", nullptr)};
    if (!md) throw Error("openssl: SHA256 unavailable");
    return md.get();
}

const EVP_CIPHER* aes128_gcm() {
    static Owned<EVP_CIPHER> c{EVP_CIPHER_fetch(nullptr, "AES-128-GCM", nullptr)};
    if (!c) throw Error("openssl: AES-128-GCM unavailable");
    return c.get();
}

// One reusable HMAC context per digest per thread; EVP_MAC_init re-keys it.
class HmacCtx {
public:
    explicit HmacCtx(const char* digest) : digest_(digest), ctx_(EVP_MAC_CTX_new(hmac_algorithm())) {
        if (!ctx_) throw Error("openssl: EVP_MAC_CTX_new failed");
    }

    template <std::size_t N>
    std::array<std::uint8_t, N> compute(ByteView key, std::initializer_list<ByteView> parts) {
        OSSL_PARAM params[] = {
            OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, const_cast<char*>(digest_), 0),
            OSSL_PARAM_construct_end()};
        ossl_check(EVP_MAC_init(ctx_.get(), key.data(), key.size(), params), "EVP_MAC_init");
        for (ByteView part : parts)
            ossl_check(EVP_MAC_update(ctx_.get(), part.data(), part.size()), "EVP_MAC_update");
        std::uint8_t full[EVP_MAX_MD_SIZE];
        std::size_t len = 0;
        ossl_check(EVP_MAC_final(ctx_.get(), full, &len, sizeof full), "EVP_MAC_final");
        std::array<std::uint8_t, N> out{};
        std::copy_n(full, N, out.begin());
        return out;
    }

private:
    const char* digest_;
    Owned<EVP_MAC_CTX> ctx_;
};

HmacCtx& hmac256() {
    thread_local HmacCtx ctx{"SHA256"};
    return ctx;
}

HmacCtx& hmac512() {
    thread_local HmacCtx ctx{"SHA512"};
    return ctx;
}

EVP_MD_CTX* digest_ctx() {
    thread_local Owned<EVP_MD_CTX> ctx{EVP_MD_CTX_new()};
    if (!ctx) throw Error("openssl: EVP_MD_CTX_new failed");
    return ctx.get();
}

constexpr std::size_t kNonceLen = 12;
constexpr std::size_t kTagLen = 16;

}  // namespace

Bytes encode_input(Domain tag, std::string_view keyword, std::uint64_t payload) {
    Bytes out;
    out.reserve(1 + 4 + keyword.size() + 8);
    out.push_back(static_cast<std::uint8_t>(tag));
    put_u32_be(out, static_cast<std::uint32_t>(keyword.size()));
    append(out, view(keyword));
    put_u64_be(out, payload);
    return out;
}

Block prf1(ByteView key, ByteView msg) {
    check_key(key, "prf1");
    return hmac256().compute<kLambda>(key, {msg});
}

Mask2 prf2(ByteView key, ByteView msg) {
    check_key(key, "prf2");
    return hmac512().compute<2 * kLambda>(key, {msg});
}

Mask3 prf3(ByteView key, ByteView msg) {
    check_key(key, "prf3");
    return hmac512().compute<3 * kLambda>(key, {msg});
}

std::array<std::uint8_t, 32> sha256(std::initializer_list<ByteView> parts) {
    EVP_MD_CTX* ctx = digest_ctx();
    ossl_check(EVP_DigestInit_ex(ctx, sha256_md(), nullptr), "EVP_DigestInit_ex");
    for (ByteView part : parts) ossl_check(EVP_DigestUpdate(ctx, part.data(), part.size()), "EVP_DigestUpdate");
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    ossl_check(EVP_DigestFinal_ex(ctx, out.data(), &len), "EVP_DigestFinal_ex");
    return out;
}

Block hash(ByteView msg) { return to_array<kLambda>(view(sha256({msg}))); }

Block mac_generate(ByteView key, std::initializer_list<ByteView> parts) {
    check_key(key, "mac_generate");
    return hmac256().compute<kLambda>(key, parts);
}

Block aggregate_mac(std::span<const Block> tags) {
    Block acc{};
    for (const Block& t : tags) kernels::xor_into(acc, t);
    return acc;
}

Block aggregate_mac(std::span<const Bytes> tags) {
    Block acc{};
    for (const Bytes& t : tags) {
        if (t.size() != kLambda)
            throw UsageError("aggregate_mac: tag of " + std::to_string(t.size()) + " bytes");
        kernels::xor_into(acc, t);
    }
    return acc;
}

Bytes se_encrypt(ByteView key, ByteView plaintext) {
    check_key(key, "se_encrypt");
    Bytes out(kNonceLen + plaintext.size() + kTagLen);
    random_bytes({out.data(), kNonceLen});
    Owned<EVP_CIPHER_CTX> ctx{EVP_CIPHER_CTX_new()};
    if (!ctx) throw Error("openssl: EVP_CIPHER_CTX_new failed");
    ossl_check(EVP_EncryptInit_ex2(ctx.get(), aes128_gcm(), key.data(), out.data(), nullptr),
               "EVP_EncryptInit_ex2");
    int len = 0;
    ossl_check(EVP_EncryptUpdate(ctx.get(), out.data() + kNonceLen, &len, plaintext.data(),
                                 static_cast<int>(plaintext.size())),
               "EVP_EncryptUpdate");
    int tail = 0;
    ossl_check(EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceLen + len, &tail), "EVP_EncryptFinal_ex");
    ossl_check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen,
                                   out.data() + kNonceLen + plaintext.size()),
               "GCM get tag");
    return out;
}

Bytes se_decrypt(ByteView key, ByteView ciphertext) {
    check_key(key, "se_decrypt");
    if (ciphertext.size() < kNonceLen + kTagLen) throw DecryptionError("ciphertext too short");
    const std::size_t body = ciphertext.size() - kNonceLen - kTagLen;
    Bytes out(body);
    Owned<EVP_CIPHER_CTX> ctx{EVP_CIPHER_CTX_new()};
    if (!ctx) throw Error("openssl: EVP_CIPHER_CTX_new failed");
    ossl_check(EVP_DecryptInit_ex2(ctx.get(), aes128_gcm(), key.data(), ciphertext.data(), nullptr),
               "EVP_DecryptInit_ex2");
    int len = 0;
    ossl_check(EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data() + kNonceLen,
                                 static_cast<int>(body)),
               "EVP_DecryptUpdate");
    std::array<std::uint8_t, kTagLen> tag{};
    std::copy_n(ciphertext.data() + kNonceLen + body, kTagLen, tag.begin());
    ossl_check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen, tag.data()), "GCM set tag");
    int tail = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1)
        throw DecryptionError("authentication failed");
    return out;
}

void random_bytes(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) throw Error("RNG failure");
}

Block random_block() {
    Block b{};
    random_bytes(b);
    return b;
}

FileId random_file_id() {
    FileId id{};
    random_bytes(id);
    return id;
}

bool equal(ByteView a, ByteView b) {
    return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

Block chain_label(const Block& k_prf, std::string_view keyword, std::uint64_t cnt) {
    return prf1(k_prf, encode_input(Domain::chain_label, keyword, cnt));
}

Block chain_key(const Block& k_prf, std::string_view keyword, std::uint64_t cnt) {
    return prf1(k_prf, hash(encode_input(Domain::key_derivation, keyword, cnt)));
}

}  // namespace dsse::crypto

namespace dsse {

GroupKey GroupKey::generate(std::uint64_t epoch) { return {crypto::random_block(), epoch}; }

KeyBundle KeyBundle::generate() {
    return {crypto::random_block(), crypto::random_block(), crypto::random_block(), GroupKey::generate(1)};
}

}  // namespace dsse
