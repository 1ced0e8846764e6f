#pragma once
// Authenticated result payloads for QR codes.
//
// Token layout: base64url(canonical JSON) "." base64url(HMAC-SHA256(key, canonical JSON))
// The canonical JSON is {"iat": issued_at_ms, "kid": key_id, "result": bundle, "v": 1}
// serialized compactly with sorted keys. Decoding is strict (no padding, no
// non-alphabet bytes, zero trailing bits) so each payload has exactly one
// valid textual form.

#include <array>
#include <cstdint>
#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <nlohmann/json.hpp>

#include "srta/error.hpp"
#include "srta/scoring.hpp"

namespace srta {

inline std::string base64url_encode(std::span<const unsigned char> in) {
    static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
    std::string out;
    out.reserve((in.size() * 4 + 2) / 3);
    std::size_t i = 0;
    for (; i + 3 <= in.size(); i += 3) {
        const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += alphabet[v & 63];
    }
    if (const std::size_t rest = in.size() - i; rest > 0) {
        std::uint32_t v = in[i] << 16;
        if (rest == 2) v |= in[i + 1] << 8;
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        if (rest == 2) out += alphabet[(v >> 6) & 63];
    }
    return out;
}

inline std::string base64url_encode(std::string_view in) {
    return base64url_encode(std::span(reinterpret_cast<const unsigned char*>(in.data()), in.size()));
}

inline std::optional<std::string> base64url_decode(std::string_view in) {
    static constexpr auto table = [] {
        std::array<signed char, 256> t{};
        t.fill(-1);
        constexpr std::string_view alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
        for (std::size_t i = 0; i < alphabet.size(); ++i) t[static_cast<unsigned char>(alphabet[i])] = static_cast<signed char>(i);
        return t;
    }();
    if (in.size() % 4 == 1) return std::nullopt;
    std::string out(in.size() * 3 / 4, '\0');
    std::size_t o = 0;
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : in) {
        const int v = table[static_cast<unsigned char>(c)];
        if (v < 0) return std::nullopt;
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out[o++] = static_cast<char>((acc >> bits) & 0xff);
        }
    }
    if (bits > 0 && (acc & ((1u << bits) - 1)) != 0) return std::nullopt;  // non-canonical tail
    return out;
}

using Digest = std::array<unsigned char, 32>;

// HMAC-SHA256 with the padded key blocks hashed once up front; each message
// then costs two context copies and the message hash.
class HmacSha256 {
public:
    explicit HmacSha256(std::span<const unsigned char> key) {
        std::array<unsigned char, 64> block{};
        if (key.size() > block.size()) {
            unsigned int n = 0;
            if (!EVP_Digest(key.data(), key.size(), block.data(), &n, EVP_sha256(), nullptr))
                fail(ErrorCode::Integrity, "key hashing failed");
        } else {
            std::copy(key.begin(), key.end(), block.begin());
        }
        std::array<unsigned char, 64> pad{};
        for (std::size_t i = 0; i < 64; ++i) pad[i] = block[i] ^ 0x36;
        init(inner_.get(), pad);
        for (std::size_t i = 0; i < 64; ++i) pad[i] = block[i] ^ 0x5c;
        init(outer_.get(), pad);
        OPENSSL_cleanse(block.data(), block.size());
        OPENSSL_cleanse(pad.data(), pad.size());
    }

    Digest operator()(std::string_view message) const {
        Ctx ctx;
        Digest inner_hash{}, mac{};
        unsigned int n = 0;
        if (!EVP_MD_CTX_copy_ex(ctx.get(), inner_.get()) ||
            !EVP_DigestUpdate(ctx.get(), message.data(), message.size()) ||
            !EVP_DigestFinal_ex(ctx.get(), inner_hash.data(), &n) || !EVP_MD_CTX_copy_ex(ctx.get(), outer_.get()) ||
            !EVP_DigestUpdate(ctx.get(), inner_hash.data(), inner_hash.size()) ||
            !EVP_DigestFinal_ex(ctx.get(), mac.data(), &n) || n != mac.size())
            fail(ErrorCode::Integrity, "HMAC computation failed");
        return mac;
    }

private:
    struct Ctx {
        Ctx() : p(EVP_MD_CTX_new()) {
            if (!p) fail(ErrorCode::Integrity, "EVP_MD_CTX_new failed");
        }
        ~Ctx() { EVP_MD_CTX_free(p); }
        Ctx(const Ctx&) = delete;
        Ctx& operator=(const Ctx&) = delete;
        EVP_MD_CTX* get() const { return p; }
        EVP_MD_CTX* p;
    };

    static void init(EVP_MD_CTX* ctx, const std::array<unsigned char, 64>& pad) {
        if (!EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) || !EVP_DigestUpdate(ctx, pad.data(), pad.size()))
            fail(ErrorCode::Integrity, "HMAC key setup failed");
    }

    Ctx inner_, outer_;
};

inline Digest hmac_sha256(std::span<const unsigned char> key, std::string_view message) {
    return HmacSha256(key)(message);
}

class SigningKey {
public:
    explicit SigningKey(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {
        if (bytes_.size() < 16) fail(ErrorCode::Validation, "signing key must be at least 16 bytes");
        mac_ = std::make_shared<const HmacSha256>(bytes_);
        Digest h{};
        SHA256(bytes_.data(), bytes_.size(), h.data());
        static constexpr char hex[] = "0123456789abcdef";
        for (int i = 0; i < 4; ++i) {
            key_id_ += hex[h[i] >> 4];
            key_id_ += hex[h[i] & 15];
        }
    }

    static SigningKey generate() {
        std::vector<unsigned char> b(32);
        if (RAND_bytes(b.data(), static_cast<int>(b.size())) != 1) fail(ErrorCode::Io, "RAND_bytes failed");
        return SigningKey(std::move(b));
    }

    // Raw key bytes from a file; when the file does not exist a fresh key is
    // generated and written there.
    static SigningKey load_or_create(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            return SigningKey(std::move(b));
        }
        SigningKey k = generate();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write signing key to " + path);
        out.write(reinterpret_cast<const char*>(k.bytes_.data()), static_cast<std::streamsize>(k.bytes_.size()));
        return k;
    }

    std::span<const unsigned char> bytes() const { return bytes_; }
    const std::string& key_id() const { return key_id_; }
    Digest mac(std::string_view message) const { return (*mac_)(message); }

private:
    std::shared_ptr<const HmacSha256> mac_;
    std::vector<unsigned char> bytes_;
    std::string key_id_;
};

struct SignedResultPayload {
    ResultBundle result;  // as read back from the wire (reals rounded)
    std::int64_t issued_at = 0;
    std::string key_id;
    std::string signature;  // base64url HMAC
};

inline std::string canonical_payload(const ResultBundle& result, std::int64_t issued_at, const std::string& key_id) {
    const nlohmann::json doc{{"v", 1}, {"kid", key_id}, {"iat", issued_at}, {"result", result}};
    return doc.dump();
}

inline std::string sign_result(const ResultBundle& result, std::int64_t issued_at, const SigningKey& key) {
    const std::string body = canonical_payload(result, issued_at, key.key_id());
    const Digest mac = key.mac(body);
    return base64url_encode(body) + "." + base64url_encode(mac);
}

// Non-throwing form. On failure returns nullopt and, if `why` is given,
// stores the reason there.
inline std::optional<SignedResultPayload> try_verify_result(std::string_view token, const SigningKey& key,
                                                            std::string* why = nullptr) {
    auto reject = [&](const char* reason) -> std::optional<SignedResultPayload> {
        if (why) *why = reason;
        return std::nullopt;
    };
    const auto dot = token.find('.');
    if (dot == std::string_view::npos || token.find('.', dot + 1) != std::string_view::npos)
        return reject("payload must have exactly two dot-separated parts");
    const auto sig = base64url_decode(token.substr(dot + 1));
    if (!sig || sig->size() != 32) return reject("signature is not valid base64url");
    const auto body = base64url_decode(token.substr(0, dot));
    if (!body) return reject("body is not valid base64url");
    const Digest mac = key.mac(*body);
    if (CRYPTO_memcmp(mac.data(), sig->data(), mac.size()) != 0) return reject("signature does not verify");

    const nlohmann::json doc = nlohmann::json::parse(*body, nullptr, false);
    if (doc.is_discarded()) return reject("signed body is not JSON");
    SignedResultPayload out;
    try {
        if (doc.at("v").get<int>() != 1) return reject("unsupported payload version");
        out.key_id = doc.at("kid").get<std::string>();
        out.issued_at = doc.at("iat").get<std::int64_t>();
        out.result = doc.at("result").get<ResultBundle>();
    } catch (const std::exception&) {
        return reject("signed body has the wrong shape");
    }
    if (out.key_id != key.key_id()) return reject("payload was signed with a different key");
    out.signature = std::string(token.substr(dot + 1));
    return out;
}

inline SignedResultPayload verify_result(std::string_view token, const SigningKey& key) {
    std::string why;
    auto out = try_verify_result(token, key, &why);
    if (!out) fail(ErrorCode::Integrity, why);
    return std::move(*out);
}

}  // namespace srta
