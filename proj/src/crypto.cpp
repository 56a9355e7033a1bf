#include "crypto.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cstring>
#include <map>
#include <mutex>

namespace smacs::crypto {

namespace {

struct Curve {
    EC_GROUP* group = nullptr;
    BIGNUM* order = nullptr;
    BIGNUM* half_order = nullptr;

    Curve() {
        group = EC_GROUP_new_by_curve_name(NID_secp256k1);
        order = BN_dup(EC_GROUP_get0_order(group));
        half_order = BN_new();
        BN_rshift1(half_order, order);
    }
};

const Curve& curve() {
    static const Curve c;
    return c;
}

struct BnCtx {
    BN_CTX* ctx = BN_CTX_new();
    ~BnCtx() { BN_CTX_free(ctx); }
};

bytes point_to_compressed(const EC_POINT* p, BN_CTX* ctx) {
    bytes out(kPublicKeySize);
    std::size_t n = EC_POINT_point2oct(curve().group, p, POINT_CONVERSION_COMPRESSED,
                                       out.data(), out.size(), ctx);
    if (n != kPublicKeySize) throw Error("CryptoFailure", "point encoding failed");
    return out;
}

bytes derive_public(std::span<const byte> sk, BN_CTX* ctx) {
    BIGNUM* d = BN_bin2bn(sk.data(), static_cast<int>(sk.size()), nullptr);
    EC_POINT* q = EC_POINT_new(curve().group);
    bytes pk;
    bool ok = d && q && !BN_is_zero(d) && BN_cmp(d, curve().order) < 0 &&
              EC_POINT_mul(curve().group, q, d, nullptr, nullptr, ctx) == 1;
    if (ok) pk = point_to_compressed(q, ctx);
    EC_POINT_free(q);
    BN_clear_free(d);
    if (!ok) throw Error("BadKey", "invalid private scalar");
    return pk;
}

// Public-key recovery for one candidate parity: R from x = r, then
// Q = (-z * r^-1) * G + (s * r^-1) * R.
bytes recover_candidate(std::span<const byte> rs, int v, std::span<const byte> digest) {
    const Curve& c = curve();
    BnCtx bc;
    bytes out;
    BIGNUM* r = BN_bin2bn(rs.data(), 32, nullptr);
    BIGNUM* s = BN_bin2bn(rs.data() + 32, 32, nullptr);
    BIGNUM* e = BN_bin2bn(digest.data(), static_cast<int>(digest.size()), nullptr);
    BIGNUM* rinv = BN_new();
    BIGNUM* u1 = BN_new();
    BIGNUM* u2 = BN_new();
    EC_POINT* rp = EC_POINT_new(c.group);
    EC_POINT* q = EC_POINT_new(c.group);
    do {
        if (BN_is_zero(r) || BN_cmp(r, c.order) >= 0) break;
        if (BN_is_zero(s) || BN_cmp(s, c.order) >= 0) break;
        if (EC_POINT_set_compressed_coordinates(c.group, rp, r, v, bc.ctx) != 1) break;
        if (!BN_mod_inverse(rinv, r, c.order, bc.ctx)) break;
        BN_mod_mul(u1, e, rinv, c.order, bc.ctx);
        BN_sub(u1, c.order, u1);
        BN_mod(u1, u1, c.order, bc.ctx);
        BN_mod_mul(u2, s, rinv, c.order, bc.ctx);
        if (EC_POINT_mul(c.group, q, u1, rp, u2, bc.ctx) != 1) break;
        if (EC_POINT_is_at_infinity(c.group, q)) break;
        out = point_to_compressed(q, bc.ctx);
    } while (false);
    BN_free(r);
    BN_free(s);
    BN_free(e);
    BN_free(rinv);
    BN_free(u1);
    BN_free(u2);
    EC_POINT_free(rp);
    EC_POINT_free(q);
    return out;
}

}  // namespace

bytes sha256(std::span<const byte> data) {
    bytes digest(SHA256_DIGEST_LENGTH);
    SHA256(data.data(), data.size(), digest.data());
    return digest;
}

std::array<byte, 4> method_selector(std::string_view method_signature) {
    bytes in(method_signature.begin(), method_signature.end());
    bytes d = sha256(in);
    return {d[0], d[1], d[2], d[3]};
}

KeyPair keygen() {
    EVP_PKEY* key = EVP_PKEY_Q_keygen(nullptr, nullptr, "EC", "secp256k1");
    if (!key) throw Error("CryptoFailure", "keygen failed");
    BIGNUM* priv = nullptr;
    EVP_PKEY_get_bn_param(key, OSSL_PKEY_PARAM_PRIV_KEY, &priv);
    bytes sk(kPrivateKeySize);
    BN_bn2binpad(priv, sk.data(), static_cast<int>(sk.size()));
    BN_clear_free(priv);
    EVP_PKEY_free(key);
    return keypair_from_sk(sk);
}

KeyPair keypair_from_sk(std::span<const byte> sk) {
    if (sk.size() != kPrivateKeySize) throw Error("BadKey", "private key must be 32 bytes");
    BnCtx bc;
    KeyPair kp;
    kp.sk.assign(sk.begin(), sk.end());
    kp.pk = derive_public(sk, bc.ctx);
    return kp;
}

KeyPair keypair_from_sk_hex(std::string_view hex) { return keypair_from_sk(from_hex(hex)); }

KeyPair keypair_from_seed(std::string_view seed) {
    bytes material(seed.begin(), seed.end());
    for (;;) {
        bytes candidate = sha256(material);
        BIGNUM* d = BN_bin2bn(candidate.data(), static_cast<int>(candidate.size()), nullptr);
        bool valid = !BN_is_zero(d) && BN_cmp(d, curve().order) < 0;
        BN_clear_free(d);
        if (valid) return keypair_from_sk(candidate);
        material = candidate;  // negligible, but stay total
    }
}

struct Signer::Impl {
    bytes sk;
};

namespace {

// Reusable per-thread big-number state for signing.
struct SignScratch {
    BN_CTX* ctx = BN_CTX_new();
    ~SignScratch() { BN_CTX_free(ctx); }
};

}  // namespace

Signer::Signer(const KeyPair& kp) : impl_(std::make_unique<Impl>()), pk_(kp.pk) {
    impl_->sk = kp.sk;
    BnCtx bc;
    bytes derived = derive_public(kp.sk, bc.ctx);  // validates the scalar
    if (pk_.empty())
        pk_ = derived;
    else if (pk_ != derived)
        throw Error("BadKey", "public key does not match the private scalar");
}

Signer::~Signer() = default;
Signer::Signer(Signer&&) noexcept = default;
Signer& Signer::operator=(Signer&&) noexcept = default;

// ECDSA over the EC primitives directly: knowing R = k*G gives the recovery
// id without a trial recovery. The nonce is derived by hashing
// sk || digest || counter and rejection-sampled against the group order.
Signature Signer::sign(std::span<const byte> message) const {
    const Curve& c = curve();
    bytes digest = sha256(message);

    thread_local SignScratch scratch;
    BN_CTX* ctx = scratch.ctx;
    BN_CTX_start(ctx);
    BIGNUM* d = BN_CTX_get(ctx);
    BIGNUM* e = BN_CTX_get(ctx);
    BIGNUM* k = BN_CTX_get(ctx);
    BIGNUM* kinv = BN_CTX_get(ctx);
    BIGNUM* x = BN_CTX_get(ctx);
    BIGNUM* y = BN_CTX_get(ctx);
    BIGNUM* r = BN_CTX_get(ctx);
    BIGNUM* s = BN_CTX_get(ctx);
    if (!s) {
        BN_CTX_end(ctx);
        throw Error("CryptoFailure", "out of bignum scratch");
    }
    BN_bin2bn(impl_->sk.data(), static_cast<int>(impl_->sk.size()), d);
    BN_bin2bn(digest.data(), static_cast<int>(digest.size()), e);

    EC_POINT* rp = EC_POINT_new(c.group);
    Signature sig{};
    bool done = false;
    for (std::uint32_t counter = 0; !done && counter < 64; ++counter) {
        bytes seed = impl_->sk;
        seed.insert(seed.end(), digest.begin(), digest.end());
        put_be32(seed, counter);
        bytes kb = sha256(seed);
        BN_bin2bn(kb.data(), static_cast<int>(kb.size()), k);
        if (BN_is_zero(k) || BN_cmp(k, c.order) >= 0) continue;

        if (EC_POINT_mul(c.group, rp, k, nullptr, nullptr, ctx) != 1) break;
        if (EC_POINT_get_affine_coordinates(c.group, rp, x, y, ctx) != 1) break;
        BN_mod(r, x, c.order, ctx);
        if (BN_is_zero(r)) continue;

        // s = k^-1 (e + r d) mod n
        if (!BN_mod_inverse(kinv, k, c.order, ctx)) break;
        BN_mod_mul(s, r, d, c.order, ctx);
        BN_mod_add(s, s, e, c.order, ctx);
        BN_mod_mul(s, s, kinv, c.order, ctx);
        if (BN_is_zero(s)) continue;

        int v = BN_is_odd(y) ? 1 : 0;
        if (BN_cmp(s, c.half_order) > 0) {
            BN_sub(s, c.order, s);  // low-s form negates the nonce point
            v ^= 1;
        }
        BN_bn2binpad(r, sig.data(), 32);
        BN_bn2binpad(s, sig.data() + 32, 32);
        sig[64] = static_cast<byte>(v);
        done = true;
    }
    EC_POINT_free(rp);
    BN_CTX_end(ctx);
    if (!done) throw Error("CryptoFailure", "nonce derivation failed");
    return sig;
}

Signature sign(std::span<const byte> sk, std::span<const byte> message) {
    return Signer(keypair_from_sk(sk)).sign(message);
}

bytes recover(std::span<const byte> message, std::span<const byte> signature) {
    if (signature.size() != kSignatureSize)
        throw Error("MalformedSignature", "signature must be 65 bytes");
    int v = signature[64];
    if (v > 1) return {};
    return recover_candidate(signature.first(64), v, sha256(message));
}

bool verify(std::span<const byte> pk, std::span<const byte> message,
            std::span<const byte> signature) {
    if (signature.size() != kSignatureSize)
        throw Error("MalformedSignature", "signature must be 65 bytes");
    if (pk.size() != kPublicKeySize) return false;
    if (signature[64] > 1) return false;
    bytes q = recover_candidate(signature.first(64), signature[64], sha256(message));
    return !q.empty() && std::equal(q.begin(), q.end(), pk.begin(), pk.end());
}

}  // namespace smacs::crypto
