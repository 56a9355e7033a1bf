#pragma once

#include <array>
#include <memory>

#include "util.hpp"

namespace smacs::crypto {

constexpr std::size_t kSignatureSize = 65;  // r(32) || s(32) || recovery id(1)
constexpr std::size_t kPrivateKeySize = 32;
constexpr std::size_t kPublicKeySize = 33;  // compressed SEC1 point

using Signature = std::array<byte, kSignatureSize>;

bytes sha256(std::span<const byte> data);

/// First four bytes of sha256 over the canonical method signature string.
std::array<byte, 4> method_selector(std::string_view method_signature);

struct KeyPair {
    bytes sk;  // 32-byte scalar
    bytes pk;  // 33-byte compressed point

    std::string sk_hex() const { return to_hex(sk); }
    std::string pk_hex() const { return to_hex(pk); }
};

KeyPair keygen();
KeyPair keypair_from_sk(std::span<const byte> sk);
KeyPair keypair_from_sk_hex(std::string_view hex);
/// Deterministic keypair for fixtures: scalar derived by hashing the seed.
KeyPair keypair_from_seed(std::string_view seed);

/// secp256k1 ECDSA over sha256(message), low-s form, with the recovery id in
/// the trailing byte. Holds the parsed private key so repeated signing skips
/// key reconstruction.
class Signer {
public:
    explicit Signer(const KeyPair& kp);
    ~Signer();
    Signer(const Signer&) = delete;
    Signer& operator=(const Signer&) = delete;
    Signer(Signer&&) noexcept;
    Signer& operator=(Signer&&) noexcept;

    Signature sign(std::span<const byte> message) const;
    const bytes& public_key() const { return pk_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    bytes pk_;
};

/// One-shot convenience form.
Signature sign(std::span<const byte> sk, std::span<const byte> message);

/// Recovery-based verification: the public key recovered from (r, s, v) must
/// equal pk, so a change to any of the 65 signature bytes fails.
bool verify(std::span<const byte> pk, std::span<const byte> message,
            std::span<const byte> signature);

/// Recovered compressed public key, or empty on an unrecoverable signature.
bytes recover(std::span<const byte> message, std::span<const byte> signature);

}  // namespace smacs::crypto
