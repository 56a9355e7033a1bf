#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "crypto.hpp"
#include "util.hpp"

namespace smacs {

enum class TokenType : byte {
    Super = 0x01,
    Method = 0x02,
    Argument = 0x03,
};

TokenType token_type_from_byte(byte b);  // BadType unless 1..3
std::string token_type_name(TokenType t);
TokenType token_type_from_name(std::string_view name);

struct Address {
    std::array<byte, 20> v{};

    auto operator<=>(const Address&) const = default;
    std::string hex() const { return to_hex(v, true); }
    static Address from_hex(std::string_view s);
    static Address from_bytes(std::span<const byte> b);
    bool is_zero() const;
};

struct MethodId {
    std::array<byte, 4> v{};

    auto operator<=>(const MethodId&) const = default;
    std::string hex() const { return to_hex(v, true); }
    static MethodId from_hex(std::string_view s);
    static MethodId from_bytes(std::span<const byte> b);
    /// Selector for a canonical method signature string.
    static MethodId of(std::string_view method_signature);
};

struct ArgPair {
    std::string name;
    std::string value;

    auto operator<=>(const ArgPair&) const = default;
};

/// Client's ask. Field presence must match the per-type payload table:
/// Super carries no method and no args, Method carries a method only,
/// Argument carries a method plus at least one name/value pair.
struct TokenRequest {
    TokenType type = TokenType::Super;
    Address contract;  // cAddr
    Address sender;    // sAddr
    std::optional<MethodId> method;
    std::vector<ArgPair> args;

    auto operator<=>(const TokenRequest&) const = default;
};

/// Throws ShapeMismatch when the request violates the per-type field table.
void check_request_shape(const TokenRequest& req);

/// Injective request-payload encoding: cAddr || sAddr, then each
/// variable-length field with a 4-byte big-endian length prefix, args in
/// request order.
bytes encode_req_payload(const TokenRequest& req);

/// type(1) || expire(4, BE) || index(16, BE two's complement) || reqPayload
bytes signing_payload(TokenType type, std::uint32_t expire, i128 index,
                      std::span<const byte> req_payload);

constexpr std::size_t kTokenSize = 86;
constexpr i128 kNoIndex = -1;

/// The 86-byte signed capability. A non-negative index marks the token
/// one-time.
struct Token {
    TokenType type = TokenType::Super;
    std::uint32_t expire = 0;
    i128 index = kNoIndex;
    crypto::Signature signature{};

    bool one_time() const { return index >= 0; }
    auto operator<=>(const Token&) const = default;
};

bytes encode_token(const Token& t);
Token decode_token(std::span<const byte> b);  // BadLength / BadType

/// Token-array wire format: 2-byte big-endian count, then fixed 106-byte
/// records of address(20) || token(86).
bytes encode_token_array(const std::vector<std::pair<Address, Token>>& entries);
std::vector<std::pair<Address, Token>> decode_token_array(std::span<const byte> b);
Token extract_token(std::span<const byte> token_array, const Address& addr);

/// Argument list segment used in request payloads and in calldata:
/// len(name) || name || len(value) || value per pair, 4-byte BE lengths.
bytes encode_args(const std::vector<ArgPair>& args);
std::vector<ArgPair> decode_args(std::span<const byte> b);  // Malformed on bad framing

}  // namespace smacs
