#include "token.hpp"

#include <algorithm>

namespace smacs {

TokenType token_type_from_byte(byte b) {
    if (b < 1 || b > 3) throw Error("BadType", "token type byte must be 1, 2 or 3");
    return static_cast<TokenType>(b);
}

std::string token_type_name(TokenType t) {
    switch (t) {
        case TokenType::Super: return "super";
        case TokenType::Method: return "method";
        case TokenType::Argument: return "argument";
    }
    throw Error("BadType", "unreachable token type");
}

TokenType token_type_from_name(std::string_view name) {
    if (name == "super") return TokenType::Super;
    if (name == "method") return TokenType::Method;
    if (name == "argument") return TokenType::Argument;
    throw Error("BadType", "unknown token type name: " + std::string(name));
}

Address Address::from_hex(std::string_view s) {
    return from_bytes(smacs::from_hex(s));
}

Address Address::from_bytes(std::span<const byte> b) {
    if (b.size() != 20) throw Error("BadLength", "address must be 20 bytes");
    Address a;
    std::copy(b.begin(), b.end(), a.v.begin());
    return a;
}

bool Address::is_zero() const {
    return std::all_of(v.begin(), v.end(), [](byte b) { return b == 0; });
}

MethodId MethodId::from_hex(std::string_view s) {
    return from_bytes(smacs::from_hex(s));
}

MethodId MethodId::from_bytes(std::span<const byte> b) {
    if (b.size() != 4) throw Error("BadLength", "method id must be 4 bytes");
    MethodId m;
    std::copy(b.begin(), b.end(), m.v.begin());
    return m;
}

MethodId MethodId::of(std::string_view method_signature) {
    MethodId m;
    m.v = crypto::method_selector(method_signature);
    return m;
}

void check_request_shape(const TokenRequest& req) {
    for (const ArgPair& a : req.args)
        if (a.name.empty()) throw Error("ShapeMismatch", "argument name must be non-empty");
    switch (req.type) {
        case TokenType::Super:
            if (req.method || !req.args.empty())
                throw Error("ShapeMismatch", "super request carries no method and no args");
            return;
        case TokenType::Method:
            if (!req.method || !req.args.empty())
                throw Error("ShapeMismatch", "method request carries a method and no args");
            return;
        case TokenType::Argument:
            if (!req.method || req.args.empty())
                throw Error("ShapeMismatch",
                            "argument request carries a method and at least one arg pair");
            return;
    }
    throw Error("BadType", "invalid token type");
}

namespace {
void put_prefixed(bytes& out, std::span<const byte> field) {
    put_be32(out, static_cast<std::uint32_t>(field.size()));
    out.insert(out.end(), field.begin(), field.end());
}

void put_prefixed(bytes& out, std::string_view field) {
    put_be32(out, static_cast<std::uint32_t>(field.size()));
    out.insert(out.end(), field.begin(), field.end());
}
}  // namespace

bytes encode_req_payload(const TokenRequest& req) {
    check_request_shape(req);
    bytes out;
    out.insert(out.end(), req.contract.v.begin(), req.contract.v.end());
    out.insert(out.end(), req.sender.v.begin(), req.sender.v.end());
    if (req.method) put_prefixed(out, std::span<const byte>(req.method->v));
    for (const ArgPair& a : req.args) {
        put_prefixed(out, a.name);
        put_prefixed(out, a.value);
    }
    return out;
}

bytes signing_payload(TokenType type, std::uint32_t expire, i128 index,
                      std::span<const byte> req_payload) {
    bytes out;
    out.reserve(21 + req_payload.size());
    out.push_back(static_cast<byte>(type));
    put_be32(out, expire);
    put_be_i128(out, index);
    out.insert(out.end(), req_payload.begin(), req_payload.end());
    return out;
}

bytes encode_token(const Token& t) {
    bytes out;
    out.reserve(kTokenSize);
    out.push_back(static_cast<byte>(t.type));
    put_be32(out, t.expire);
    put_be_i128(out, t.index);
    out.insert(out.end(), t.signature.begin(), t.signature.end());
    return out;
}

Token decode_token(std::span<const byte> b) {
    if (b.size() != kTokenSize) throw Error("BadLength", "token must be 86 bytes");
    Token t;
    t.type = token_type_from_byte(b[0]);
    t.expire = get_be32(b.subspan(1, 4));
    t.index = get_be_i128(b.subspan(5, 16));
    std::copy(b.begin() + 21, b.end(), t.signature.begin());
    return t;
}

bytes encode_token_array(const std::vector<std::pair<Address, Token>>& entries) {
    bytes out;
    out.reserve(2 + entries.size() * (20 + kTokenSize));
    put_be16(out, static_cast<std::uint16_t>(entries.size()));
    for (const auto& [addr, token] : entries) {
        out.insert(out.end(), addr.v.begin(), addr.v.end());
        bytes enc = encode_token(token);
        out.insert(out.end(), enc.begin(), enc.end());
    }
    return out;
}

std::vector<std::pair<Address, Token>> decode_token_array(std::span<const byte> b) {
    constexpr std::size_t kRecord = 20 + kTokenSize;
    if (b.size() < 2) throw Error("Malformed", "token array shorter than its count field");
    std::size_t count = get_be16(b);
    if (b.size() != 2 + kRecord * count)
        throw Error("Malformed", "token array length does not match its count");
    std::vector<std::pair<Address, Token>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::span<const byte> rec = b.subspan(2 + i * kRecord, kRecord);
        out.emplace_back(Address::from_bytes(rec.first(20)), decode_token(rec.subspan(20)));
    }
    return out;
}

Token extract_token(std::span<const byte> token_array, const Address& addr) {
    for (const auto& [a, token] : decode_token_array(token_array))
        if (a == addr) return token;
    throw Error("NotFound", "no token for address " + addr.hex());
}

bytes encode_args(const std::vector<ArgPair>& args) {
    bytes out;
    for (const ArgPair& a : args) {
        put_prefixed(out, a.name);
        put_prefixed(out, a.value);
    }
    return out;
}

std::vector<ArgPair> decode_args(std::span<const byte> b) {
    std::vector<ArgPair> out;
    std::size_t pos = 0;
    auto take = [&](std::string& into) {
        if (b.size() - pos < 4) throw Error("Malformed", "truncated length prefix");
        std::uint32_t len = get_be32(b.subspan(pos, 4));
        pos += 4;
        if (b.size() - pos < len) throw Error("Malformed", "truncated field body");
        into.assign(b.begin() + pos, b.begin() + pos + len);
        pos += len;
    };
    while (pos < b.size()) {
        ArgPair a;
        take(a.name);
        take(a.value);
        if (a.name.empty()) throw Error("Malformed", "argument name must be non-empty");
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace smacs
