#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace smacs {

using byte = std::uint8_t;
using bytes = std::vector<byte>;
using i128 = __int128;
using u128 = unsigned __int128;

/// Error with a stable machine-readable code ("BadLength", "NonceUsed", ...)
/// plus a human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

std::string to_hex(std::span<const byte> data, bool prefix = false);
bytes from_hex(std::string_view hex);  // accepts optional 0x prefix

inline void put_be32(bytes& out, std::uint32_t v) {
    out.push_back(static_cast<byte>(v >> 24));
    out.push_back(static_cast<byte>(v >> 16));
    out.push_back(static_cast<byte>(v >> 8));
    out.push_back(static_cast<byte>(v));
}

inline std::uint32_t get_be32(std::span<const byte> in) {
    return (std::uint32_t(in[0]) << 24) | (std::uint32_t(in[1]) << 16) |
           (std::uint32_t(in[2]) << 8) | std::uint32_t(in[3]);
}

inline void put_be16(bytes& out, std::uint16_t v) {
    out.push_back(static_cast<byte>(v >> 8));
    out.push_back(static_cast<byte>(v));
}

inline std::uint16_t get_be16(std::span<const byte> in) {
    return static_cast<std::uint16_t>((std::uint16_t(in[0]) << 8) | in[1]);
}

// 16-byte big-endian two's complement
void put_be_i128(bytes& out, i128 v);
i128 get_be_i128(std::span<const byte> in);

std::string u128_to_string(u128 v);
u128 u128_from_string(std::string_view s);

}  // namespace smacs
