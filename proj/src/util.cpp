#include "util.hpp"

namespace smacs {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace

std::string to_hex(std::span<const byte> data, bool prefix) {
    std::string out;
    out.reserve(data.size() * 2 + (prefix ? 2 : 0));
    if (prefix) out += "0x";
    for (byte b : data) {
        out += kHexDigits[b >> 4];
        out += kHexDigits[b & 0x0f];
    }
    return out;
}

bytes from_hex(std::string_view hex) {
    if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X'))
        hex.remove_prefix(2);
    if (hex.size() % 2 != 0) throw Error("BadHex", "odd-length hex string");
    bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw Error("BadHex", "invalid hex digit");
        out.push_back(static_cast<byte>((hi << 4) | lo));
    }
    return out;
}

void put_be_i128(bytes& out, i128 v) {
    for (int shift = 120; shift >= 0; shift -= 8)
        out.push_back(static_cast<byte>(static_cast<u128>(v) >> shift));
}

i128 get_be_i128(std::span<const byte> in) {
    u128 v = 0;
    for (int i = 0; i < 16; ++i) v = (v << 8) | in[i];
    return static_cast<i128>(v);
}

std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
        out.insert(out.begin(), static_cast<char>('0' + int(v % 10)));
        v /= 10;
    }
    return out;
}

u128 u128_from_string(std::string_view s) {
    if (s.empty()) throw Error("BadNumber", "empty numeric string");
    u128 v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') throw Error("BadNumber", "invalid digit");
        v = v * 10 + static_cast<u128>(c - '0');
    }
    return v;
}

}  // namespace smacs
