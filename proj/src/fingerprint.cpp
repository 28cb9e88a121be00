// Licensed under the Apache License 2.0 (see LICENSE file).

#include "honion/fingerprint.hpp"

#include "honion/error.hpp"

namespace honion {

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

constexpr char kHexDigits[] = "0123456789abcdef";
constexpr char kBase32Digits[] = "abcdefghijklmnopqrstuvwxyz234567";

} // namespace

Fingerprint Fingerprint::parse(std::string_view hex) {
    if (hex.size() != 40) {
        raise(ErrorCode::Parse, "fingerprint must be 40 hex characters, got " +
                                    std::to_string(hex.size()));
    }
    Fingerprint fp;
    for (std::size_t i = 0; i < 20; ++i) {
        const int hi = hex_nibble(hex[2 * i]);
        const int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            raise(ErrorCode::Parse, "invalid hex character in fingerprint");
        }
        fp.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return fp;
}

std::string Fingerprint::hex() const {
    std::string out(40, '0');
    for (std::size_t i = 0; i < 20; ++i) {
        out[2 * i] = kHexDigits[bytes[i] >> 4];
        out[2 * i + 1] = kHexDigits[bytes[i] & 0x0f];
    }
    return out;
}

Fingerprint Fingerprint::from_uint(std::uint64_t v) {
    Fingerprint fp;
    for (int i = 0; i < 8; ++i) {
        fp.bytes[19 - i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    return fp;
}

Fingerprint Fingerprint::from_top64(std::uint64_t v) {
    Fingerprint fp;
    for (int i = 0; i < 8; ++i) {
        fp.bytes[7 - i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    return fp;
}

std::string base32_lower(const std::uint8_t* data, std::size_t len) {
    std::string out;
    out.reserve((len * 8 + 4) / 5);
    unsigned buffer = 0;
    int bits = 0;
    for (std::size_t i = 0; i < len; ++i) {
        buffer = (buffer << 8) | data[i];
        bits += 8;
        while (bits >= 5) {
            bits -= 5;
            out.push_back(kBase32Digits[(buffer >> bits) & 0x1f]);
        }
    }
    if (bits > 0) {
        out.push_back(kBase32Digits[(buffer << (5 - bits)) & 0x1f]);
    }
    return out;
}

} // namespace honion
