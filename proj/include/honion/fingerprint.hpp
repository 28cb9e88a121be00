// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace honion {

/// A 160-bit identity on the directory ring. Relays and descriptors share the
/// same value space; ordering is the numeric order of the big-endian bytes.
struct Fingerprint {
    std::array<std::uint8_t, 20> bytes{};

    auto operator<=>(const Fingerprint&) const = default;

    /// Parses 40 hex characters (either case). Throws ErrorCode::Parse otherwise.
    static Fingerprint parse(std::string_view hex);

    /// Canonical text form: 40 lowercase hex characters. parse(hex(x)) == x.
    std::string hex() const;

    /// Value placed in the low 64 bits; handy for small hand-built rings.
    static Fingerprint from_uint(std::uint64_t v);

    /// Value placed in the top 64 bits, i.e. v * 2^96.
    static Fingerprint from_top64(std::uint64_t v);
};

/// Lowercase base-32 (RFC 4648 alphabet, unpadded). 10 bytes encode to
/// exactly 16 characters, the .onion hostname form.
std::string base32_lower(const std::uint8_t* data, std::size_t len);

} // namespace honion
