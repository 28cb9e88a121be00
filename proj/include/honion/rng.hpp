// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace honion {

// All randomness flows through mt19937_64, whose output sequence is pinned by
// the standard, so a seed reproduces a run byte-for-byte on any platform.
// Range reduction is done by hand; std:: distributions are not portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform in [0, bound). bound must be nonzero.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % bound;
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return unit() < p; }

    void fill(std::uint8_t* out, std::size_t len) {
        while (len >= 8) {
            std::uint64_t v = gen_();
            for (int i = 7; i >= 0; --i) {
                out[i] = static_cast<std::uint8_t>(v & 0xff);
                v >>= 8;
            }
            out += 8;
            len -= 8;
        }
        if (len > 0) {
            std::uint64_t v = gen_();
            for (std::size_t i = 0; i < len; ++i) {
                out[i] = static_cast<std::uint8_t>(v >> (8 * i));
            }
        }
    }

    /// Stable sub-stream seed for (seed, name), e.g. one stream per snooper.
    static std::uint64_t derive(std::uint64_t seed, std::string_view name) {
        std::uint64_t h = 1469598103934665603ull; // FNV-1a
        for (unsigned char c : name) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= seed;
        // splitmix64 finalizer to decorrelate nearby seeds
        h += 0x9e3779b97f4a7c15ull;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
        return h ^ (h >> 31);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace honion
