#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace curator {

struct Digest128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;

    bool operator==(const Digest128&) const = default;
    auto operator<=>(const Digest128&) const = default;
};

// MurmurHash3 x64 128-bit with explicit little-endian loads, so digests are
// identical across platforms.
Digest128 murmur3_128(const void* data, std::size_t len, std::uint64_t seed = 0);

inline Digest128 murmur3_128(std::string_view s, std::uint64_t seed = 0) {
    return murmur3_128(s.data(), s.size(), seed);
}

std::string digest_hex(const Digest128& d);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 14695981039346656037ull);

// Streamed digest of a file's bytes. Throws on I/O failure.
Digest128 file_digest(const std::string& path);

struct Digest128Hash {
    std::size_t operator()(const Digest128& d) const {
        return static_cast<std::size_t>(d.lo ^ (d.hi * 0x9e3779b97f4a7c15ull));
    }
};

}  // namespace curator
