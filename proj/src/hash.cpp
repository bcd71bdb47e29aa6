#include "curator/hash.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace curator {

namespace {

constexpr std::uint64_t kC1 = 0x87c37b91114253d5ull;
constexpr std::uint64_t kC2 = 0x4cf5ad432745937full;

inline std::uint64_t rotl64(std::uint64_t x, int r) {
    return (x << r) | (x >> (64 - r));
}

inline std::uint64_t fmix64(std::uint64_t k) {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdull;
    k ^= k >> 33;
    k *= 0xc4ceb9fe1a85ec53ull;
    k ^= k >> 33;
    return k;
}

// Byte-wise little-endian load: digest must not depend on host endianness.
inline std::uint64_t load64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

// MurmurHash3 x64 128-bit, restated as a block-streaming state so file
// digests never buffer more than one chunk.
struct Murmur3State {
    std::uint64_t h1, h2;
    std::uint64_t total = 0;
    std::array<unsigned char, 16> carry{};
    std::size_t carry_len = 0;

    explicit Murmur3State(std::uint64_t seed) : h1(seed), h2(seed) {}

    void mix_block(const unsigned char* p) {
        std::uint64_t k1 = load64_le(p);
        std::uint64_t k2 = load64_le(p + 8);
        k1 *= kC1; k1 = rotl64(k1, 31); k1 *= kC2; h1 ^= k1;
        h1 = rotl64(h1, 27); h1 += h2; h1 = h1 * 5 + 0x52dce729ull;
        k2 *= kC2; k2 = rotl64(k2, 33); k2 *= kC1; h2 ^= k2;
        h2 = rotl64(h2, 31); h2 += h1; h2 = h2 * 5 + 0x38495ab5ull;
    }

    void update(const unsigned char* p, std::size_t len) {
        total += len;
        if (carry_len > 0) {
            std::size_t need = 16 - carry_len;
            std::size_t take = len < need ? len : need;
            std::memcpy(carry.data() + carry_len, p, take);
            carry_len += take;
            p += take;
            len -= take;
            if (carry_len < 16) return;
            mix_block(carry.data());
            carry_len = 0;
        }
        while (len >= 16) {
            mix_block(p);
            p += 16;
            len -= 16;
        }
        if (len > 0) {
            std::memcpy(carry.data(), p, len);
            carry_len = len;
        }
    }

    Digest128 finish() {
        const unsigned char* tail = carry.data();
        std::uint64_t k1 = 0, k2 = 0;
        switch (carry_len) {
            case 15: k2 ^= std::uint64_t(tail[14]) << 48; [[fallthrough]];
            case 14: k2 ^= std::uint64_t(tail[13]) << 40; [[fallthrough]];
            case 13: k2 ^= std::uint64_t(tail[12]) << 32; [[fallthrough]];
            case 12: k2 ^= std::uint64_t(tail[11]) << 24; [[fallthrough]];
            case 11: k2 ^= std::uint64_t(tail[10]) << 16; [[fallthrough]];
            case 10: k2 ^= std::uint64_t(tail[9]) << 8; [[fallthrough]];
            case 9:
                k2 ^= std::uint64_t(tail[8]);
                k2 *= kC2; k2 = rotl64(k2, 33); k2 *= kC1; h2 ^= k2;
                [[fallthrough]];
            case 8: k1 ^= std::uint64_t(tail[7]) << 56; [[fallthrough]];
            case 7: k1 ^= std::uint64_t(tail[6]) << 48; [[fallthrough]];
            case 6: k1 ^= std::uint64_t(tail[5]) << 40; [[fallthrough]];
            case 5: k1 ^= std::uint64_t(tail[4]) << 32; [[fallthrough]];
            case 4: k1 ^= std::uint64_t(tail[3]) << 24; [[fallthrough]];
            case 3: k1 ^= std::uint64_t(tail[2]) << 16; [[fallthrough]];
            case 2: k1 ^= std::uint64_t(tail[1]) << 8; [[fallthrough]];
            case 1:
                k1 ^= std::uint64_t(tail[0]);
                k1 *= kC1; k1 = rotl64(k1, 31); k1 *= kC2; h1 ^= k1;
                break;
            case 0: break;
        }
        h1 ^= total;
        h2 ^= total;
        h1 += h2;
        h2 += h1;
        h1 = fmix64(h1);
        h2 = fmix64(h2);
        h1 += h2;
        h2 += h1;
        return {h1, h2};
    }
};

}  // namespace

Digest128 murmur3_128(const void* data, std::size_t len, std::uint64_t seed) {
    Murmur3State st(seed);
    st.update(static_cast<const unsigned char*>(data), len);
    return st.finish();
}

// Hex order is lo then hi, matching the conventional x64_128 digest string.
std::string digest_hex(const Digest128& d) {
    static const char* hex = "0123456789abcdef";
    std::string out(32, '0');
    for (int i = 0; i < 16; ++i) {
        std::uint64_t word = i < 8 ? d.lo : d.hi;
        int shift = 56 - 8 * (i % 8);
        auto byte = static_cast<unsigned char>((word >> shift) & 0xff);
        out[2 * std::size_t(i)] = hex[byte >> 4];
        out[2 * std::size_t(i) + 1] = hex[byte & 0xf];
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

Digest128 file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_digest: cannot open " + path);
    Murmur3State st(0);
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        auto got = static_cast<std::size_t>(in.gcount());
        if (got > 0)
            st.update(reinterpret_cast<const unsigned char*>(buf.data()), got);
    }
    if (in.bad()) throw std::runtime_error("file_digest: read failed on " + path);
    return st.finish();
}

}  // namespace curator
