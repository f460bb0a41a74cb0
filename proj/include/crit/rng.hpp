#pragma once

#include <array>
#include <cstdint>

namespace crit {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the output
/// is a pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

inline std::uint32_t lo32(std::uint64_t x) { return static_cast<std::uint32_t>(x); }
inline std::uint32_t hi32(std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); }
inline std::uint64_t join64(std::uint32_t lo, std::uint32_t hi) {
    return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

/// 53-bit uniform in [0,1) from two words.
inline double to_unit(std::uint32_t lo, std::uint32_t hi) {
    return static_cast<double>(join64(lo, hi) >> 11) * 0x1.0p-53;
}

inline PhiloxKey make_key(std::uint64_t seed) { return {lo32(seed), hi32(seed)}; }

// Stream tags keep the different uses of one key disjoint.
enum : std::uint32_t {
    kTagRoot = 0x524F4F54u,    // root site of an energy field
    kTagChild = 0x4348494Cu,   // child-site derivation
    kTagSample = 0x53414D50u,  // per-sample field seeds
};

/// Seed of the energy field used by Monte Carlo sample `index`.
inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
    const auto out = philox4x32({lo32(index), hi32(index), 0u, kTagSample}, make_key(seed));
    return join64(out[0], out[1]);
}

}  // namespace crit
