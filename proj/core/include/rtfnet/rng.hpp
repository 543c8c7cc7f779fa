// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace rtfnet {

// All randomness in the project flows through these helpers so that runs are
// bit-reproducible across platforms: mt19937_64 is fully specified by the
// standard, and the uniform mapping below avoids the implementation-defined
// std::uniform_* distributions.

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by scaling; n must be nonzero. Bias is below
/// 2^-53 * n, irrelevant at the range sizes used here.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n));
}

/// splitmix64 finalizer; the standard seed-stream mixer.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed plus a tag path
/// (e.g. {seed, kNoiseTag, epoch, batch}). Injective in practice; the trainer
/// relies on distinct tags never colliding within a run.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(base ^ 0x2545f4914f6cdd1dULL);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

// Stream tags for derive_seed; fixed for the life of the file formats.
inline constexpr std::uint64_t kSeedPatches = 0x70617463ULL;   // "patc"
inline constexpr std::uint64_t kSeedEpoch = 0x65706f63ULL;     // "epoc"
inline constexpr std::uint64_t kSeedShuffle = 0x73687566ULL;   // "shuf"
inline constexpr std::uint64_t kSeedNoise = 0x6e6f6973ULL;     // "nois"
inline constexpr std::uint64_t kSeedValNoise = 0x766e6f69ULL;  // "vnoi"

}  // namespace rtfnet
