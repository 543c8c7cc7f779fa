// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "rtfnet/image.hpp"
#include "rtfnet/tensor.hpp"

namespace rtfnet {

/// Salt-and-pepper noise parameters: corruption probability and RNG seed.
struct NoiseConfig {
    double level = 0.3;  // p in [0, 1]
    std::uint64_t seed = 0;
};

/// Corrupts each sample independently (per channel for color images): with
/// two uniform draws r1, r2, a sample becomes 0 when r1 < p and r2 < 0.5,
/// 255 when r1 < p and r2 >= 0.5, and is left untouched otherwise. Samples
/// are visited in buffer order, two draws each, from an mt19937_64 stream
/// seeded by cfg.seed; identical (seed, dims) give bit-identical output.
ImageBuffer add_salt_pepper(const ImageBuffer& image, const NoiseConfig& cfg);

/// Same corruption over a unit-range tensor: salt maps to 1, pepper to 0.
/// The draw order matches add_salt_pepper on a buffer of the same length.
template <typename T>
Tensor<T> add_salt_pepper_unit(const Tensor<T>& t, const NoiseConfig& cfg);

struct CorruptionStats {
    double fraction_corrupted = 0;
    double fraction_salt = 0;
    double fraction_pepper = 0;
};

/// Counts samples differing from clean; 255 classifies as salt, 0 as pepper.
/// Fractions are relative to the total sample count.
CorruptionStats corruption_stats(const ImageBuffer& clean, const ImageBuffer& noisy);

extern template Tensor<float> add_salt_pepper_unit(const Tensor<float>&,
                                                   const NoiseConfig&);
extern template Tensor<double> add_salt_pepper_unit(const Tensor<double>&,
                                                    const NoiseConfig&);

}  // namespace rtfnet
