// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include "rtfnet/noise.hpp"

#include <stdexcept>

#include "rtfnet/rng.hpp"

namespace rtfnet {

namespace {

void check_level(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("noise level must be in [0, 1]");
    }
}

}  // namespace

ImageBuffer add_salt_pepper(const ImageBuffer& image, const NoiseConfig& cfg) {
    check_level(cfg.level);
    ImageBuffer out = image;
    std::mt19937_64 rng(cfg.seed);
    for (auto& s : out.samples) {
        const double r1 = uniform01(rng);
        const double r2 = uniform01(rng);
        if (r1 < cfg.level) s = r2 < 0.5 ? 0 : 255;
    }
    return out;
}

template <typename T>
Tensor<T> add_salt_pepper_unit(const Tensor<T>& t, const NoiseConfig& cfg) {
    check_level(cfg.level);
    Tensor<T> out = t.clone();
    std::mt19937_64 rng(cfg.seed);
    for (auto& v : out.data()) {
        const double r1 = uniform01(rng);
        const double r2 = uniform01(rng);
        if (r1 < cfg.level) v = r2 < 0.5 ? T(0) : T(1);
    }
    return out;
}

CorruptionStats corruption_stats(const ImageBuffer& clean, const ImageBuffer& noisy) {
    if (clean.height != noisy.height || clean.width != noisy.width ||
        clean.channels != noisy.channels) {
        throw std::invalid_argument("corruption_stats: dimension mismatch");
    }
    std::size_t corrupted = 0, salt = 0, pepper = 0;
    for (std::size_t i = 0; i < clean.samples.size(); ++i) {
        if (clean.samples[i] == noisy.samples[i]) continue;
        ++corrupted;
        if (noisy.samples[i] == 255) ++salt;
        if (noisy.samples[i] == 0) ++pepper;
    }
    const double n = static_cast<double>(clean.samples.size());
    return {corrupted / n, salt / n, pepper / n};
}

template Tensor<float> add_salt_pepper_unit(const Tensor<float>&, const NoiseConfig&);
template Tensor<double> add_salt_pepper_unit(const Tensor<double>&, const NoiseConfig&);

}  // namespace rtfnet
