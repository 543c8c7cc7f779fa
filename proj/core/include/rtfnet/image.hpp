// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rtfnet/tensor.hpp"

namespace rtfnet {

/// Decoded 8-bit raster, row-major with interleaved channels.
struct ImageBuffer {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> samples;
};

/// Parses binary PGM (P5) or PPM (P6) with maxval 255. Header comments and
/// arbitrary whitespace are handled per the netpbm convention.
ImageBuffer decode_netpbm(std::string_view bytes);
ImageBuffer read_image(const std::string& path);

/// Emits "P5\n<w> <h>\n255\n" (or P6 for 3 channels) followed by the raw
/// payload. Byte-exact format; written atomically.
std::string encode_netpbm(const ImageBuffer& buffer);
void write_image(const ImageBuffer& buffer, const std::string& path);

/// samples / 255 into a 1 x C x H x W tensor.
template <typename T>
Tensor<T> to_tensor(const ImageBuffer& buffer);

/// value * 255, clamped to [0, 255] (or rejected when clamp is false),
/// rounded half away from zero.
template <typename T>
ImageBuffer from_tensor(const Tensor<T>& t, bool clamp);

/// Random crops from one source image. Patch tensors are C x size x size with
/// values sample/255 exactly.
template <typename T>
struct PatchSet {
    std::string source_id;
    std::size_t patch_size = 0;
    std::vector<std::pair<std::size_t, std::size_t>> offsets;  // (top, left)
    std::vector<Tensor<T>> patches;
};

template <typename T>
PatchSet<T> extract_patches(const ImageBuffer& buffer, std::size_t size,
                            std::size_t count, std::uint64_t seed);

/// Seeded Fisher-Yates shuffle, then consecutive groups of at most batch_size
/// stacked along a new leading batch axis; the final short batch is kept.
template <typename T>
std::vector<std::pair<Tensor<T>, Tensor<T>>> make_batches(
    const std::vector<std::pair<Tensor<T>, Tensor<T>>>& pairs, std::size_t batch_size,
    std::uint64_t seed);

#define RTFNET_IMAGE_EXTERN(T)                                                       \
    extern template Tensor<T> to_tensor(const ImageBuffer&);                        \
    extern template ImageBuffer from_tensor(const Tensor<T>&, bool);                \
    extern template PatchSet<T> extract_patches(const ImageBuffer&, std::size_t,    \
                                                std::size_t, std::uint64_t);        \
    extern template std::vector<std::pair<Tensor<T>, Tensor<T>>> make_batches(      \
        const std::vector<std::pair<Tensor<T>, Tensor<T>>>&, std::size_t, std::uint64_t);

RTFNET_IMAGE_EXTERN(float)
RTFNET_IMAGE_EXTERN(double)
#undef RTFNET_IMAGE_EXTERN

}  // namespace rtfnet
