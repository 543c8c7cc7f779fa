// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "rtfnet/tensor.hpp"

namespace rtfnet {

enum class Mode { kTrain, kEval };

/// Per-channel running statistics for batch normalization. Buffers, not
/// parameters: they are updated by train-mode forward passes and consumed by
/// eval mode. `initialized` guards eval use before any accumulation.
template <typename T>
struct BatchNormStats {
    Tensor<T> running_mean;
    Tensor<T> running_var;
    bool initialized = false;

    explicit BatchNormStats(std::size_t channels)
        : running_mean({channels}, T(0)), running_var({channels}, T(1)) {}
    BatchNormStats() = default;
};

// All ops are pure given their inputs plus the tape. Passing tape == nullptr
// runs forward-only (no graph is recorded and no gradients propagate).
// Output tensors get requires_grad when recording and any input has it.

/// 2-D cross-correlation with zero padding over N x Cin x H x W.
/// weight is Cout x Cin x k x k; bias (size Cout) may be an undefined tensor.
template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride, std::size_t padding);

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x);

/// Exact GELU: 0.5 * v * (1 + erf(v / sqrt(2))).
template <typename T>
Tensor<T> gelu(Tape<T>* tape, const Tensor<T>& x);

/// Batch normalization over (batch, spatial) per channel, eps 1e-5.
/// Train mode normalizes with batch statistics and folds them into `stats`
/// (momentum 0.1); eval mode consumes `stats` and errors when none have been
/// accumulated. x is N x C x H x W; scale/shift hold one value per channel.
template <typename T>
Tensor<T> batch_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& scale,
                     const Tensor<T>& shift, BatchNormStats<T>& stats, Mode mode);

/// Layer normalization across the channel axis at each (batch, spatial)
/// position, eps 1e-5. scale/shift hold one value per channel.
template <typename T>
Tensor<T> layer_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& scale,
                     const Tensor<T>& shift);

/// Batched matrix product ...xMxK * ...xKxN -> ...xMxN. Leading batch extents
/// must match; a rank-2 operand broadcasts against a batched one.
template <typename T>
Tensor<T> matmul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

/// Softmax over the last axis, computed with max subtraction.
template <typename T>
Tensor<T> softmax(Tape<T>* tape, const Tensor<T>& x);

/// N x C x H x W -> N x C*r^2 x H/r x W/r with
/// out[n][c*r*r + dy*r + dx][i][j] = x[n][c][i*r+dy][j*r+dx].
template <typename T>
Tensor<T> pixel_unshuffle(Tape<T>* tape, const Tensor<T>& x, std::size_t r);

/// Exact inverse of pixel_unshuffle under the same channel ordering.
template <typename T>
Tensor<T> pixel_shuffle(Tape<T>* tape, const Tensor<T>& x, std::size_t r);

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& x, T factor);

/// Sum of all elements, as a scalar tensor.
template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x);

/// Copying reshape; total element count must be preserved.
template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& x, std::vector<std::size_t> dims);

/// Swaps the last two axes (rank >= 2).
template <typename T>
Tensor<T> transpose_last2(Tape<T>* tape, const Tensor<T>& x);

/// Concatenates along the last axis; all leading extents must match.
template <typename T>
Tensor<T> concat_last(Tape<T>* tape, const std::vector<Tensor<T>>& parts);

/// Mean squared error as a differentiable scalar: mean((a-b)^2).
template <typename T>
Tensor<T> mse_loss(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

/// Reflection-pads the bottom/right spatial edges of an N x C x H x W tensor.
/// Forward-only utility (eval-time shape alignment); rejects recording tapes.
template <typename T>
Tensor<T> reflect_pad_hw(Tape<T>* tape, const Tensor<T>& x, std::size_t pad_h,
                         std::size_t pad_w);

/// Crops to the top-left h x w window of an N x C x H x W tensor.
template <typename T>
Tensor<T> crop_hw(Tape<T>* tape, const Tensor<T>& x, std::size_t h, std::size_t w);

#define RTFNET_OPS_EXTERN(T)                                                              \
    extern template Tensor<T> conv2d(Tape<T>*, const Tensor<T>&, const Tensor<T>&,       \
                                     const Tensor<T>&, std::size_t, std::size_t);        \
    extern template Tensor<T> relu(Tape<T>*, const Tensor<T>&);                          \
    extern template Tensor<T> gelu(Tape<T>*, const Tensor<T>&);                          \
    extern template Tensor<T> batch_norm(Tape<T>*, const Tensor<T>&, const Tensor<T>&,   \
                                         const Tensor<T>&, BatchNormStats<T>&, Mode);    \
    extern template Tensor<T> layer_norm(Tape<T>*, const Tensor<T>&, const Tensor<T>&,   \
                                         const Tensor<T>&);                              \
    extern template Tensor<T> matmul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);      \
    extern template Tensor<T> softmax(Tape<T>*, const Tensor<T>&);                       \
    extern template Tensor<T> pixel_unshuffle(Tape<T>*, const Tensor<T>&, std::size_t);  \
    extern template Tensor<T> pixel_shuffle(Tape<T>*, const Tensor<T>&, std::size_t);    \
    extern template Tensor<T> add(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
    extern template Tensor<T> sub(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
    extern template Tensor<T> mul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
    extern template Tensor<T> scale(Tape<T>*, const Tensor<T>&, T);                      \
    extern template Tensor<T> sum(Tape<T>*, const Tensor<T>&);                           \
    extern template Tensor<T> reshape(Tape<T>*, const Tensor<T>&,                        \
                                      std::vector<std::size_t>);                         \
    extern template Tensor<T> transpose_last2(Tape<T>*, const Tensor<T>&);               \
    extern template Tensor<T> concat_last(Tape<T>*, const std::vector<Tensor<T>>&);      \
    extern template Tensor<T> mse_loss(Tape<T>*, const Tensor<T>&, const Tensor<T>&);    \
    extern template Tensor<T> reflect_pad_hw(Tape<T>*, const Tensor<T>&, std::size_t,    \
                                             std::size_t);                               \
    extern template Tensor<T> crop_hw(Tape<T>*, const Tensor<T>&, std::size_t, std::size_t);

RTFNET_OPS_EXTERN(float)
RTFNET_OPS_EXTERN(double)
#undef RTFNET_OPS_EXTERN

}  // namespace rtfnet
