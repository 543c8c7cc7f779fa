// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "rtfnet/ops.hpp"
#include "rtfnet/optim.hpp"
#include "rtfnet/tensor.hpp"

namespace rtfnet {

/// Architecture hyperparameters. Defaults are the published configuration:
/// 32 features, 8 residual blocks in the noise-suppression stage, 2 CvT
/// blocks of depth 2 with 4 attention heads in the structure-enhancement
/// stage, 3x3 stride-1 pad-1 convolutions, pixel-(un)shuffle factor 2.
struct ArchConfig {
    std::size_t channels = 1;
    std::size_t features = 32;
    std::size_t nsn_depth = 8;
    std::size_t sen_depth = 2;
    std::size_t cvt_depth = 2;
    std::size_t heads = 4;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t padding = 1;
    std::size_t reduction = 2;

    void validate() const;
    bool operator==(const ArchConfig&) const = default;
};

/// Convolution block: conv -> batch norm -> ReLU, shape preserving.
template <typename T>
struct ConvBlock {
    Tensor<T> w, b;
    Tensor<T> bn_gamma, bn_beta;
    BatchNormStats<T> bn_stats;

    ConvBlock(std::size_t in_ch, std::size_t out_ch, const ArchConfig& cfg);
    Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode mode);
};

/// Identity-mapped pair of convolution blocks: x + B(B(x)).
template <typename T>
struct ResidualBlock {
    ConvBlock<T> block1, block2;

    explicit ResidualBlock(const ArchConfig& cfg);
    Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, Mode mode);
};

template <typename T>
struct LayerNormParams {
    Tensor<T> gamma, beta;
    explicit LayerNormParams(std::size_t channels);
};

/// Token-reduced multi-head attention: pixel-unshuffle, 1x1 channel
/// reduction, per-head scaled dot-product attention over the flattened
/// spatial tokens, pixel-shuffle back, 1x1 projection. Shape preserving.
template <typename T>
struct AttentionBlock {
    std::size_t heads, reduction;
    Tensor<T> w_red, b_red;
    std::vector<Tensor<T>> wq, wk, wv;  // one per head, features x head_dim
    Tensor<T> w_proj;                   // 1x1 conv, no bias

    explicit AttentionBlock(const ArchConfig& cfg);
    /// attn_maps, when given, receives the post-softmax attention matrix of
    /// each head (batch x tokens x tokens).
    Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x,
                      std::vector<Tensor<T>>* attn_maps = nullptr);
};

/// 1x1 conv -> GELU -> 1x1 conv, shape preserving.
template <typename T>
struct MlpBlock {
    Tensor<T> w1, b1, w2, b2;
    explicit MlpBlock(const ArchConfig& cfg);
    Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x);
};

/// Pre-norm transformer block: x* = x + A(LN(x)); out = x* + M(LN(x*)).
template <typename T>
struct TransformerBlock {
    LayerNormParams<T> ln1, ln2;
    AttentionBlock<T> attn;
    MlpBlock<T> mlp;

    explicit TransformerBlock(const ArchConfig& cfg);
    Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x);
};

/// Convolutional token embedding followed by cvt_depth transformer blocks.
template <typename T>
struct CvtBlock {
    Tensor<T> w_emb, b_emb;
    std::vector<TransformerBlock<T>> blocks;

    explicit CvtBlock(const ArchConfig& cfg);
    Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, const ArchConfig& cfg);
};

/// The two-stage denoiser. Stage one (NSN) predicts a noise map that is
/// subtracted from the input to form the transition image; stage two (SEN)
/// predicts a detail map that is added back to produce the restored image.
template <typename T>
struct RtfNet {
    ArchConfig cfg;

    Tensor<T> nsn_head_w, nsn_head_b;
    std::vector<ResidualBlock<T>> nsn_blocks;
    Tensor<T> nsn_tail_w, nsn_tail_b;

    Tensor<T> sen_head_w, sen_head_b;
    std::vector<CvtBlock<T>> sen_blocks;
    Tensor<T> sen_tail_w, sen_tail_b;

    explicit RtfNet(const ArchConfig& config);

    /// Constructs and initializes parameters deterministically from seed.
    static RtfNet create(const ArchConfig& config, std::uint64_t seed);

    /// Learnable tensors in fixed enumeration order (checkpoint stability).
    NamedParams<T> named_params();
    /// Batch-norm running-stat buffers, fixed order.
    NamedParams<T> named_buffers();
    /// Marks all batch-norm stats usable in eval mode (checkpoint load path).
    void mark_stats_initialized();

    std::size_t param_count();
    void zero_grad();

    /// Predicted noise map (same shape as input).
    Tensor<T> nsn_forward(Tape<T>* tape, const Tensor<T>& noisy, Mode mode);
    /// Predicted detail map (same shape as input; H, W divisible by reduction).
    Tensor<T> sen_forward(Tape<T>* tape, const Tensor<T>& y, Mode mode);

    struct Output {
        Tensor<T> restored;    // I* of the two-stage composition
        Tensor<T> transition;  // y after noise suppression
    };

    /// Full pipeline. Eval mode reflection-pads odd extents to multiples of
    /// the reduction factor and crops the outputs back; train mode requires
    /// already-divisible extents.
    Output forward(Tape<T>* tape, const Tensor<T>& noisy, Mode mode);
};

extern template struct ConvBlock<float>;
extern template struct ConvBlock<double>;
extern template struct ResidualBlock<float>;
extern template struct ResidualBlock<double>;
extern template struct LayerNormParams<float>;
extern template struct LayerNormParams<double>;
extern template struct AttentionBlock<float>;
extern template struct AttentionBlock<double>;
extern template struct MlpBlock<float>;
extern template struct MlpBlock<double>;
extern template struct TransformerBlock<float>;
extern template struct TransformerBlock<double>;
extern template struct CvtBlock<float>;
extern template struct CvtBlock<double>;
extern template struct RtfNet<float>;
extern template struct RtfNet<double>;

}  // namespace rtfnet
