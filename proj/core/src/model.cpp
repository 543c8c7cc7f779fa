// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include "rtfnet/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rtfnet {

void ArchConfig::validate() const {
    if (channels != 1 && channels != 3) {
        throw std::invalid_argument("arch: channels must be 1 or 3");
    }
    if (heads == 0 || features % heads != 0) {
        throw std::invalid_argument("arch: features must be divisible by heads");
    }
    if (reduction == 0 || features % (reduction * reduction) != 0) {
        throw std::invalid_argument("arch: features must be divisible by reduction^2");
    }
    if (nsn_depth == 0 || sen_depth == 0 || cvt_depth == 0) {
        throw std::invalid_argument("arch: all depths must be >= 1");
    }
    if (kernel == 0 || kernel % 2 == 0) {
        throw std::invalid_argument("arch: kernel must be odd");
    }
}

template <typename T>
ConvBlock<T>::ConvBlock(std::size_t in_ch, std::size_t out_ch, const ArchConfig& cfg)
    : w({out_ch, in_ch, cfg.kernel, cfg.kernel}),
      b({out_ch}),
      bn_gamma({out_ch}),
      bn_beta({out_ch}),
      bn_stats(out_ch) {}

template <typename T>
Tensor<T> ConvBlock<T>::forward(Tape<T>* tape, const Tensor<T>& x, Mode mode) {
    auto y = conv2d(tape, x, w, b, 1, (w.dim(2) - 1) / 2);
    y = batch_norm(tape, y, bn_gamma, bn_beta, bn_stats, mode);
    return relu(tape, y);
}

template <typename T>
ResidualBlock<T>::ResidualBlock(const ArchConfig& cfg)
    : block1(cfg.features, cfg.features, cfg), block2(cfg.features, cfg.features, cfg) {}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(Tape<T>* tape, const Tensor<T>& x, Mode mode) {
    return add(tape, x, block2.forward(tape, block1.forward(tape, x, mode), mode));
}

template <typename T>
LayerNormParams<T>::LayerNormParams(std::size_t channels)
    : gamma({channels}), beta({channels}) {}

template <typename T>
AttentionBlock<T>::AttentionBlock(const ArchConfig& cfg)
    : heads(cfg.heads),
      reduction(cfg.reduction),
      w_red({cfg.features, cfg.features * cfg.reduction * cfg.reduction, 1, 1}),
      b_red({cfg.features}),
      w_proj({cfg.features, cfg.features / (cfg.reduction * cfg.reduction), 1, 1}) {
    const std::size_t head_dim = cfg.features / cfg.heads;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        wq.emplace_back(std::vector<std::size_t>{cfg.features, head_dim});
        wk.emplace_back(std::vector<std::size_t>{cfg.features, head_dim});
        wv.emplace_back(std::vector<std::size_t>{cfg.features, head_dim});
    }
}

template <typename T>
Tensor<T> AttentionBlock<T>::forward(Tape<T>* tape, const Tensor<T>& x,
                                     std::vector<Tensor<T>>* attn_maps) {
    const std::size_t n = x.dim(0), f = x.dim(1);
    const std::size_t hr = x.dim(2) / reduction, wr = x.dim(3) / reduction;
    const std::size_t tokens = hr * wr;
    const std::size_t head_dim = f / heads;
    const T inv_sqrt_dk = T(1) / std::sqrt(T(head_dim));

    auto u = pixel_unshuffle(tape, x, reduction);
    auto red = conv2d(tape, u, w_red, b_red, 1, 0);
    auto tok = transpose_last2(tape, reshape(tape, red, {n, f, tokens}));  // n x L x f

    std::vector<Tensor<T>> head_outs;
    head_outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        auto q = matmul(tape, tok, wq[h]);
        auto k = matmul(tape, tok, wk[h]);
        auto v = matmul(tape, tok, wv[h]);
        auto scores = scale(tape, matmul(tape, q, transpose_last2(tape, k)), inv_sqrt_dk);
        auto attn = softmax(tape, scores);
        if (attn_maps) attn_maps->push_back(attn);
        head_outs.push_back(matmul(tape, attn, v));
    }
    auto cat = concat_last(tape, head_outs);                 // n x L x f
    auto sp = reshape(tape, transpose_last2(tape, cat), {n, f, hr, wr});
    auto shuf = pixel_shuffle(tape, sp, reduction);          // n x f/r^2 x H x W
    return conv2d(tape, shuf, w_proj, Tensor<T>(), 1, 0);
}

template <typename T>
MlpBlock<T>::MlpBlock(const ArchConfig& cfg)
    : w1({cfg.features, cfg.features, 1, 1}),
      b1({cfg.features}),
      w2({cfg.features, cfg.features, 1, 1}),
      b2({cfg.features}) {}

template <typename T>
Tensor<T> MlpBlock<T>::forward(Tape<T>* tape, const Tensor<T>& x) {
    return conv2d(tape, gelu(tape, conv2d(tape, x, w1, b1, 1, 0)), w2, b2, 1, 0);
}

template <typename T>
TransformerBlock<T>::TransformerBlock(const ArchConfig& cfg)
    : ln1(cfg.features), ln2(cfg.features), attn(cfg), mlp(cfg) {}

template <typename T>
Tensor<T> TransformerBlock<T>::forward(Tape<T>* tape, const Tensor<T>& x) {
    auto xs = add(tape, x, attn.forward(tape, layer_norm(tape, x, ln1.gamma, ln1.beta)));
    return add(tape, xs, mlp.forward(tape, layer_norm(tape, xs, ln2.gamma, ln2.beta)));
}

template <typename T>
CvtBlock<T>::CvtBlock(const ArchConfig& cfg)
    : w_emb({cfg.features, cfg.features, cfg.kernel, cfg.kernel}), b_emb({cfg.features}) {
    for (std::size_t i = 0; i < cfg.cvt_depth; ++i) blocks.emplace_back(cfg);
}

template <typename T>
Tensor<T> CvtBlock<T>::forward(Tape<T>* tape, const Tensor<T>& x, const ArchConfig& cfg) {
    auto y = conv2d(tape, x, w_emb, b_emb, cfg.stride, cfg.padding);
    for (auto& block : blocks) y = block.forward(tape, y);
    return y;
}

template <typename T>
RtfNet<T>::RtfNet(const ArchConfig& config)
    : cfg(config),
      nsn_head_w({config.features, config.channels, config.kernel, config.kernel}),
      nsn_head_b({config.features}),
      nsn_tail_w({config.channels, config.features, config.kernel, config.kernel}),
      nsn_tail_b({config.channels}),
      sen_head_w({config.features, config.channels, config.kernel, config.kernel}),
      sen_head_b({config.features}),
      sen_tail_w({config.channels, config.features, config.kernel, config.kernel}),
      sen_tail_b({config.channels}) {
    cfg.validate();
    for (std::size_t i = 0; i < cfg.nsn_depth; ++i) nsn_blocks.emplace_back(cfg);
    for (std::size_t i = 0; i < cfg.sen_depth; ++i) sen_blocks.emplace_back(cfg);
}

template <typename T>
RtfNet<T> RtfNet<T>::create(const ArchConfig& config, std::uint64_t seed) {
    RtfNet net(config);
    auto params = net.named_params();
    init_params(params, seed);
    return net;
}

template <typename T>
NamedParams<T> RtfNet<T>::named_params() {
    NamedParams<T> out;
    auto put = [&out](std::string name, const Tensor<T>& t) {
        out.emplace_back(std::move(name), t);
    };
    put("nsn.head.w", nsn_head_w);
    put("nsn.head.b", nsn_head_b);
    for (std::size_t i = 0; i < nsn_blocks.size(); ++i) {
        const std::string base = "nsn.res" + std::to_string(i) + ".";
        ConvBlock<T>* convs[2] = {&nsn_blocks[i].block1, &nsn_blocks[i].block2};
        for (std::size_t j = 0; j < 2; ++j) {
            const std::string jj = std::to_string(j);
            put(base + "conv" + jj + ".w", convs[j]->w);
            put(base + "conv" + jj + ".b", convs[j]->b);
            put(base + "bn" + jj + ".gamma", convs[j]->bn_gamma);
            put(base + "bn" + jj + ".beta", convs[j]->bn_beta);
        }
    }
    put("nsn.tail.w", nsn_tail_w);
    put("nsn.tail.b", nsn_tail_b);
    put("sen.head.w", sen_head_w);
    put("sen.head.b", sen_head_b);
    for (std::size_t i = 0; i < sen_blocks.size(); ++i) {
        const std::string cbase = "sen.cvt" + std::to_string(i) + ".";
        put(cbase + "embed.w", sen_blocks[i].w_emb);
        put(cbase + "embed.b", sen_blocks[i].b_emb);
        for (std::size_t j = 0; j < sen_blocks[i].blocks.size(); ++j) {
            auto& tf = sen_blocks[i].blocks[j];
            const std::string base = cbase + "tf" + std::to_string(j) + ".";
            put(base + "ln1.gamma", tf.ln1.gamma);
            put(base + "ln1.beta", tf.ln1.beta);
            put(base + "attn.red.w", tf.attn.w_red);
            put(base + "attn.red.b", tf.attn.b_red);
            for (std::size_t h = 0; h < tf.attn.heads; ++h) {
                const std::string hh = std::to_string(h);
                put(base + "attn.q" + hh + ".w", tf.attn.wq[h]);
                put(base + "attn.k" + hh + ".w", tf.attn.wk[h]);
                put(base + "attn.v" + hh + ".w", tf.attn.wv[h]);
            }
            put(base + "attn.proj.w", tf.attn.w_proj);
            put(base + "ln2.gamma", tf.ln2.gamma);
            put(base + "ln2.beta", tf.ln2.beta);
            put(base + "mlp.w1", tf.mlp.w1);
            put(base + "mlp.b1", tf.mlp.b1);
            put(base + "mlp.w2", tf.mlp.w2);
            put(base + "mlp.b2", tf.mlp.b2);
        }
    }
    put("sen.tail.w", sen_tail_w);
    put("sen.tail.b", sen_tail_b);
    return out;
}

template <typename T>
NamedParams<T> RtfNet<T>::named_buffers() {
    NamedParams<T> out;
    for (std::size_t i = 0; i < nsn_blocks.size(); ++i) {
        const std::string base = "nsn.res" + std::to_string(i) + ".";
        ConvBlock<T>* convs[2] = {&nsn_blocks[i].block1, &nsn_blocks[i].block2};
        for (std::size_t j = 0; j < 2; ++j) {
            const std::string jj = std::to_string(j);
            out.emplace_back(base + "bn" + jj + ".running_mean",
                             convs[j]->bn_stats.running_mean);
            out.emplace_back(base + "bn" + jj + ".running_var",
                             convs[j]->bn_stats.running_var);
        }
    }
    return out;
}

template <typename T>
void RtfNet<T>::mark_stats_initialized() {
    for (auto& block : nsn_blocks) {
        block.block1.bn_stats.initialized = true;
        block.block2.bn_stats.initialized = true;
    }
}

template <typename T>
std::size_t RtfNet<T>::param_count() {
    std::size_t n = 0;
    for (auto& [name, p] : named_params()) n += p.size();
    return n;
}

template <typename T>
void RtfNet<T>::zero_grad() {
    for (auto& [name, p] : named_params()) p.zero_grad();
}

template <typename T>
Tensor<T> RtfNet<T>::nsn_forward(Tape<T>* tape, const Tensor<T>& noisy, Mode mode) {
    auto x = conv2d(tape, noisy, nsn_head_w, nsn_head_b, cfg.stride, cfg.padding);
    for (auto& block : nsn_blocks) x = block.forward(tape, x, mode);
    return conv2d(tape, x, nsn_tail_w, nsn_tail_b, cfg.stride, cfg.padding);
}

template <typename T>
Tensor<T> RtfNet<T>::sen_forward(Tape<T>* tape, const Tensor<T>& y, Mode mode) {
    (void)mode;  // SEN carries no batch norm; kept for interface symmetry
    auto x = conv2d(tape, y, sen_head_w, sen_head_b, cfg.stride, cfg.padding);
    for (auto& block : sen_blocks) x = block.forward(tape, x, cfg);
    return conv2d(tape, x, sen_tail_w, sen_tail_b, cfg.stride, cfg.padding);
}

template <typename T>
typename RtfNet<T>::Output RtfNet<T>::forward(Tape<T>* tape, const Tensor<T>& noisy,
                                              Mode mode) {
    const std::size_t h = noisy.dim(2), w = noisy.dim(3);
    const std::size_t r = cfg.reduction;
    const std::size_t pad_h = (r - h % r) % r;
    const std::size_t pad_w = (r - w % r) % r;
    if (pad_h == 0 && pad_w == 0) {
        auto y = sub(tape, noisy, nsn_forward(tape, noisy, mode));
        auto restored = add(tape, y, sen_forward(tape, y, mode));
        return {restored, y};
    }
    if (mode != Mode::kEval || tape != nullptr) {
        throw std::invalid_argument(
            "forward: spatial extents must be multiples of the reduction factor "
            "outside padded eval mode");
    }
    auto padded = reflect_pad_hw<T>(nullptr, noisy, pad_h, pad_w);
    auto y = sub<T>(nullptr, padded, nsn_forward(nullptr, padded, mode));
    auto restored = add<T>(nullptr, y, sen_forward(nullptr, y, mode));
    return {crop_hw<T>(nullptr, restored, h, w), crop_hw<T>(nullptr, y, h, w)};
}

template struct ConvBlock<float>;
template struct ConvBlock<double>;
template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template struct LayerNormParams<float>;
template struct LayerNormParams<double>;
template struct AttentionBlock<float>;
template struct AttentionBlock<double>;
template struct MlpBlock<float>;
template struct MlpBlock<double>;
template struct TransformerBlock<float>;
template struct TransformerBlock<double>;
template struct CvtBlock<float>;
template struct CvtBlock<double>;
template struct RtfNet<float>;
template struct RtfNet<double>;

}  // namespace rtfnet
