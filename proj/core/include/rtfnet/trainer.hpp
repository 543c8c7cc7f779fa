// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rtfnet/image.hpp"
#include "rtfnet/metrics.hpp"
#include "rtfnet/model.hpp"
#include "rtfnet/optim.hpp"

namespace rtfnet {

/// Full training-run configuration. The numeric defaults reproduce the
/// published recipe: 25 epochs of batch-32 64x64 patches, Adam at 1e-3 with
/// step-6 gamma-0.5 decay, 64 random patches per source image.
struct TrainConfig {
    ArchConfig arch;
    double noise_level = 0.3;
    std::uint32_t epochs = 25;
    std::uint32_t batch_size = 32;
    double base_lr = 1e-3;
    std::uint32_t step_size = 6;
    double gamma = 0.5;
    std::uint32_t patches_per_image = 64;
    std::uint32_t patch_size = 64;
    std::uint64_t seed = 0;
    std::string data_dir;
    std::string val_dir;
    std::string checkpoint_path = "rtfnet.rtfn";
    std::string metrics_csv = "metrics.csv";
    bool resume = false;
    bool save_optimizer = true;
};

/// In-memory checkpoint. Binary layout (all little-endian):
///   magic "RTFN", u32 version,
///   arch block: u32 channels, features, nsn_depth, sen_depth, cvt_depth,
///               heads, kernel, stride, padding, reduction,
///   train block: f64 noise_level, u32 epochs, u32 batch_size, f64 base_lr,
///                u32 step_size, f64 gamma, u32 patches_per_image,
///                u32 patch_size, u64 seed,
///   u32 epoch (completed epochs), u8 has_optimizer,
///   u32 tensor_count, then per tensor (parameters, then batch-norm buffers,
///   in model enumeration order): u16 name length, UTF-8 name, u8 rank,
///   u32 extents, raw f32 payload,
///   if has_optimizer: u64 adam_t, then per parameter the raw f32 first- and
///   second-moment payloads (shapes mirror the parameters).
struct Checkpoint {
    std::uint32_t version = 1;
    ArchConfig arch;
    double noise_level = 0.3;
    std::uint32_t epochs = 25;
    std::uint32_t batch_size = 32;
    double base_lr = 1e-3;
    std::uint32_t step_size = 6;
    double gamma = 0.5;
    std::uint32_t patches_per_image = 64;
    std::uint32_t patch_size = 64;
    std::uint64_t seed = 0;
    std::uint32_t epoch = 0;

    std::vector<std::pair<std::string, Tensor<float>>> tensors;  // params + buffers
    bool has_optimizer = false;
    std::uint64_t adam_t = 0;
    std::vector<std::pair<std::vector<float>, std::vector<float>>> moments;
};

Checkpoint make_checkpoint(RtfNet<float>& model, const TrainConfig& config,
                           std::uint32_t epoch, const AdamState<float>* opt);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Copies checkpoint tensors into a model of the same architecture,
/// validating every name and shape, and marks batch-norm stats usable.
/// When opt is non-null the optimizer state is restored (or reset when the
/// checkpoint carries none).
void apply_checkpoint(const Checkpoint& ckpt, RtfNet<float>& model,
                      AdamState<float>* opt);

/// Convenience: fresh model built from a checkpoint's architecture + tensors.
RtfNet<float> model_from_checkpoint(const Checkpoint& ckpt);

struct EpochResult {
    double mean_loss = 0;
    double mean_psnr = 0;
};

/// One pass over the clean patches: shuffles into batches, corrupts each
/// batch with a seed derived from (epoch_seed, batch index), then forward /
/// MSE / backward / Adam. Returns epoch-mean loss and unit-range PSNR.
EpochResult train_epoch(RtfNet<float>& model, const std::vector<Tensor<float>>& patches,
                        AdamState<float>& opt, float lr, double noise_level,
                        std::uint32_t batch_size, std::uint64_t epoch_seed);

/// Whole-image validation in eval mode. Noise seeds are fixed per image
/// index, so the validation set is identical across epochs. Loss is
/// unit-range MSE; PSNR is computed on the quantized 8-bit output.
EpochResult validate(RtfNet<float>& model, const std::vector<ImageBuffer>& images,
                     double noise_level, std::uint64_t seed);

/// Full training run from directories of PGM/PPM images. Writes the metrics
/// CSV and a checkpoint after every epoch; resumable with the epoch counter,
/// optimizer state, and noise/shuffle seed schedule intact.
std::pair<Checkpoint, std::vector<MetricsRecord>> fit(const TrainConfig& config);

}  // namespace rtfnet
