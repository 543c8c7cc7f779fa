// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include "rtfnet/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include "rtfnet/fsio.hpp"
#include "rtfnet/noise.hpp"
#include "rtfnet/rng.hpp"

namespace rtfnet {

namespace {

constexpr char kMagic[4] = {'R', 'T', 'F', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_f32_array(std::string& out, const float* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        put_u32(out, std::bit_cast<std::uint32_t>(data[i]));
    }
}

struct Reader {
    std::string_view bytes;
    std::size_t pos = 0;
    std::string context = "header";

    void need(std::size_t n) {
        if (bytes.size() - pos < n) {
            throw std::runtime_error("checkpoint: truncated while reading " + context);
        }
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= std::uint16_t(std::uint8_t(bytes[pos++])) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes[pos++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(bytes.substr(pos, n));
        pos += n;
        return s;
    }
    std::vector<float> f32_array(std::size_t count) {
        std::vector<float> out(count);
        for (auto& v : out) v = std::bit_cast<float>(u32());
        return out;
    }
};

std::vector<ImageBuffer> load_image_dir(const std::string& dir, std::size_t channels,
                                        std::vector<std::string>* names = nullptr) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("image directory not found: " + dir);
    }
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".pgm" || ext == ".ppm") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) {
        throw std::runtime_error("no PGM/PPM images found in " + dir);
    }
    std::vector<ImageBuffer> images;
    for (const auto& p : paths) {
        ImageBuffer img = read_image(p);
        if (img.channels != channels) {
            throw std::runtime_error(p + ": has " + std::to_string(img.channels) +
                                     " channel(s), model expects " +
                                     std::to_string(channels));
        }
        images.push_back(std::move(img));
        if (names) names->push_back(p);
    }
    return images;
}

double psnr_from_unit_mse(double m) {
    return m == 0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / m);
}

}  // namespace

Checkpoint make_checkpoint(RtfNet<float>& model, const TrainConfig& config,
                           std::uint32_t epoch, const AdamState<float>* opt) {
    Checkpoint ckpt;
    ckpt.version = kVersion;
    ckpt.arch = model.cfg;
    ckpt.noise_level = config.noise_level;
    ckpt.epochs = config.epochs;
    ckpt.batch_size = config.batch_size;
    ckpt.base_lr = config.base_lr;
    ckpt.step_size = config.step_size;
    ckpt.gamma = config.gamma;
    ckpt.patches_per_image = config.patches_per_image;
    ckpt.patch_size = config.patch_size;
    ckpt.seed = config.seed;
    ckpt.epoch = epoch;
    for (auto& [name, p] : model.named_params()) {
        ckpt.tensors.emplace_back(name, p.clone());
    }
    for (auto& [name, b] : model.named_buffers()) {
        ckpt.tensors.emplace_back(name, b.clone());
    }
    if (opt) {
        ckpt.has_optimizer = true;
        ckpt.adam_t = opt->t;
        for (const auto& slot : opt->slots) ckpt.moments.emplace_back(slot.m, slot.v);
    }
    return ckpt;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, ckpt.version);
    const ArchConfig& a = ckpt.arch;
    for (std::size_t v : {a.channels, a.features, a.nsn_depth, a.sen_depth, a.cvt_depth,
                          a.heads, a.kernel, a.stride, a.padding, a.reduction}) {
        put_u32(out, static_cast<std::uint32_t>(v));
    }
    put_f64(out, ckpt.noise_level);
    put_u32(out, ckpt.epochs);
    put_u32(out, ckpt.batch_size);
    put_f64(out, ckpt.base_lr);
    put_u32(out, ckpt.step_size);
    put_f64(out, ckpt.gamma);
    put_u32(out, ckpt.patches_per_image);
    put_u32(out, ckpt.patch_size);
    put_u64(out, ckpt.seed);
    put_u32(out, ckpt.epoch);
    put_u8(out, ckpt.has_optimizer ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        put_u8(out, static_cast<std::uint8_t>(t.rank()));
        for (std::size_t d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
        put_f32_array(out, t.data().data(), t.size());
    }
    if (ckpt.has_optimizer) {
        put_u64(out, ckpt.adam_t);
        put_u32(out, static_cast<std::uint32_t>(ckpt.moments.size()));
        for (const auto& [m, v] : ckpt.moments) {
            put_f32_array(out, m.data(), m.size());
            put_f32_array(out, v.data(), v.size());
        }
    }
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    Reader r{bytes};
    r.context = "magic";
    if (r.str(4) != std::string(kMagic, 4)) {
        throw std::runtime_error("checkpoint: bad magic (not an RTFN file)");
    }
    Checkpoint ckpt;
    r.context = "version";
    ckpt.version = r.u32();
    if (ckpt.version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " +
                                 std::to_string(ckpt.version));
    }
    r.context = "arch config";
    ArchConfig& a = ckpt.arch;
    for (std::size_t* field : {&a.channels, &a.features, &a.nsn_depth, &a.sen_depth,
                               &a.cvt_depth, &a.heads, &a.kernel, &a.stride, &a.padding,
                               &a.reduction}) {
        *field = r.u32();
    }
    r.context = "train config";
    ckpt.noise_level = r.f64();
    ckpt.epochs = r.u32();
    ckpt.batch_size = r.u32();
    ckpt.base_lr = r.f64();
    ckpt.step_size = r.u32();
    ckpt.gamma = r.f64();
    ckpt.patches_per_image = r.u32();
    ckpt.patch_size = r.u32();
    ckpt.seed = r.u64();
    ckpt.epoch = r.u32();
    ckpt.has_optimizer = r.u8() != 0;
    const std::uint32_t tensor_count = r.u32();
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
        r.context = "tensor table entry " + std::to_string(i);
        const std::uint16_t name_len = r.u16();
        const std::string name = r.str(name_len);
        r.context = "tensor " + name;
        const std::uint8_t rank = r.u8();
        std::vector<std::size_t> dims;
        std::size_t count = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            dims.push_back(r.u32());
            count *= dims.back();
        }
        if (rank == 0 || count == 0) {
            throw std::runtime_error("checkpoint: degenerate shape for tensor " + name);
        }
        ckpt.tensors.emplace_back(name, Tensor<float>(dims, r.f32_array(count)));
    }
    if (ckpt.has_optimizer) {
        r.context = "optimizer state";
        ckpt.adam_t = r.u64();
        const std::uint32_t moment_count = r.u32();
        for (std::uint32_t i = 0; i < moment_count; ++i) {
            if (i >= ckpt.tensors.size()) {
                throw std::runtime_error("checkpoint: more moments than tensors");
            }
            r.context = "optimizer moments for " + ckpt.tensors[i].first;
            const std::size_t count = ckpt.tensors[i].second.size();
            auto m = r.f32_array(count);
            auto v = r.f32_array(count);
            ckpt.moments.emplace_back(std::move(m), std::move(v));
        }
    }
    if (r.pos != bytes.size()) {
        throw std::runtime_error("checkpoint: trailing bytes after payload");
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return decode_checkpoint(read_file(path));
}

void apply_checkpoint(const Checkpoint& ckpt, RtfNet<float>& model,
                      AdamState<float>* opt) {
    if (!(ckpt.arch == model.cfg)) {
        throw std::runtime_error("checkpoint: architecture does not match model");
    }
    auto expected = model.named_params();
    const std::size_t param_count = expected.size();
    for (auto& [name, b] : model.named_buffers()) expected.emplace_back(name, b);
    if (ckpt.tensors.size() != expected.size()) {
        throw std::runtime_error("checkpoint: tensor count " +
                                 std::to_string(ckpt.tensors.size()) + ", model expects " +
                                 std::to_string(expected.size()));
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& [name, src] = ckpt.tensors[i];
        auto& [want_name, dst] = expected[i];
        if (name != want_name) {
            throw std::runtime_error("checkpoint: tensor " + std::to_string(i) +
                                     " named '" + name + "', model expects '" +
                                     want_name + "'");
        }
        if (src.dims() != dst.dims()) {
            throw std::runtime_error("checkpoint: shape mismatch for tensor " + name);
        }
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        auto dst = expected[i].second.data();
        auto src = ckpt.tensors[i].second.data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
    model.mark_stats_initialized();
    if (opt) {
        if (ckpt.has_optimizer) {
            if (ckpt.moments.size() != param_count) {
                throw std::runtime_error("checkpoint: optimizer moment count mismatch");
            }
            opt->t = ckpt.adam_t;
            opt->slots.resize(param_count);
            for (std::size_t i = 0; i < param_count; ++i) {
                if (ckpt.moments[i].first.size() != expected[i].second.size()) {
                    throw std::runtime_error("checkpoint: moment shape mismatch for " +
                                             expected[i].first);
                }
                opt->slots[i].m = ckpt.moments[i].first;
                opt->slots[i].v = ckpt.moments[i].second;
            }
        } else {
            auto params = model.named_params();
            *opt = AdamState<float>::init(params);
        }
    }
}

RtfNet<float> model_from_checkpoint(const Checkpoint& ckpt) {
    RtfNet<float> model(ckpt.arch);
    apply_checkpoint(ckpt, model, nullptr);
    return model;
}

EpochResult train_epoch(RtfNet<float>& model, const std::vector<Tensor<float>>& patches,
                        AdamState<float>& opt, float lr, double noise_level,
                        std::uint32_t batch_size, std::uint64_t epoch_seed) {
    if (patches.empty()) throw std::invalid_argument("train_epoch: no patches");
    std::vector<std::pair<Tensor<float>, Tensor<float>>> pairs;
    pairs.reserve(patches.size());
    for (const auto& p : patches) pairs.emplace_back(p, p);
    auto batches =
        make_batches(pairs, batch_size, derive_seed(epoch_seed, kSeedShuffle));

    auto params = model.named_params();
    double loss_acc = 0, psnr_acc = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
        const NoiseConfig noise_cfg{noise_level,
                                    derive_seed(epoch_seed, kSeedNoise, bi)};
        auto noisy = add_salt_pepper_unit(batches[bi].first, noise_cfg);
        auto& clean = batches[bi].second;

        Tape<float> tape;
        auto out = model.forward(&tape, noisy, Mode::kTrain);
        auto loss = mse_loss(&tape, out.restored, clean);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
            throw std::runtime_error("train_epoch: non-finite loss at batch " +
                                     std::to_string(bi));
        }
        model.zero_grad();
        tape.backward(loss);
        adam_step(params, opt, lr);

        loss_acc += loss_value;
        psnr_acc += psnr_from_unit_mse(loss_value);
    }
    const double n = static_cast<double>(batches.size());
    return {loss_acc / n, psnr_acc / n};
}

EpochResult validate(RtfNet<float>& model, const std::vector<ImageBuffer>& images,
                     double noise_level, std::uint64_t seed) {
    if (images.empty()) throw std::invalid_argument("validate: no images");
    double loss_acc = 0, psnr_acc = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const NoiseConfig noise_cfg{noise_level, derive_seed(seed, kSeedValNoise, i)};
        const ImageBuffer noisy = add_salt_pepper(images[i], noise_cfg);
        const auto noisy_t = to_tensor<float>(noisy);
        const auto clean_t = to_tensor<float>(images[i]);
        auto out = model.forward(nullptr, noisy_t, Mode::kEval);
        loss_acc += mse(out.restored, clean_t);
        psnr_acc += psnr(from_tensor(out.restored, /*clamp=*/true), images[i]);
    }
    const double n = static_cast<double>(images.size());
    return {loss_acc / n, psnr_acc / n};
}

std::pair<Checkpoint, std::vector<MetricsRecord>> fit(const TrainConfig& config) {
    config.arch.validate();
    if (config.epochs == 0) throw std::invalid_argument("fit: epochs must be >= 1");
    const auto train_images = load_image_dir(config.data_dir, config.arch.channels);
    const auto val_images = load_image_dir(config.val_dir, config.arch.channels);

    std::vector<Tensor<float>> patches;
    for (std::size_t i = 0; i < train_images.size(); ++i) {
        auto set = extract_patches<float>(train_images[i], config.patch_size,
                                          config.patches_per_image,
                                          derive_seed(config.seed, kSeedPatches, i));
        for (auto& p : set.patches) patches.push_back(std::move(p));
    }

    auto model = RtfNet<float>::create(config.arch, config.seed);
    auto params = model.named_params();
    auto opt = AdamState<float>::init(params);

    std::uint32_t start_epoch = 0;
    std::vector<MetricsRecord> records;
    if (config.resume && std::filesystem::exists(config.checkpoint_path)) {
        const Checkpoint ckpt = load_checkpoint(config.checkpoint_path);
        apply_checkpoint(ckpt, model, &opt);
        start_epoch = ckpt.epoch;
        if (std::filesystem::exists(config.metrics_csv)) {
            for (const auto& r : curves_from_csv(config.metrics_csv)) {
                if (r.epoch < start_epoch) records.push_back(r);
            }
        }
    }

    const LrSchedule schedule{config.base_lr, config.step_size, config.gamma};
    for (std::uint32_t e = start_epoch; e < config.epochs; ++e) {
        const float lr = static_cast<float>(lr_at(schedule, e));
        EpochResult train_result;
        try {
            train_result = train_epoch(model, patches, opt, lr, config.noise_level,
                                       config.batch_size,
                                       derive_seed(config.seed, kSeedEpoch, e));
        } catch (const std::exception& err) {
            throw std::runtime_error("fit: epoch " + std::to_string(e) + ": " +
                                     err.what());
        }
        const EpochResult val_result =
            validate(model, val_images, config.noise_level, config.seed);
        records.push_back({e, train_result.mean_loss, val_result.mean_loss,
                           train_result.mean_psnr, val_result.mean_psnr});
        curves_to_csv(records, config.metrics_csv);
        save_checkpoint(
            make_checkpoint(model, config, e + 1, config.save_optimizer ? &opt : nullptr),
            config.checkpoint_path);
    }

    const std::uint32_t final_epoch = std::max(start_epoch, config.epochs);
    Checkpoint final_ckpt = make_checkpoint(model, config, final_epoch,
                                            config.save_optimizer ? &opt : nullptr);
    return {std::move(final_ckpt), std::move(records)};
}

}  // namespace rtfnet
