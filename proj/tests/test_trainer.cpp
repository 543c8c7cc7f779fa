// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "rtfnet/fsio.hpp"
#include "rtfnet/noise.hpp"
#include "rtfnet/rng.hpp"
#include "rtfnet/trainer.hpp"
#include "test_util.hpp"

using rtfnet::ArchConfig;
using rtfnet::Mode;
using rtfnet::RtfNet;
using rtfnet::Tensor;
using rtfnet::TrainConfig;

namespace {

ArchConfig small_arch() {
    ArchConfig cfg;
    cfg.features = 8;
    cfg.nsn_depth = 2;
    cfg.sen_depth = 1;
    cfg.cvt_depth = 1;
    cfg.heads = 2;
    return cfg;
}

TrainConfig small_config(const testutil::TempDir& dir) {
    TrainConfig cfg;
    cfg.arch = small_arch();
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.patches_per_image = 6;
    cfg.patch_size = 32;
    cfg.seed = 7;
    cfg.data_dir = dir.file("train");
    cfg.val_dir = dir.file("val");
    cfg.checkpoint_path = dir.file("model.rtfn");
    cfg.metrics_csv = dir.file("curves.csv");
    return cfg;
}

void write_corpus(const testutil::TempDir& dir, std::size_t train_count,
                  std::size_t val_count) {
    std::filesystem::create_directories(dir.file("train"));
    std::filesystem::create_directories(dir.file("val"));
    for (std::size_t i = 0; i < train_count; ++i) {
        rtfnet::write_image(testutil::synth_image(48, 48, 100 + i),
                            dir.file("train/t" + std::to_string(i) + ".pgm"));
    }
    for (std::size_t i = 0; i < val_count; ++i) {
        rtfnet::write_image(testutil::synth_image(32, 32, 200 + i),
                            dir.file("val/v" + std::to_string(i) + ".pgm"));
    }
}

}  // namespace

TEST_CASE("checkpoint round trip") {
    auto model = RtfNet<float>::create(small_arch(), 21);
    std::mt19937_64 rng(5);
    auto probe = testutil::random_tensor<float>({1, 1, 8, 8}, rng, 0.0f, 1.0f);
    (void)model.forward(nullptr, probe, Mode::kTrain);  // touch bn stats

    TrainConfig cfg;
    cfg.arch = small_arch();
    auto params = model.named_params();
    auto opt = rtfnet::AdamState<float>::init(params);
    opt.t = 17;
    opt.slots[0].m[0] = 0.25f;

    SUBCASE("save -> load -> save is byte-identical") {
        auto ckpt = rtfnet::make_checkpoint(model, cfg, 3, &opt);
        const std::string bytes = rtfnet::encode_checkpoint(ckpt);
        auto decoded = rtfnet::decode_checkpoint(bytes);
        CHECK(rtfnet::encode_checkpoint(decoded) == bytes);
        CHECK(decoded.epoch == 3);
        CHECK(decoded.adam_t == 17);
    }
    SUBCASE("apply restores parameters and forward outputs bitwise") {
        auto ckpt = rtfnet::make_checkpoint(model, cfg, 1, &opt);
        auto reference = model.forward(nullptr, probe, Mode::kEval).restored;

        auto restored_model = rtfnet::model_from_checkpoint(ckpt);
        auto pa = model.named_params();
        auto pb = restored_model.named_params();
        for (std::size_t i = 0; i < pa.size(); ++i) {
            CHECK(testutil::bit_equal(pa[i].second, pb[i].second));
        }
        auto out = restored_model.forward(nullptr, probe, Mode::kEval).restored;
        CHECK(testutil::bit_equal(out, reference));

        rtfnet::AdamState<float> opt2;
        RtfNet<float> target(small_arch());
        rtfnet::apply_checkpoint(ckpt, target, &opt2);
        CHECK(opt2.t == 17);
        CHECK(opt2.slots[0].m[0] == 0.25f);
    }
    SUBCASE("file round trip through the filesystem") {
        testutil::TempDir dir("ckpt");
        auto ckpt = rtfnet::make_checkpoint(model, cfg, 2, nullptr);
        const auto path = dir.file("m.rtfn");
        rtfnet::save_checkpoint(ckpt, path);
        auto loaded = rtfnet::load_checkpoint(path);
        CHECK(rtfnet::encode_checkpoint(loaded) == rtfnet::encode_checkpoint(ckpt));
        CHECK(!loaded.has_optimizer);
    }
    SUBCASE("corrupted magic rejected") {
        auto bytes = rtfnet::encode_checkpoint(rtfnet::make_checkpoint(model, cfg, 0, nullptr));
        bytes[0] = 'X';
        CHECK_THROWS_WITH_AS(rtfnet::decode_checkpoint(bytes),
                             doctest::Contains("magic"), std::runtime_error);
    }
    SUBCASE("truncating the last tensor payload names the tensor") {
        auto bytes = rtfnet::encode_checkpoint(rtfnet::make_checkpoint(model, cfg, 0, nullptr));
        bytes.resize(bytes.size() - 3);
        CHECK_THROWS_WITH_AS(rtfnet::decode_checkpoint(bytes),
                             doctest::Contains("running_var"), std::runtime_error);
    }
    SUBCASE("architecture mismatch rejected at apply") {
        auto ckpt = rtfnet::make_checkpoint(model, cfg, 0, nullptr);
        ArchConfig other = small_arch();
        other.features = 16;
        RtfNet<float> wrong(other);
        CHECK_THROWS_AS(rtfnet::apply_checkpoint(ckpt, wrong, nullptr),
                        std::runtime_error);
    }
}

TEST_CASE("train_epoch") {
    std::mt19937_64 rng(31);
    SUBCASE("zero parameters and p = 0 give zero loss") {
        RtfNet<float> model{small_arch()};
        std::vector<Tensor<float>> patches;
        for (int i = 0; i < 4; ++i) {
            patches.push_back(testutil::random_tensor<float>({1, 16, 16}, rng, 0.0, 1.0));
        }
        auto params = model.named_params();
        for (auto& [n, p] : params) p.set_requires_grad(true);
        auto opt = rtfnet::AdamState<float>::init(params);
        auto result = rtfnet::train_epoch(model, patches, opt, 1e-3f, 0.0, 4, 11);
        CHECK(result.mean_loss == 0.0);
        CHECK(result.mean_psnr == std::numeric_limits<double>::infinity());
    }
    SUBCASE("identical config and seed give a bit-identical loss sequence") {
        auto run = [&]() {
            auto model = RtfNet<float>::create(small_arch(), 3);
            std::mt19937_64 local(77);
            std::vector<Tensor<float>> patches;
            for (int i = 0; i < 6; ++i) {
                patches.push_back(
                    testutil::random_tensor<float>({1, 16, 16}, local, 0.0, 1.0));
            }
            auto params = model.named_params();
            auto opt = rtfnet::AdamState<float>::init(params);
            std::vector<double> losses;
            for (std::uint64_t e = 0; e < 3; ++e) {
                losses.push_back(
                    rtfnet::train_epoch(model, patches, opt, 1e-3f, 0.3, 2, e).mean_loss);
            }
            return losses;
        };
        CHECK(run() == run());
    }
    SUBCASE("loss decreases over a short run") {
        auto model = RtfNet<float>::create(small_arch(), 13);
        std::vector<Tensor<float>> patches;
        auto img = testutil::synth_image(48, 48, 55);
        auto set = rtfnet::extract_patches<float>(img, 16, 12, 4);
        for (auto& p : set.patches) patches.push_back(p);
        auto params = model.named_params();
        auto opt = rtfnet::AdamState<float>::init(params);
        double first = 0, last = 0;
        for (std::uint64_t e = 0; e < 20; ++e) {
            auto r = rtfnet::train_epoch(model, patches, opt, 1e-3f, 0.3, 12, e);
            if (e == 0) first = r.mean_loss;
            last = r.mean_loss;
        }
        CHECK(last < first);
    }
}

TEST_CASE("validate") {
    SUBCASE("ground truth against itself at p = 0 with zero params is infinite") {
        RtfNet<float> model{small_arch()};
        model.mark_stats_initialized();  // zero-weight convs ignore the (0,1) defaults
        std::vector<rtfnet::ImageBuffer> images{testutil::synth_image(24, 24, 61)};
        auto result = rtfnet::validate(model, images, 0.0, 5);
        CHECK(result.mean_psnr == std::numeric_limits<double>::infinity());
        CHECK(result.mean_loss == 0.0);
    }
    SUBCASE("fixed seeds make repeated validation identical") {
        auto model = RtfNet<float>::create(small_arch(), 17);
        std::mt19937_64 rng(9);
        (void)model.forward(nullptr,
                            testutil::random_tensor<float>({1, 1, 8, 8}, rng, 0.0, 1.0),
                            Mode::kTrain);
        std::vector<rtfnet::ImageBuffer> images{testutil::synth_image(25, 31, 62),
                                                testutil::synth_image(24, 24, 63)};
        auto a = rtfnet::validate(model, images, 0.3, 5);
        auto b = rtfnet::validate(model, images, 0.3, 5);
        CHECK(a.mean_loss == b.mean_loss);
        CHECK(a.mean_psnr == b.mean_psnr);
    }
}

TEST_CASE("fit") {
    SUBCASE("records per epoch, csv and checkpoint written, deterministic") {
        testutil::TempDir dir("fit");
        write_corpus(dir, 2, 1);
        auto cfg = small_config(dir);
        auto [ckpt, records] = rtfnet::fit(cfg);
        CHECK(records.size() == cfg.epochs);
        CHECK(records[0].epoch == 0);
        CHECK(ckpt.epoch == cfg.epochs);
        const std::string csv1 = rtfnet::read_file(cfg.metrics_csv);
        const std::string ck1 = rtfnet::read_file(cfg.checkpoint_path);

        auto [ckpt2, records2] = rtfnet::fit(cfg);
        CHECK(rtfnet::read_file(cfg.metrics_csv) == csv1);
        CHECK(rtfnet::read_file(cfg.checkpoint_path) == ck1);
        CHECK(rtfnet::encode_checkpoint(ckpt2) == rtfnet::encode_checkpoint(ckpt));
    }
    SUBCASE("resume matches an uninterrupted run byte for byte") {
        testutil::TempDir dir_a("fit_full");
        testutil::TempDir dir_b("fit_resume");
        write_corpus(dir_a, 2, 1);
        write_corpus(dir_b, 2, 1);

        auto full = small_config(dir_a);
        full.epochs = 4;
        rtfnet::fit(full);

        auto part = small_config(dir_b);
        part.epochs = 2;
        rtfnet::fit(part);
        part.epochs = 4;
        part.resume = true;
        rtfnet::fit(part);

        CHECK(rtfnet::read_file(part.checkpoint_path) ==
              rtfnet::read_file(full.checkpoint_path));
        CHECK(rtfnet::read_file(part.metrics_csv) == rtfnet::read_file(full.metrics_csv));
    }
    SUBCASE("empty corpus rejected") {
        testutil::TempDir dir("fit_empty");
        std::filesystem::create_directories(dir.file("train"));
        std::filesystem::create_directories(dir.file("val"));
        auto cfg = small_config(dir);
        CHECK_THROWS_WITH_AS(rtfnet::fit(cfg), doctest::Contains("no PGM/PPM"),
                             std::runtime_error);
    }
    SUBCASE("channel mismatch names the offending file") {
        testutil::TempDir dir("fit_chan");
        write_corpus(dir, 1, 1);
        rtfnet::ImageBuffer rgb;
        rgb.width = rgb.height = 48;
        rgb.channels = 3;
        rgb.samples.assign(48 * 48 * 3, 77);
        rtfnet::write_image(rgb, dir.file("train/zz_rgb.ppm"));
        auto cfg = small_config(dir);
        CHECK_THROWS_WITH_AS(rtfnet::fit(cfg), doctest::Contains("zz_rgb"),
                             std::runtime_error);
    }
}

TEST_CASE("noise seed schedule never repeats within a run") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t e = 0; e < 30; ++e) {
        const std::uint64_t epoch_seed = rtfnet::derive_seed(0, rtfnet::kSeedEpoch, e);
        for (std::uint64_t b = 0; b < 60; ++b) {
            CHECK(seen.insert(rtfnet::derive_seed(epoch_seed, rtfnet::kSeedNoise, b)).second);
        }
    }
}
