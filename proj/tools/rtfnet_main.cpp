// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: noise injection, training, denoising, directory
// evaluation, and comparison against the embedded reference PSNR table.
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "rtfnet/fsio.hpp"
#include "rtfnet/image.hpp"
#include "rtfnet/metrics.hpp"
#include "rtfnet/model.hpp"
#include "rtfnet/noise.hpp"
#include "rtfnet/rng.hpp"
#include "rtfnet/trainer.hpp"

namespace {

struct EvalRow {
    std::string stem;
    double noisy_psnr = 0;
    double denoised_psnr = 0;
};

std::size_t eval_thread_count(std::size_t jobs) {
    std::size_t n = std::max<unsigned>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RTFNET_THREADS")) {
        std::size_t cap = 0;
        auto [ptr, ec] = std::from_chars(env, env + std::string_view(env).size(), cap);
        if (ec == std::errc() && cap >= 1) n = cap;
    }
    return std::min(n, std::max<std::size_t>(1, jobs));
}

void cmd_add_noise(const std::string& input, const std::string& output, double level,
                   std::uint64_t seed) {
    const auto image = rtfnet::read_image(input);
    rtfnet::write_image(rtfnet::add_salt_pepper(image, {level, seed}), output);
}

void cmd_denoise(const std::string& checkpoint, const std::string& input,
                 const std::string& output, const std::string& dump_nsn) {
    auto model = rtfnet::model_from_checkpoint(rtfnet::load_checkpoint(checkpoint));
    const auto image = rtfnet::read_image(input);
    if (image.channels != model.cfg.channels) {
        throw std::runtime_error(input + ": channel count does not match the checkpoint");
    }
    auto out = model.forward(nullptr, rtfnet::to_tensor<float>(image), rtfnet::Mode::kEval);
    rtfnet::write_image(rtfnet::from_tensor(out.restored, /*clamp=*/true), output);
    if (!dump_nsn.empty()) {
        rtfnet::write_image(rtfnet::from_tensor(out.transition, /*clamp=*/true), dump_nsn);
    }
}

std::vector<EvalRow> run_eval(const std::string& checkpoint, const std::string& dir,
                              double level, std::uint64_t seed) {
    auto model = rtfnet::model_from_checkpoint(rtfnet::load_checkpoint(checkpoint));

    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return char(std::tolower(c)); });
        if (ext == ".pgm" || ext == ".ppm") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::runtime_error("no PGM/PPM images found in " + dir);

    std::vector<EvalRow> rows(paths.size());
    std::atomic<std::size_t> next{0};
    std::string error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < paths.size(); i = next.fetch_add(1)) {
            try {
                const auto clean = rtfnet::read_image(paths[i].string());
                if (clean.channels != model.cfg.channels) {
                    throw std::runtime_error(paths[i].string() +
                                             ": channel count does not match the checkpoint");
                }
                const auto noisy = rtfnet::add_salt_pepper(
                    clean, {level, rtfnet::derive_seed(seed, rtfnet::kSeedValNoise, i)});
                auto out =
                    model.forward(nullptr, rtfnet::to_tensor<float>(noisy), rtfnet::Mode::kEval);
                rows[i] = {paths[i].stem().string(), rtfnet::psnr(noisy, clean),
                           rtfnet::psnr(rtfnet::from_tensor(out.restored, true), clean)};
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (error.empty()) error = e.what();
            }
        }
    };
    const std::size_t threads = eval_thread_count(paths.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (!error.empty()) throw std::runtime_error(error);
    return rows;
}

std::string eval_rows_to_csv(const std::vector<EvalRow>& rows, int level_percent) {
    std::string out = "image,level,noisy_psnr,denoised_psnr\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6g,%.6g\n", r.stem.c_str(),
                      level_percent, r.noisy_psnr, r.denoised_psnr);
        out += buf;
    }
    return out;
}

void print_eval_rows(const std::vector<EvalRow>& rows, int level_percent) {
    std::printf("%-20s %6s %12s %14s\n", "image", "level", "noisy dB", "denoised dB");
    double noisy_mean = 0, denoised_mean = 0;
    for (const auto& r : rows) {
        std::printf("%-20s %5d%% %12.2f %14.2f\n", r.stem.c_str(), level_percent,
                    r.noisy_psnr, r.denoised_psnr);
        noisy_mean += r.noisy_psnr;
        denoised_mean += r.denoised_psnr;
    }
    std::printf("%-20s %5d%% %12.2f %14.2f\n", "(mean)", level_percent,
                noisy_mean / double(rows.size()), denoised_mean / double(rows.size()));
}

std::vector<rtfnet::MeasuredRow> measured_rows_from_csv(const std::string& path) {
    std::istringstream in(rtfnet::read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "image,level,noisy_psnr,denoised_psnr") {
        throw std::runtime_error(path + ": expected an eval CSV header");
    }
    std::vector<rtfnet::MeasuredRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string stem, level, noisy, denoised;
        if (!std::getline(ls, stem, ',') || !std::getline(ls, level, ',') ||
            !std::getline(ls, noisy, ',') || !std::getline(ls, denoised)) {
            throw std::runtime_error(path + ": malformed row: " + line);
        }
        const auto image = rtfnet::parse_test_image(stem);
        if (!image) {
            throw std::runtime_error(path + ": unknown test image '" + stem +
                                     "' (want Lena/Bridge/Pepper/BSD300)");
        }
        rows.push_back({*image, std::stoi(level), std::stod(denoised)});
    }
    return rows;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"RTF-Net: two-stage residual + convolutional-transformer "
                 "salt-and-pepper image denoiser"};
    app.require_subcommand(1);

    // add-noise
    std::string in_path, out_path;
    double level = 0.3;
    std::uint64_t seed = 0;
    auto* add_noise = app.add_subcommand("add-noise", "Corrupt an image with seeded "
                                                      "salt-and-pepper noise");
    add_noise->add_option("--input", in_path, "Input PGM/PPM image")->required();
    add_noise->add_option("--output", out_path, "Output image path")->required();
    add_noise->add_option("--level", level, "Noise level p in [0,1]")->required();
    add_noise->add_option("--seed", seed, "RNG seed (default 0)");
    add_noise->callback([&]() { cmd_add_noise(in_path, out_path, level, seed); });

    // train
    rtfnet::TrainConfig train_cfg;
    auto* train = app.add_subcommand("train", "Train a model on a directory of images");
    train->add_option("--data", train_cfg.data_dir, "Training image directory")->required();
    train->add_option("--val", train_cfg.val_dir, "Validation image directory")->required();
    train->add_option("--checkpoint", train_cfg.checkpoint_path, "Checkpoint output path");
    train->add_option("--metrics-csv", train_cfg.metrics_csv, "Training-curve CSV path");
    train->add_option("--level", train_cfg.noise_level, "Noise level p (default 0.3)");
    train->add_option("--epochs", train_cfg.epochs, "Epochs (default 25)");
    train->add_option("--batch", train_cfg.batch_size, "Batch size (default 32)");
    train->add_option("--lr", train_cfg.base_lr, "Base learning rate (default 0.001)");
    train->add_option("--step-size", train_cfg.step_size, "LR decay step in epochs (default 6)");
    train->add_option("--gamma", train_cfg.gamma, "LR decay factor (default 0.5)");
    train->add_option("--patches-per-image", train_cfg.patches_per_image,
                      "Random patches per source image (default 64)");
    train->add_option("--patch-size", train_cfg.patch_size, "Patch edge length (default 64)");
    train->add_option("--seed", train_cfg.seed, "Run seed (default 0)");
    train->add_flag("--resume", train_cfg.resume, "Resume from the checkpoint if present");
    train->add_option("--channels", train_cfg.arch.channels, "Image channels, 1 or 3");
    train->add_option("--features", train_cfg.arch.features, "Feature width (default 32)");
    train->add_option("--nsn-depth", train_cfg.arch.nsn_depth, "Residual blocks (default 8)");
    train->add_option("--sen-depth", train_cfg.arch.sen_depth, "CvT blocks (default 2)");
    train->add_option("--cvt-depth", train_cfg.arch.cvt_depth,
                      "Transformer blocks per CvT block (default 2)");
    train->add_option("--heads", train_cfg.arch.heads, "Attention heads (default 4)");
    train->callback([&]() {
        auto [ckpt, records] = rtfnet::fit(train_cfg);
        std::printf("trained %zu epoch(s); checkpoint: %s; curves: %s\n",
                    records.size(), train_cfg.checkpoint_path.c_str(),
                    train_cfg.metrics_csv.c_str());
        if (!records.empty()) {
            const auto& last = records.back();
            std::printf("final epoch %u: train loss %.6g, val loss %.6g, "
                        "train PSNR %.3f dB, val PSNR %.3f dB\n",
                        last.epoch, last.train_loss, last.val_loss, last.train_psnr,
                        last.val_psnr);
        }
    });

    // denoise
    std::string ckpt_path, dump_nsn;
    auto* denoise = app.add_subcommand("denoise", "Denoise a single image");
    denoise->add_option("--checkpoint", ckpt_path, "Trained checkpoint")->required();
    denoise->add_option("--input", in_path, "Noisy input image")->required();
    denoise->add_option("--output", out_path, "Restored output image")->required();
    denoise->add_option("--dump-nsn", dump_nsn,
                        "Also write the noise-suppression transition image");
    denoise->callback([&]() { cmd_denoise(ckpt_path, in_path, out_path, dump_nsn); });

    // eval
    std::string eval_dir, eval_csv;
    auto* eval = app.add_subcommand("eval", "Noise + denoise + PSNR over a directory");
    eval->add_option("--checkpoint", ckpt_path, "Trained checkpoint")->required();
    eval->add_option("--dir", eval_dir, "Directory of clean PGM/PPM images")->required();
    eval->add_option("--level", level, "Noise level p in [0,1]")->required();
    eval->add_option("--seed", seed, "Noise seed (default 0)");
    eval->add_option("--csv", eval_csv, "Also write rows as CSV to this path");
    eval->callback([&]() {
        const int percent = int(std::lround(level * 100));
        auto rows = run_eval(ckpt_path, eval_dir, level, seed);
        print_eval_rows(rows, percent);
        if (!eval_csv.empty()) {
            rtfnet::write_file_atomic(eval_csv, eval_rows_to_csv(rows, percent));
        }
    });

    // compare
    std::string measured_csv;
    auto* compare = app.add_subcommand(
        "compare", "Print the reference PSNR table, optionally merged with eval rows");
    compare->add_option("--measured", measured_csv, "CSV produced by `rtfnet eval --csv`");
    compare->callback([&]() {
        std::vector<rtfnet::MeasuredRow> rows;
        if (!measured_csv.empty()) rows = measured_rows_from_csv(measured_csv);
        std::fputs(rtfnet::compare_report(rows).c_str(), stdout);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message and usage hint
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int main(int argc, char** argv) { return run_cli(argc, argv); }
