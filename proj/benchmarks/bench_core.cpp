// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "rtfnet/model.hpp"
#include "rtfnet/ops.hpp"
#include "rtfnet/rng.hpp"

namespace {

using rtfnet::Tensor;

template <typename T>
Tensor<T> random_tensor(std::vector<std::size_t> dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor<T> t(std::move(dims));
    for (auto& v : t.data()) v = static_cast<T>(rtfnet::uniform01(rng) - 0.5);
    return t;
}

void bm_conv2d_forward(benchmark::State& state) {
    const std::size_t c = state.range(0);
    auto x = random_tensor<float>({1, c, 64, 64}, 1);
    auto w = random_tensor<float>({c, c, 3, 3}, 2);
    auto b = random_tensor<float>({c}, 3);
    for (auto _ : state) {
        auto y = rtfnet::conv2d<float>(nullptr, x, w, b, 1, 1);
        benchmark::DoNotOptimize(y.data().data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t(2 * c * c * 9 * 64 * 64));
}
BENCHMARK(bm_conv2d_forward)->Arg(32)->Unit(benchmark::kMillisecond);

void bm_conv2d_train_step(benchmark::State& state) {
    const std::size_t c = 32;
    auto x = random_tensor<float>({1, c, 64, 64}, 1);
    auto w = random_tensor<float>({c, c, 3, 3}, 2);
    auto b = random_tensor<float>({c}, 3);
    x.set_requires_grad(true);
    w.set_requires_grad(true);
    b.set_requires_grad(true);
    for (auto _ : state) {
        rtfnet::Tape<float> tape;
        auto y = rtfnet::conv2d(&tape, x, w, b, 1, 1);
        auto loss = rtfnet::sum(&tape, rtfnet::mul(&tape, y, y));
        x.zero_grad();
        w.zero_grad();
        b.zero_grad();
        tape.backward(loss);
        benchmark::DoNotOptimize(w.grad().data());
    }
}
BENCHMARK(bm_conv2d_train_step)->Unit(benchmark::kMillisecond);

void bm_attention_forward(benchmark::State& state) {
    rtfnet::ArchConfig cfg;
    rtfnet::AttentionBlock<float> attn(cfg);
    rtfnet::NamedParams<float> params{{"red.w", attn.w_red}, {"red.b", attn.b_red}};
    for (std::size_t h = 0; h < attn.heads; ++h) {
        params.emplace_back("q", attn.wq[h]);
        params.emplace_back("k", attn.wk[h]);
        params.emplace_back("v", attn.wv[h]);
    }
    params.emplace_back("proj", attn.w_proj);
    rtfnet::init_params(params, 7);
    auto x = random_tensor<float>({1, cfg.features, 64, 64}, 9);
    for (auto _ : state) {
        auto y = attn.forward(nullptr, x);
        benchmark::DoNotOptimize(y.data().data());
    }
}
BENCHMARK(bm_attention_forward)->Unit(benchmark::kMillisecond);

void bm_full_forward_64(benchmark::State& state) {
    auto model = rtfnet::RtfNet<float>::create(rtfnet::ArchConfig{}, 11);
    auto x = random_tensor<float>({1, 1, 64, 64}, 13);
    for (auto _ : state) {
        auto out = model.forward(nullptr, x, rtfnet::Mode::kTrain);
        benchmark::DoNotOptimize(out.restored.data().data());
    }
}
BENCHMARK(bm_full_forward_64)->Unit(benchmark::kMillisecond);

void bm_full_train_step_64(benchmark::State& state) {
    auto model = rtfnet::RtfNet<float>::create(rtfnet::ArchConfig{}, 11);
    auto x = random_tensor<float>({1, 1, 64, 64}, 13);
    auto target = random_tensor<float>({1, 1, 64, 64}, 17);
    for (auto _ : state) {
        rtfnet::Tape<float> tape;
        auto out = model.forward(&tape, x, rtfnet::Mode::kTrain);
        auto loss = rtfnet::mse_loss(&tape, out.restored, target);
        model.zero_grad();
        tape.backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(bm_full_train_step_64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
