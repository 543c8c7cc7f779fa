// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "rtfnet/model.hpp"
#include "test_util.hpp"

using rtfnet::ArchConfig;
using rtfnet::Mode;
using rtfnet::RtfNet;
using rtfnet::Tape;
using rtfnet::Tensor;

namespace {

ArchConfig tiny_arch() {
    ArchConfig cfg;
    cfg.features = 8;
    cfg.nsn_depth = 1;
    cfg.sen_depth = 1;
    cfg.cvt_depth = 1;
    cfg.heads = 2;
    return cfg;
}

}  // namespace

TEST_CASE("arch validation") {
    ArchConfig bad;
    bad.features = 30;  // not divisible by 4 heads
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ArchConfig{};
    bad.channels = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ArchConfig{};
    bad.nsn_depth = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_NOTHROW(ArchConfig{}.validate());
}

TEST_CASE("parameter enumeration") {
    SUBCASE("locked count for the default configuration") {
        auto model = RtfNet<float>(ArchConfig{});
        CHECK(model.param_count() == 207490);
    }
    SUBCASE("names are unique and order is stable") {
        auto a = RtfNet<float>(ArchConfig{});
        auto b = RtfNet<float>(ArchConfig{});
        auto pa = a.named_params();
        auto pb = b.named_params();
        REQUIRE(pa.size() == pb.size());
        std::set<std::string> names;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            CHECK(pa[i].first == pb[i].first);
            CHECK(pa[i].second.dims() == pb[i].second.dims());
            CHECK(names.insert(pa[i].first).second);
        }
    }
    SUBCASE("same seed creates bit-identical models") {
        auto a = RtfNet<float>::create(ArchConfig{}, 42);
        auto b = RtfNet<float>::create(ArchConfig{}, 42);
        auto pa = a.named_params();
        auto pb = b.named_params();
        for (std::size_t i = 0; i < pa.size(); ++i) {
            CHECK(testutil::bit_equal(pa[i].second, pb[i].second));
        }
    }
}

TEST_CASE("conv block") {
    std::mt19937_64 rng(101);
    auto cfg = tiny_arch();
    rtfnet::ConvBlock<double> block(cfg.features, cfg.features, cfg);
    rtfnet::NamedParams<double> params{{"c.w", block.w},
                                       {"c.b", block.b},
                                       {"c.bn.gamma", block.bn_gamma},
                                       {"c.bn.beta", block.bn_beta}};
    rtfnet::init_params(params, 11);
    auto x = testutil::random_tensor<double>({2, 8, 6, 6}, rng);
    x.set_requires_grad(true);

    auto out = block.forward(nullptr, x, Mode::kTrain);
    CHECK(out.dims() == x.dims());
    for (double v : out.data()) CHECK(v >= 0.0);

    Tape<double> tape;
    auto rec = block.forward(&tape, x, Mode::kTrain);
    const auto weights = testutil::random_weights(rec.size(), rng);
    auto loss = testutil::readout_op(&tape, rec, weights);
    tape.backward(loss);
    auto forward = [&]() {
        return testutil::dot_readout(block.forward(nullptr, x, Mode::kTrain), weights);
    };
    std::vector<double> gx(x.grad().begin(), x.grad().end());
    std::vector<double> gw(block.w.grad().begin(), block.w.grad().end());
    CHECK(testutil::gradcheck_tensor(x, gx, forward, 16, rng) < 1e-5);
    CHECK(testutil::gradcheck_tensor(block.w, gw, forward, 16, rng) < 1e-5);
}

TEST_CASE("residual block") {
    std::mt19937_64 rng(103);
    auto cfg = tiny_arch();
    SUBCASE("zeroed conv blocks give the exact identity and identity gradient") {
        rtfnet::ResidualBlock<double> block(cfg);  // all tensors zero-initialized
        auto x = testutil::random_tensor<double>({1, 8, 4, 4}, rng);
        x.set_requires_grad(true);
        Tape<double> tape;
        auto out = block.forward(&tape, x, Mode::kTrain);
        CHECK(testutil::bit_equal(out, x));
        const auto weights = testutil::random_weights(out.size(), rng);
        auto loss = testutil::readout_op(&tape, out, weights);
        tape.backward(loss);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(x.grad()[i] == weights[i]);  // d(out)/dx is exactly the identity
        }
    }
    SUBCASE("initialized block: shape preserved, gradients check out") {
        rtfnet::ResidualBlock<double> block(cfg);
        rtfnet::NamedParams<double> params{
            {"b1.w", block.block1.w},         {"b1.b", block.block1.b},
            {"b1.gamma", block.block1.bn_gamma}, {"b1.beta", block.block1.bn_beta},
            {"b2.w", block.block2.w},         {"b2.b", block.block2.b},
            {"b2.gamma", block.block2.bn_gamma}, {"b2.beta", block.block2.bn_beta}};
        rtfnet::init_params(params, 13);
        auto x = testutil::random_tensor<double>({1, 8, 5, 5}, rng);
        x.set_requires_grad(true);
        Tape<double> tape;
        auto out = block.forward(&tape, x, Mode::kTrain);
        CHECK(out.dims() == x.dims());
        const auto weights = testutil::random_weights(out.size(), rng);
        auto loss = testutil::readout_op(&tape, out, weights);
        tape.backward(loss);
        auto forward = [&]() {
            return testutil::dot_readout(block.forward(nullptr, x, Mode::kTrain), weights);
        };
        std::vector<double> gx(x.grad().begin(), x.grad().end());
        std::vector<double> gw(block.block2.w.grad().begin(), block.block2.w.grad().end());
        CHECK(testutil::gradcheck_tensor(x, gx, forward, 14, rng) < 1e-5);
        CHECK(testutil::gradcheck_tensor(block.block2.w, gw, forward, 14, rng) < 1e-5);
    }
}

TEST_CASE("attention block") {
    std::mt19937_64 rng(107);
    auto cfg = tiny_arch();
    rtfnet::AttentionBlock<double> attn(cfg);
    rtfnet::NamedParams<double> params{{"red.w", attn.w_red}, {"red.b", attn.b_red}};
    for (std::size_t h = 0; h < attn.heads; ++h) {
        params.emplace_back("q.w", attn.wq[h]);
        params.emplace_back("k.w", attn.wk[h]);
        params.emplace_back("v.w", attn.wv[h]);
    }
    params.emplace_back("proj.w", attn.w_proj);
    rtfnet::init_params(params, 17);

    SUBCASE("shape preserved and attention rows normalized") {
        auto x = testutil::random_tensor<double>({2, 8, 4, 4}, rng);
        std::vector<Tensor<double>> maps;
        auto out = attn.forward(nullptr, x, &maps);
        CHECK(out.dims() == x.dims());
        REQUIRE(maps.size() == attn.heads);
        for (const auto& m : maps) {
            const std::size_t cols = m.dim(m.rank() - 1);
            const std::size_t rows = m.size() / cols;
            for (std::size_t r = 0; r < rows; ++r) {
                double total = 0;
                for (std::size_t c = 0; c < cols; ++c) total += m.data()[r * cols + c];
                CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
            }
        }
    }
    SUBCASE("single-token sequence: softmax over one key weights it exactly 1") {
        auto x = testutil::random_tensor<double>({1, 8, 2, 2}, rng);  // H = W = r
        std::vector<Tensor<double>> maps;
        auto out = attn.forward(nullptr, x, &maps);
        CHECK(out.dims() == x.dims());
        for (const auto& m : maps) {
            REQUIRE(m.size() == 1);
            CHECK(m.data()[0] == 1.0);
        }
        // and A x V with A = [[1]] is exactly V
        auto v = testutil::random_tensor<double>({1, 1, 4}, rng);
        Tensor<double> one({1, 1, 1}, std::vector<double>{1.0});
        CHECK(testutil::bit_equal(rtfnet::matmul<double>(nullptr, one, v), v));
    }
    SUBCASE("gradients through the whole pipeline") {
        auto x = testutil::random_tensor<double>({1, 8, 4, 4}, rng);
        x.set_requires_grad(true);
        Tape<double> tape;
        auto out = attn.forward(&tape, x);
        const auto weights = testutil::random_weights(out.size(), rng);
        auto loss = testutil::readout_op(&tape, out, weights);
        tape.backward(loss);
        auto forward = [&]() {
            return testutil::dot_readout(attn.forward(nullptr, x), weights);
        };
        std::vector<double> gx(x.grad().begin(), x.grad().end());
        std::vector<double> gq(attn.wq[0].grad().begin(), attn.wq[0].grad().end());
        std::vector<double> gp(attn.w_proj.grad().begin(), attn.w_proj.grad().end());
        CHECK(testutil::gradcheck_tensor(x, gx, forward, 14, rng) < 1e-5);
        CHECK(testutil::gradcheck_tensor(attn.wq[0], gq, forward, 10, rng) < 1e-5);
        CHECK(testutil::gradcheck_tensor(attn.w_proj, gp, forward, 10, rng) < 1e-5);
    }
    SUBCASE("indivisible spatial extents rejected") {
        auto x = testutil::random_tensor<double>({1, 8, 3, 4}, rng);
        CHECK_THROWS_AS(attn.forward(nullptr, x), std::invalid_argument);
    }
}

TEST_CASE("mlp block") {
    std::mt19937_64 rng(109);
    auto cfg = tiny_arch();
    rtfnet::MlpBlock<double> mlp(cfg);
    SUBCASE("zero weights and biases map zero to zero") {
        Tensor<double> x({1, 8, 3, 3}, 0.0);
        auto out = mlp.forward(nullptr, x);
        CHECK(out.dims() == x.dims());
        for (double v : out.data()) CHECK(v == 0.0);
    }
    SUBCASE("gradients") {
        rtfnet::NamedParams<double> params{
            {"w1", mlp.w1}, {"b1", mlp.b1}, {"w2", mlp.w2}, {"b2", mlp.b2}};
        rtfnet::init_params(params, 19);
        auto x = testutil::random_tensor<double>({1, 8, 3, 3}, rng);
        x.set_requires_grad(true);
        Tape<double> tape;
        auto out = mlp.forward(&tape, x);
        const auto weights = testutil::random_weights(out.size(), rng);
        auto loss = testutil::readout_op(&tape, out, weights);
        tape.backward(loss);
        auto forward = [&]() {
            return testutil::dot_readout(mlp.forward(nullptr, x), weights);
        };
        std::vector<double> gx(x.grad().begin(), x.grad().end());
        std::vector<double> gw(mlp.w1.grad().begin(), mlp.w1.grad().end());
        CHECK(testutil::gradcheck_tensor(x, gx, forward, 14, rng) < 1e-5);
        CHECK(testutil::gradcheck_tensor(mlp.w1, gw, forward, 14, rng) < 1e-5);
    }
}

TEST_CASE("transformer block") {
    std::mt19937_64 rng(113);
    auto cfg = tiny_arch();
    rtfnet::TransformerBlock<double> tf(cfg);
    auto init_all = [&](std::uint64_t seed) {
        rtfnet::NamedParams<double> params{{"ln1.gamma", tf.ln1.gamma},
                                           {"ln1.beta", tf.ln1.beta},
                                           {"red.w", tf.attn.w_red},
                                           {"red.b", tf.attn.b_red}};
        for (std::size_t h = 0; h < tf.attn.heads; ++h) {
            params.emplace_back("q", tf.attn.wq[h]);
            params.emplace_back("k", tf.attn.wk[h]);
            params.emplace_back("v", tf.attn.wv[h]);
        }
        params.emplace_back("proj.w", tf.attn.w_proj);
        params.emplace_back("ln2.gamma", tf.ln2.gamma);
        params.emplace_back("ln2.beta", tf.ln2.beta);
        params.emplace_back("mlp.w1", tf.mlp.w1);
        params.emplace_back("mlp.b1", tf.mlp.b1);
        params.emplace_back("mlp.w2", tf.mlp.w2);
        params.emplace_back("mlp.b2", tf.mlp.b2);
        rtfnet::init_params(params, seed);
    };
    SUBCASE("zeroed output projections give the exact identity") {
        init_all(23);
        for (auto& v : tf.attn.w_proj.data()) v = 0.0;
        for (auto& v : tf.mlp.w2.data()) v = 0.0;
        for (auto& v : tf.mlp.b2.data()) v = 0.0;
        auto x = testutil::random_tensor<double>({1, 8, 4, 4}, rng);
        auto out = tf.forward(nullptr, x);
        CHECK(testutil::bit_equal(out, x));
    }
    SUBCASE("shape preserved and gradients check out on 1x8x4x4") {
        init_all(29);
        auto x = testutil::random_tensor<double>({1, 8, 4, 4}, rng);
        x.set_requires_grad(true);
        Tape<double> tape;
        auto out = tf.forward(&tape, x);
        CHECK(out.dims() == x.dims());
        const auto weights = testutil::random_weights(out.size(), rng);
        auto loss = testutil::readout_op(&tape, out, weights);
        tape.backward(loss);
        auto forward = [&]() {
            return testutil::dot_readout(tf.forward(nullptr, x), weights);
        };
        std::vector<double> gx(x.grad().begin(), x.grad().end());
        std::vector<double> gw(tf.mlp.w1.grad().begin(), tf.mlp.w1.grad().end());
        CHECK(testutil::gradcheck_tensor(x, gx, forward, 12, rng) < 1e-5);
        CHECK(testutil::gradcheck_tensor(tf.mlp.w1, gw, forward, 12, rng) < 1e-5);
    }
}

TEST_CASE("cvt block") {
    std::mt19937_64 rng(127);
    auto cfg = tiny_arch();
    cfg.cvt_depth = 2;
    rtfnet::CvtBlock<double> cvt(cfg);
    CHECK(cvt.blocks.size() == 2);  // depth comes from the config
    auto x = testutil::random_tensor<double>({1, 8, 4, 4}, rng);
    auto a = cvt.forward(nullptr, x, cfg);
    auto b = cvt.forward(nullptr, x, cfg);
    CHECK(a.dims() == x.dims());
    CHECK(testutil::bit_equal(a, b));  // purity
}

TEST_CASE("stage forwards") {
    std::mt19937_64 rng(131);
    auto model = RtfNet<float>::create(ArchConfig{}, 3);
    CHECK(model.nsn_blocks.size() == 8);
    CHECK(model.sen_blocks.size() == 2);
    CHECK(model.sen_blocks[0].blocks.size() == 2);

    auto noisy = testutil::random_tensor<float>({1, 1, 16, 16}, rng, 0.0, 1.0);
    SUBCASE("noise and detail maps preserve shape") {
        auto nmap = model.nsn_forward(nullptr, noisy, Mode::kTrain);
        CHECK(nmap.dims() == noisy.dims());
        auto dmap = model.sen_forward(nullptr, noisy, Mode::kTrain);
        CHECK(dmap.dims() == noisy.dims());
    }
    SUBCASE("zeroed NSN tail: transition equals the noisy input exactly") {
        for (auto& v : model.nsn_tail_w.data()) v = 0.0f;
        for (auto& v : model.nsn_tail_b.data()) v = 0.0f;
        auto out = model.forward(nullptr, noisy, Mode::kTrain);
        CHECK(testutil::bit_equal(out.transition, noisy));
    }
    SUBCASE("zeroed SEN tail: restored equals the transition exactly") {
        for (auto& v : model.sen_tail_w.data()) v = 0.0f;
        for (auto& v : model.sen_tail_b.data()) v = 0.0f;
        auto out = model.forward(nullptr, noisy, Mode::kTrain);
        CHECK(testutil::bit_equal(out.restored, out.transition));
    }
}

TEST_CASE("full model forward") {
    std::mt19937_64 rng(137);
    SUBCASE("zero-everything parameters collapse to the input") {
        RtfNet<float> model{ArchConfig{}};  // all parameters zero
        auto noisy = testutil::random_tensor<float>({1, 1, 8, 8}, rng, 0.0, 1.0);
        auto out = model.forward(nullptr, noisy, Mode::kTrain);
        CHECK(testutil::bit_equal(out.restored, noisy));
        CHECK(testutil::bit_equal(out.transition, noisy));
    }
    SUBCASE("shapes on 1x1x64x64") {
        auto model = RtfNet<float>::create(ArchConfig{}, 5);
        auto noisy = testutil::random_tensor<float>({1, 1, 64, 64}, rng, 0.0, 1.0);
        auto out = model.forward(nullptr, noisy, Mode::kTrain);
        CHECK(out.restored.dims() == noisy.dims());
        CHECK(out.transition.dims() == noisy.dims());
        CHECK(rtfnet::all_finite(out.restored));
    }
    SUBCASE("composition identity: forward equals manual sub/add assembly") {
        auto model = RtfNet<float>::create(ArchConfig{}, 7);
        auto warmup = testutil::random_tensor<float>({1, 1, 8, 8}, rng, 0.0, 1.0);
        (void)model.forward(nullptr, warmup, Mode::kTrain);  // accumulate bn stats
        auto noisy = testutil::random_tensor<float>({1, 1, 8, 8}, rng, 0.0, 1.0);
        auto out = model.forward(nullptr, noisy, Mode::kEval);
        auto y = rtfnet::sub<float>(nullptr, noisy,
                                    model.nsn_forward(nullptr, noisy, Mode::kEval));
        auto restored =
            rtfnet::add<float>(nullptr, y, model.sen_forward(nullptr, y, Mode::kEval));
        CHECK(testutil::bit_equal(out.transition, y));
        CHECK(testutil::bit_equal(out.restored, restored));
    }
    SUBCASE("eval pads odd extents with reflection and crops back") {
        auto model = RtfNet<float>::create(ArchConfig{}, 9);
        auto warmup = testutil::random_tensor<float>({1, 1, 8, 8}, rng, 0.0, 1.0);
        (void)model.forward(nullptr, warmup, Mode::kTrain);
        auto odd = testutil::random_tensor<float>({1, 1, 7, 9}, rng, 0.0, 1.0);
        auto out = model.forward(nullptr, odd, Mode::kEval);
        CHECK(out.restored.dims() == odd.dims());
        CHECK(out.transition.dims() == odd.dims());
        CHECK_THROWS_AS(model.forward(nullptr, odd, Mode::kTrain), std::invalid_argument);
    }
    SUBCASE("deterministic forward") {
        auto model = RtfNet<float>::create(ArchConfig{}, 11);
        auto noisy = testutil::random_tensor<float>({2, 1, 8, 8}, rng, 0.0, 1.0);
        auto a = model.forward(nullptr, noisy, Mode::kTrain).restored;
        auto b = model.forward(nullptr, noisy, Mode::kTrain).restored;
        CHECK(testutil::bit_equal(a, b));
    }
    SUBCASE("RGB configuration keeps three channels") {
        ArchConfig cfg = tiny_arch();
        cfg.channels = 3;
        auto model = RtfNet<float>::create(cfg, 13);
        auto noisy = testutil::random_tensor<float>({1, 3, 8, 8}, rng, 0.0, 1.0);
        auto out = model.forward(nullptr, noisy, Mode::kTrain);
        CHECK(out.restored.dims() == noisy.dims());
    }
}

TEST_CASE("end-to-end gradients on a tiny configuration") {
    std::mt19937_64 rng(139);
    auto model = RtfNet<double>::create(tiny_arch(), 15);
    auto noisy = testutil::random_tensor<double>({1, 1, 8, 8}, rng, 0.0, 1.0);
    auto target = testutil::random_tensor<double>({1, 1, 8, 8}, rng, 0.0, 1.0);

    Tape<double> tape;
    auto out = model.forward(&tape, noisy, Mode::kTrain);
    auto loss = rtfnet::mse_loss(&tape, out.restored, target);
    model.zero_grad();
    tape.backward(loss);

    auto forward = [&]() {
        auto o = model.forward(nullptr, noisy, Mode::kTrain);
        return rtfnet::mse_loss<double>(nullptr, o.restored, target).item();
    };
    auto params = model.named_params();
    double worst = 0;
    for (auto& [name, p] : params) {
        std::vector<double> g(p.grad().begin(), p.grad().end());
        worst = std::max(worst, testutil::gradcheck_tensor(p, g, forward, 4, rng));
    }
    CHECK(worst < 1e-4);
}
