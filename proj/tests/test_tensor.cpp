// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rtfnet/ops.hpp"
#include "rtfnet/tensor.hpp"
#include "test_util.hpp"

using rtfnet::Tape;
using rtfnet::Tensor;

TEST_CASE("tensor construction") {
    SUBCASE("zero fill") {
        Tensor<float> t({2, 2}, 0.0f);
        CHECK(t.size() == 4);
        for (float v : t.data()) CHECK(v == 0.0f);
    }
    SUBCASE("data passthrough") {
        Tensor<float> t({1, 3}, std::vector<float>{1, 2, 3});
        CHECK(t.data()[0] == 1.0f);
        CHECK(t.data()[1] == 2.0f);
        CHECK(t.data()[2] == 3.0f);
    }
    SUBCASE("length mismatch rejected") {
        CHECK_THROWS_AS(Tensor<float>({2, 3}, std::vector<float>{1, 2}),
                        std::invalid_argument);
    }
    SUBCASE("zero extent rejected") {
        CHECK_THROWS_AS(Tensor<float>({2, 0}), std::invalid_argument);
    }
    SUBCASE("grad matches shape when touched") {
        Tensor<float> t({2, 3}, 1.0f);
        CHECK(!t.has_grad());
        CHECK(t.grad().size() == t.size());
        CHECK(t.has_grad());
    }
}

TEST_CASE("backward on simple graphs") {
    SUBCASE("sum of squares: grad is 2x") {
        Tensor<double> x({3}, std::vector<double>{1, -2, 3});
        x.set_requires_grad(true);
        Tape<double> tape;
        auto loss = rtfnet::sum(&tape, rtfnet::mul(&tape, x, x));
        CHECK(loss.item() == doctest::Approx(14.0));
        tape.backward(loss);
        CHECK(x.grad()[0] == doctest::Approx(2.0));
        CHECK(x.grad()[1] == doctest::Approx(-4.0));
        CHECK(x.grad()[2] == doctest::Approx(6.0));
    }
    SUBCASE("sum of relu: subgradient zero at negatives") {
        Tensor<double> x({2}, std::vector<double>{-1, 2});
        x.set_requires_grad(true);
        Tape<double> tape;
        auto loss = rtfnet::sum(&tape, rtfnet::relu(&tape, x));
        tape.backward(loss);
        CHECK(x.grad()[0] == 0.0);
        CHECK(x.grad()[1] == 1.0);
    }
    SUBCASE("non-scalar loss rejected") {
        Tensor<double> x({2}, std::vector<double>{1, 2});
        x.set_requires_grad(true);
        Tape<double> tape;
        auto y = rtfnet::mul(&tape, x, x);
        CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
    }
    SUBCASE("backward twice without re-forward rejected") {
        Tensor<double> x({1}, std::vector<double>{2});
        x.set_requires_grad(true);
        Tape<double> tape;
        auto loss = rtfnet::sum(&tape, rtfnet::mul(&tape, x, x));
        tape.backward(loss);
        CHECK_THROWS_AS(tape.backward(loss), std::runtime_error);
    }
    SUBCASE("recording again after backward starts a fresh graph") {
        Tensor<double> x({1}, std::vector<double>{3});
        x.set_requires_grad(true);
        Tape<double> tape;
        auto loss = rtfnet::sum(&tape, rtfnet::mul(&tape, x, x));
        tape.backward(loss);
        x.zero_grad();
        auto loss2 = rtfnet::sum(&tape, rtfnet::mul(&tape, x, x));
        tape.backward(loss2);
        CHECK(x.grad()[0] == doctest::Approx(6.0));
    }
}

TEST_CASE("elementwise ops and their gradients") {
    std::mt19937_64 rng(7);
    auto a = testutil::random_tensor<double>({2, 5}, rng);
    auto b = testutil::random_tensor<double>({2, 5}, rng);
    a.set_requires_grad(true);
    b.set_requires_grad(true);

    SUBCASE("add/sub/mul/scale forward values") {
        auto s = rtfnet::add<double>(nullptr, a, b);
        auto d = rtfnet::sub<double>(nullptr, a, b);
        auto m = rtfnet::mul<double>(nullptr, a, b);
        auto c = rtfnet::scale<double>(nullptr, a, 2.5);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(s.data()[i] == a.data()[i] + b.data()[i]);
            CHECK(d.data()[i] == a.data()[i] - b.data()[i]);
            CHECK(m.data()[i] == a.data()[i] * b.data()[i]);
            CHECK(c.data()[i] == a.data()[i] * 2.5);
        }
    }
    SUBCASE("shape mismatch rejected") {
        Tensor<double> c({3, 5});
        CHECK_THROWS_AS(rtfnet::add<double>(nullptr, a, c), std::invalid_argument);
    }
    SUBCASE("finite-difference check through a composite") {
        const auto weights = testutil::random_weights(a.size(), rng);
        auto forward = [&]() {
            auto y = rtfnet::mul<double>(nullptr, rtfnet::add<double>(nullptr, a, b),
                                         rtfnet::sub<double>(nullptr, a, b));
            return testutil::dot_readout(rtfnet::gelu<double>(nullptr, y), weights);
        };
        Tape<double> tape;
        auto y = rtfnet::mul(&tape, rtfnet::add(&tape, a, b), rtfnet::sub(&tape, a, b));
        auto loss = testutil::readout_op(&tape, rtfnet::gelu(&tape, y), weights);
        tape.backward(loss);
        std::vector<double> ga(a.grad().begin(), a.grad().end());
        std::vector<double> gb(b.grad().begin(), b.grad().end());
        CHECK(testutil::gradcheck_tensor(a, ga, forward, 10, rng) < 1e-5);
        CHECK(testutil::gradcheck_tensor(b, gb, forward, 10, rng) < 1e-5);
    }
}

TEST_CASE("reshape, transpose and concat") {
    std::mt19937_64 rng(11);
    SUBCASE("reshape round trip") {
        auto x = testutil::random_tensor<double>({2, 3, 4}, rng);
        auto y = rtfnet::reshape<double>(nullptr, x, {4, 6});
        CHECK(y.dims() == std::vector<std::size_t>{4, 6});
        auto z = rtfnet::reshape<double>(nullptr, y, {2, 3, 4});
        CHECK(testutil::bit_equal(x, z));
        CHECK_THROWS_AS(rtfnet::reshape<double>(nullptr, x, {5, 5}),
                        std::invalid_argument);
    }
    SUBCASE("transpose_last2 is an involution") {
        auto x = testutil::random_tensor<double>({3, 4, 5}, rng);
        auto t = rtfnet::transpose_last2<double>(nullptr, x);
        CHECK(t.dims() == std::vector<std::size_t>{3, 5, 4});
        CHECK(t.data()[(0 * 5 + 2) * 4 + 1] == x.data()[(0 * 4 + 1) * 5 + 2]);
        CHECK(testutil::bit_equal(x, rtfnet::transpose_last2<double>(nullptr, t)));
    }
    SUBCASE("concat_last splits gradients back") {
        auto a = testutil::random_tensor<double>({2, 3}, rng);
        auto b = testutil::random_tensor<double>({2, 2}, rng);
        a.set_requires_grad(true);
        b.set_requires_grad(true);
        Tape<double> tape;
        auto cat = rtfnet::concat_last(&tape, {a, b});
        CHECK(cat.dims() == std::vector<std::size_t>{2, 5});
        const auto weights = testutil::random_weights(cat.size(), rng);
        auto loss = testutil::readout_op(&tape, cat, weights);
        tape.backward(loss);
        CHECK(a.grad()[0 * 3 + 1] == doctest::Approx(weights[0 * 5 + 1]));
        CHECK(b.grad()[1 * 2 + 0] == doctest::Approx(weights[1 * 5 + 3]));
    }
}

TEST_CASE("determinism: identical inputs give bit-identical outputs") {
    std::mt19937_64 rng(13);
    auto x = testutil::random_tensor<float>({2, 8, 6, 6}, rng);
    auto w = testutil::random_tensor<float>({4, 8, 3, 3}, rng);
    auto b = testutil::random_tensor<float>({4}, rng);
    auto y1 = rtfnet::conv2d<float>(nullptr, x, w, b, 1, 1);
    auto y2 = rtfnet::conv2d<float>(nullptr, x, w, b, 1, 1);
    CHECK(testutil::bit_equal(y1, y2));
    auto s1 = rtfnet::softmax<float>(nullptr, x);
    auto s2 = rtfnet::softmax<float>(nullptr, x);
    CHECK(testutil::bit_equal(s1, s2));
}
