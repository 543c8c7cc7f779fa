// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "rtfnet/image.hpp"
#include "test_util.hpp"

using rtfnet::ImageBuffer;
using rtfnet::Tensor;

TEST_CASE("netpbm decoding") {
    SUBCASE("minimal P5") {
        const std::string bytes = std::string("P5 2 2 255\n") + "\x01\x02\x03\x04";
        auto img = rtfnet::decode_netpbm(bytes);
        CHECK(img.width == 2);
        CHECK(img.height == 2);
        CHECK(img.channels == 1);
        CHECK(img.samples == std::vector<std::uint8_t>{1, 2, 3, 4});
    }
    SUBCASE("P6 with red and green pixels") {
        std::string bytes = "P6\n2 1\n255\n";
        const std::uint8_t px[6] = {255, 0, 0, 0, 255, 0};
        bytes.append(reinterpret_cast<const char*>(px), 6);
        auto img = rtfnet::decode_netpbm(bytes);
        CHECK(img.channels == 3);
        CHECK(img.samples[0] == 255);
        CHECK(img.samples[4] == 255);
    }
    SUBCASE("header comments are skipped") {
        const std::string bytes =
            std::string("P5\n# made by hand\n2 1\n# another\n255\n") + "\x10\x20";
        auto img = rtfnet::decode_netpbm(bytes);
        CHECK(img.width == 2);
        CHECK(img.height == 1);
        CHECK(img.samples[1] == 0x20);
    }
    SUBCASE("rejects bad magic, maxval and truncation") {
        CHECK_THROWS_WITH_AS(rtfnet::decode_netpbm("P4 1 1 255 x"),
                             doctest::Contains("magic"), std::runtime_error);
        CHECK_THROWS_WITH_AS(rtfnet::decode_netpbm("P5 1 1 65535\n\x00\x00"),
                             doctest::Contains("maxval"), std::runtime_error);
        CHECK_THROWS_WITH_AS(rtfnet::decode_netpbm("P5 4 4 255\nabc"),
                             doctest::Contains("truncated"), std::runtime_error);
    }
}

TEST_CASE("netpbm encoding") {
    SUBCASE("exact bytes for a 1x1 gray file") {
        ImageBuffer img;
        img.width = img.height = 1;
        img.channels = 1;
        img.samples = {0x80};
        const std::string expected = std::string("P5\n1 1\n255\n") + "\x80";
        CHECK(rtfnet::encode_netpbm(img) == expected);
    }
    SUBCASE("three channels dispatch to P6") {
        ImageBuffer img;
        img.width = img.height = 1;
        img.channels = 3;
        img.samples = {1, 2, 3};
        CHECK(rtfnet::encode_netpbm(img).substr(0, 2) == "P6");
    }
    SUBCASE("file round trip is bit-identical") {
        testutil::TempDir dir("img");
        auto img = testutil::synth_image(23, 31, 5);
        const auto path = dir.file("a.pgm");
        rtfnet::write_image(img, path);
        auto back = rtfnet::read_image(path);
        CHECK(back.width == img.width);
        CHECK(back.height == img.height);
        CHECK(back.samples == img.samples);
    }
}

TEST_CASE("tensor conversion") {
    SUBCASE("endpoints survive the round trip") {
        ImageBuffer img;
        img.width = 3;
        img.height = 1;
        img.channels = 1;
        img.samples = {0, 128, 255};
        auto t = rtfnet::to_tensor<float>(img);
        CHECK(t.dims() == std::vector<std::size_t>{1, 1, 1, 3});
        CHECK(t.data()[0] == 0.0f);
        CHECK(t.data()[2] == 1.0f);
        auto back = rtfnet::from_tensor(t, false);
        CHECK(back.samples == img.samples);
    }
    SUBCASE("interleaved to planar layout") {
        ImageBuffer img;
        img.width = 2;
        img.height = 1;
        img.channels = 3;
        img.samples = {10, 20, 30, 40, 50, 60};
        auto t = rtfnet::to_tensor<double>(img);
        CHECK(t.data()[0] == doctest::Approx(10.0 / 255));  // c0 x0
        CHECK(t.data()[1] == doctest::Approx(40.0 / 255));  // c0 x1
        CHECK(t.data()[2] == doctest::Approx(20.0 / 255));  // c1 x0
        auto back = rtfnet::from_tensor(t, false);
        CHECK(back.samples == img.samples);
    }
    SUBCASE("clamping and rounding") {
        Tensor<float> t({1, 1, 1, 3}, std::vector<float>{1.7f, 0.5f, -0.2f});
        auto buf = rtfnet::from_tensor(t, true);
        CHECK(buf.samples[0] == 255);  // clamped
        CHECK(buf.samples[1] == 128);  // 127.5 rounds away from zero
        CHECK(buf.samples[2] == 0);
        CHECK_THROWS_AS(rtfnet::from_tensor(t, false), std::invalid_argument);
    }
    SUBCASE("bad rank rejected") {
        Tensor<float> t({2, 2}, 0.0f);
        CHECK_THROWS_AS(rtfnet::from_tensor(t, true), std::invalid_argument);
    }
}

TEST_CASE("patch extraction") {
    SUBCASE("image exactly the patch size has a single placement") {
        auto img = testutil::synth_image(64, 64, 9);
        auto set = rtfnet::extract_patches<float>(img, 64, 5, 123);
        for (auto [top, left] : set.offsets) {
            CHECK(top == 0);
            CHECK(left == 0);
        }
        CHECK(set.patches.size() == 5);
        CHECK(set.patches[0].dims() == std::vector<std::size_t>{1, 64, 64});
    }
    SUBCASE("all offsets in bounds over 1000 draws") {
        auto img = testutil::synth_image(100, 80, 10);
        auto set = rtfnet::extract_patches<float>(img, 64, 1000, 7);
        for (auto [top, left] : set.offsets) {
            CHECK(top + 64 <= 100);
            CHECK(left + 64 <= 80);
        }
    }
    SUBCASE("seeded determinism") {
        auto img = testutil::synth_image(100, 80, 11);
        auto a = rtfnet::extract_patches<float>(img, 32, 20, 99);
        auto b = rtfnet::extract_patches<float>(img, 32, 20, 99);
        CHECK(a.offsets == b.offsets);
        for (std::size_t i = 0; i < a.patches.size(); ++i) {
            CHECK(testutil::bit_equal(a.patches[i], b.patches[i]));
        }
    }
    SUBCASE("patch values are sample/255 exactly") {
        auto img = testutil::synth_image(70, 70, 12);
        auto set = rtfnet::extract_patches<double>(img, 16, 3, 1);
        for (std::size_t i = 0; i < set.patches.size(); ++i) {
            auto [top, left] = set.offsets[i];
            const auto d = set.patches[i].data();
            for (std::size_t y = 0; y < 16; ++y) {
                for (std::size_t x = 0; x < 16; ++x) {
                    const double expect =
                        img.samples[(top + y) * img.width + (left + x)] / 255.0;
                    CHECK(d[y * 16 + x] == expect);
                }
            }
        }
    }
    SUBCASE("image smaller than the patch rejected") {
        auto img = testutil::synth_image(32, 63, 13);
        CHECK_THROWS_AS(rtfnet::extract_patches<float>(img, 64, 1, 0),
                        std::invalid_argument);
    }
}

TEST_CASE("batch assembly") {
    std::mt19937_64 rng(17);
    auto make_pairs = [&](std::size_t n) {
        std::vector<std::pair<Tensor<float>, Tensor<float>>> pairs;
        for (std::size_t i = 0; i < n; ++i) {
            Tensor<float> t({1, 4, 4}, float(i));
            pairs.emplace_back(t, t);
        }
        return pairs;
    };
    SUBCASE("70 patches at batch 32 split 32/32/6") {
        auto batches = rtfnet::make_batches(make_pairs(70), 32, 5);
        REQUIRE(batches.size() == 3);
        CHECK(batches[0].first.dim(0) == 32);
        CHECK(batches[1].first.dim(0) == 32);
        CHECK(batches[2].first.dim(0) == 6);
        CHECK(batches[0].first.dims() == std::vector<std::size_t>{32, 1, 4, 4});
    }
    SUBCASE("same seed gives the same order") {
        auto a = rtfnet::make_batches(make_pairs(20), 8, 33);
        auto b = rtfnet::make_batches(make_pairs(20), 8, 33);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(testutil::bit_equal(a[i].first, b[i].first));
        }
    }
    SUBCASE("batches form a permutation of the input multiset") {
        auto pairs = make_pairs(25);
        auto batches = rtfnet::make_batches(pairs, 7, 3);
        std::multiset<float> seen;
        for (const auto& [noisy, clean] : batches) {
            for (std::size_t i = 0; i < noisy.dim(0); ++i) {
                seen.insert(noisy.data()[i * 16]);
            }
        }
        std::multiset<float> expect;
        for (std::size_t i = 0; i < 25; ++i) expect.insert(float(i));
        CHECK(seen == expect);
    }
    SUBCASE("empty input and mixed shapes rejected") {
        std::vector<std::pair<Tensor<float>, Tensor<float>>> empty;
        CHECK_THROWS_AS(rtfnet::make_batches(empty, 4, 0), std::invalid_argument);
        auto pairs = make_pairs(3);
        pairs[1].first = Tensor<float>({2, 4, 4}, 0.0f);
        CHECK_THROWS_AS(rtfnet::make_batches(pairs, 4, 0), std::invalid_argument);
    }
}
