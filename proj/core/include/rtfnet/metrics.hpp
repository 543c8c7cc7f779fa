// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtfnet/image.hpp"
#include "rtfnet/tensor.hpp"

namespace rtfnet {

/// Mean of squared differences over all elements.
template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b);
double mse(const ImageBuffer& a, const ImageBuffer& b);

/// 10 * log10(peak^2 / mse); +infinity when mse is zero.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak);
/// 8-bit buffer variant with peak 255.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// One training-curve row: per-epoch losses and PSNR values in dB.
struct MetricsRecord {
    std::uint32_t epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double train_psnr = 0;
    double val_psnr = 0;
};

/// CSV with header epoch,train_loss,val_loss,train_psnr,val_psnr and six
/// significant digits per value. Written atomically.
std::string curves_to_csv_string(const std::vector<MetricsRecord>& records);
void curves_to_csv(const std::vector<MetricsRecord>& records, const std::string& path);
std::vector<MetricsRecord> curves_from_csv_string(std::string_view csv);
std::vector<MetricsRecord> curves_from_csv(const std::string& path);

// Reference PSNR results (dB) of classic salt-and-pepper denoisers, plus this
// architecture, on the standard test images at 30/50/70% noise. Embedded as
// static data for the comparison report.

enum class TestImage { kLena, kBridge, kPepper, kBsd300 };
enum class Method { kDba, kNasnlm, kParigi, kNlsf, kNlsfMlp, kNlsfCnn, kRtfNet };

inline constexpr TestImage kAllTestImages[] = {TestImage::kLena, TestImage::kBridge,
                                               TestImage::kPepper, TestImage::kBsd300};
inline constexpr int kAllNoiseLevels[] = {30, 50, 70};
inline constexpr Method kAllMethods[] = {Method::kDba,     Method::kNasnlm,
                                         Method::kParigi,  Method::kNlsf,
                                         Method::kNlsfMlp, Method::kNlsfCnn,
                                         Method::kRtfNet};

const char* to_string(TestImage image);
const char* to_string(Method method);

/// Case-insensitive match of an image/file stem against the four test images.
std::optional<TestImage> parse_test_image(std::string_view name);

/// Looks up one cell of the reference table; noise_percent must be 30/50/70.
double baseline_psnr(TestImage image, int noise_percent, Method method);

/// PSNR measured by this build for one (image, noise level) pair.
struct MeasuredRow {
    TestImage image;
    int noise_percent = 0;
    double psnr = 0;
};

/// Plain-text table of the reference results with an extra "measured" column
/// when rows are supplied; the best value per row is marked with '*'.
/// Throws on duplicate or unknown (image, level) keys.
std::string compare_report(const std::vector<MeasuredRow>& measured);

extern template double mse(const Tensor<float>&, const Tensor<float>&);
extern template double mse(const Tensor<double>&, const Tensor<double>&);
extern template double psnr(const Tensor<float>&, const Tensor<float>&, double);
extern template double psnr(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace rtfnet
