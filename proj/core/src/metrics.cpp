// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include "rtfnet/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "rtfnet/fsio.hpp"

namespace rtfnet {

template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.dims() != b.dims()) throw std::invalid_argument("mse: dimension mismatch");
    double acc = 0;
    const T* ap = a.data().data();
    const T* bp = b.data().data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(ap[i]) - static_cast<double>(bp[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double mse(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
        throw std::invalid_argument("mse: dimension mismatch");
    }
    double acc = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.samples.size());
}

namespace {

double psnr_from_mse(double m, double peak) {
    if (peak <= 0) throw std::invalid_argument("psnr: peak must be positive");
    if (m == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / m);
}

}  // namespace

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
    return psnr_from_mse(mse(a, b), peak);
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    return psnr_from_mse(mse(a, b), 255.0);
}

std::string curves_to_csv_string(const std::vector<MetricsRecord>& records) {
    std::string out = "epoch,train_loss,val_loss,train_psnr,val_psnr\n";
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%u,%.6g,%.6g,%.6g,%.6g\n", r.epoch,
                      r.train_loss, r.val_loss, r.train_psnr, r.val_psnr);
        out += buf;
    }
    return out;
}

void curves_to_csv(const std::vector<MetricsRecord>& records, const std::string& path) {
    write_file_atomic(path, curves_to_csv_string(records));
}

std::vector<MetricsRecord> curves_from_csv_string(std::string_view csv) {
    std::vector<MetricsRecord> records;
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line != "epoch,train_loss,val_loss,train_psnr,val_psnr") {
        throw std::runtime_error("metrics csv: missing or unexpected header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MetricsRecord r;
        double fields[4];
        const char* p = line.c_str();
        char* end = nullptr;
        r.epoch = static_cast<std::uint32_t>(std::strtoul(p, &end, 10));
        for (double& f : fields) {
            if (*end != ',') throw std::runtime_error("metrics csv: malformed row: " + line);
            p = end + 1;
            f = std::strtod(p, &end);
        }
        if (*end != '\0') throw std::runtime_error("metrics csv: trailing bytes: " + line);
        r.train_loss = fields[0];
        r.val_loss = fields[1];
        r.train_psnr = fields[2];
        r.val_psnr = fields[3];
        records.push_back(r);
    }
    return records;
}

std::vector<MetricsRecord> curves_from_csv(const std::string& path) {
    return curves_from_csv_string(read_file(path));
}

namespace {

// Rows ordered (Lena, Bridge, Pepper, BSD300) x (30, 50, 70); columns ordered
// as the Method enum.
constexpr double kBaseline[12][7] = {
    {34.42, 28.09, 33.90, 34.20, 30.80, 35.38, 38.87},
    {30.11, 26.15, 29.91, 30.12, 29.28, 32.55, 34.62},
    {25.84, 25.97, 25.22, 25.79, 27.63, 30.18, 32.85},
    {28.07, 23.68, 25.19, 28.21, 25.19, 28.71, 32.24},
    {24.24, 22.91, 22.61, 22.45, 23.86, 26.01, 28.26},
    {21.21, 22.63, 20.06, 21.02, 22.61, 24.11, 26.44},
    {26.85, 22.38, 28.88, 32.27, 30.01, 32.99, 31.70},
    {25.27, 21.82, 25.44, 27.99, 28.57, 30.23, 30.47},
    {22.11, 21.58, 21.46, 23.04, 27.04, 27.70, 29.27},
    {29.92, 25.74, 12.04, 30.01, 29.77, 30.87, 44.56},
    {26.32, 24.50, 6.01, 26.25, 26.19, 27.84, 38.03},
    {22.81, 24.65, 5.42, 22.85, 26.19, 25.35, 34.96},
};

int level_index(int noise_percent) {
    switch (noise_percent) {
        case 30: return 0;
        case 50: return 1;
        case 70: return 2;
        default:
            throw std::invalid_argument("baseline: noise level " +
                                        std::to_string(noise_percent) +
                                        "% not tabulated (want 30/50/70)");
    }
}

}  // namespace

const char* to_string(TestImage image) {
    switch (image) {
        case TestImage::kLena: return "Lena";
        case TestImage::kBridge: return "Bridge";
        case TestImage::kPepper: return "Pepper";
        case TestImage::kBsd300: return "BSD300";
    }
    return "?";
}

const char* to_string(Method method) {
    switch (method) {
        case Method::kDba: return "DBA";
        case Method::kNasnlm: return "NASNLM";
        case Method::kParigi: return "PARIGI";
        case Method::kNlsf: return "NLSF";
        case Method::kNlsfMlp: return "NLSF-MLP";
        case Method::kNlsfCnn: return "NLSF-CNN";
        case Method::kRtfNet: return "RTF-Net";
    }
    return "?";
}

std::optional<TestImage> parse_test_image(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "lena") return TestImage::kLena;
    if (lower == "bridge") return TestImage::kBridge;
    if (lower == "pepper") return TestImage::kPepper;
    if (lower == "bsd300") return TestImage::kBsd300;
    return std::nullopt;
}

double baseline_psnr(TestImage image, int noise_percent, Method method) {
    const int row = static_cast<int>(image) * 3 + level_index(noise_percent);
    return kBaseline[row][static_cast<int>(method)];
}

std::string compare_report(const std::vector<MeasuredRow>& measured) {
    std::map<std::pair<int, int>, double> by_key;
    for (const auto& row : measured) {
        const auto key = std::make_pair(static_cast<int>(row.image),
                                        level_index(row.noise_percent));
        if (!by_key.emplace(key, row.psnr).second) {
            throw std::invalid_argument(std::string("compare: duplicate row for ") +
                                        to_string(row.image) + "/" +
                                        std::to_string(row.noise_percent) + "%");
        }
    }

    std::ostringstream os;
    char buf[32];
    os << "Image   Noise";
    for (Method m : kAllMethods) {
        std::snprintf(buf, sizeof(buf), "  %9s", to_string(m));
        os << buf;
    }
    if (!by_key.empty()) os << "   Measured";
    os << "\n";

    for (TestImage image : kAllTestImages) {
        for (int level : kAllNoiseLevels) {
            const auto key = std::make_pair(static_cast<int>(image), level_index(level));
            const auto it = by_key.find(key);
            double best = -1;
            for (Method m : kAllMethods) best = std::max(best, baseline_psnr(image, level, m));
            if (it != by_key.end()) best = std::max(best, it->second);

            std::snprintf(buf, sizeof(buf), "%-7s %4d%%", to_string(image), level);
            os << buf;
            for (Method m : kAllMethods) {
                const double v = baseline_psnr(image, level, m);
                std::snprintf(buf, sizeof(buf), "  %8.2f%c", v, v == best ? '*' : ' ');
                os << buf;
            }
            if (!by_key.empty()) {
                if (it != by_key.end()) {
                    std::snprintf(buf, sizeof(buf), "  %8.2f%c", it->second,
                                  it->second == best ? '*' : ' ');
                    os << buf;
                } else {
                    os << "         -";
                }
            }
            os << "\n";
        }
    }
    return os.str();
}

template double mse(const Tensor<float>&, const Tensor<float>&);
template double mse(const Tensor<double>&, const Tensor<double>&);
template double psnr(const Tensor<float>&, const Tensor<float>&, double);
template double psnr(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace rtfnet
