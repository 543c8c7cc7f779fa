// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include "rtfnet/image.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "rtfnet/fsio.hpp"
#include "rtfnet/rng.hpp"

namespace rtfnet {

namespace {

// Skips whitespace and '#' comments (to end of line) between header tokens.
void skip_separators(std::string_view bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
                   c == '\f') {
            ++pos;
        } else {
            break;
        }
    }
}

std::size_t parse_header_int(std::string_view bytes, std::size_t& pos,
                             const char* what) {
    skip_separators(bytes, pos);
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
        throw std::runtime_error(std::string("netpbm: malformed header, expected ") +
                                 what);
    }
    std::size_t value = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
        value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
        ++pos;
    }
    return value;
}

}  // namespace

ImageBuffer decode_netpbm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw std::runtime_error("netpbm: unknown magic (want P5 or P6)");
    }
    ImageBuffer buf;
    buf.channels = bytes[1] == '5' ? 1 : 3;
    std::size_t pos = 2;
    buf.width = parse_header_int(bytes, pos, "width");
    buf.height = parse_header_int(bytes, pos, "height");
    const std::size_t maxval = parse_header_int(bytes, pos, "maxval");
    if (maxval != 255) {
        throw std::runtime_error("netpbm: unsupported maxval " + std::to_string(maxval) +
                                 " (want 255)");
    }
    if (buf.width == 0 || buf.height == 0) {
        throw std::runtime_error("netpbm: zero image extent");
    }
    // exactly one whitespace byte separates the header from the payload
    if (pos >= bytes.size() ||
        !(bytes[pos] == ' ' || bytes[pos] == '\t' || bytes[pos] == '\n' ||
          bytes[pos] == '\r')) {
        throw std::runtime_error("netpbm: missing separator before payload");
    }
    ++pos;
    const std::size_t need = buf.width * buf.height * buf.channels;
    if (bytes.size() - pos < need) {
        throw std::runtime_error("netpbm: truncated payload, have " +
                                 std::to_string(bytes.size() - pos) + " of " +
                                 std::to_string(need) + " bytes");
    }
    buf.samples.resize(need);
    std::memcpy(buf.samples.data(), bytes.data() + pos, need);
    return buf;
}

ImageBuffer read_image(const std::string& path) {
    try {
        return decode_netpbm(read_file(path));
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::string encode_netpbm(const ImageBuffer& buffer) {
    if (buffer.channels != 1 && buffer.channels != 3) {
        throw std::invalid_argument("netpbm: channels must be 1 or 3");
    }
    if (buffer.samples.size() != buffer.width * buffer.height * buffer.channels) {
        throw std::invalid_argument("netpbm: sample count does not match extents");
    }
    std::string out = buffer.channels == 1 ? "P5\n" : "P6\n";
    out += std::to_string(buffer.width) + " " + std::to_string(buffer.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(buffer.samples.data()),
               buffer.samples.size());
    return out;
}

void write_image(const ImageBuffer& buffer, const std::string& path) {
    write_file_atomic(path, encode_netpbm(buffer));
}

template <typename T>
Tensor<T> to_tensor(const ImageBuffer& buffer) {
    const std::size_t c = buffer.channels, h = buffer.height, w = buffer.width;
    Tensor<T> t({1, c, h, w});
    auto d = t.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                d[(ch * h + y) * w + x] =
                    static_cast<T>(buffer.samples[(y * w + x) * c + ch]) / T(255);
            }
        }
    }
    return t;
}

template <typename T>
ImageBuffer from_tensor(const Tensor<T>& t, bool clamp) {
    if (t.rank() != 4 || t.dim(0) != 1) {
        throw std::invalid_argument("from_tensor: expected 1xCxHxW tensor");
    }
    const std::size_t c = t.dim(1), h = t.dim(2), w = t.dim(3);
    if (c != 1 && c != 3) throw std::invalid_argument("from_tensor: channels must be 1 or 3");
    ImageBuffer buf;
    buf.channels = c;
    buf.height = h;
    buf.width = w;
    buf.samples.resize(c * h * w);
    auto d = t.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double v = static_cast<double>(d[(ch * h + y) * w + x]) * 255.0;
                if (v < 0.0 || v > 255.0 || !std::isfinite(v)) {
                    if (!clamp) {
                        throw std::invalid_argument(
                            "from_tensor: value out of [0,1] range without clamp");
                    }
                    v = std::isnan(v) ? 0.0 : std::min(std::max(v, 0.0), 255.0);
                }
                // half away from zero
                buf.samples[(y * w + x) * c + ch] =
                    static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }
    return buf;
}

template <typename T>
PatchSet<T> extract_patches(const ImageBuffer& buffer, std::size_t size,
                            std::size_t count, std::uint64_t seed) {
    if (buffer.height < size || buffer.width < size) {
        throw std::invalid_argument("extract_patches: image " +
                                    std::to_string(buffer.width) + "x" +
                                    std::to_string(buffer.height) +
                                    " smaller than patch size " + std::to_string(size));
    }
    PatchSet<T> set;
    set.patch_size = size;
    std::mt19937_64 rng(seed);
    const std::size_t c = buffer.channels, w = buffer.width;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t top = uniform_below(rng, buffer.height - size + 1);
        const std::size_t left = uniform_below(rng, buffer.width - size + 1);
        set.offsets.emplace_back(top, left);
        Tensor<T> patch({c, size, size});
        auto d = patch.data();
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = 0; y < size; ++y) {
                for (std::size_t x = 0; x < size; ++x) {
                    d[(ch * size + y) * size + x] =
                        static_cast<T>(
                            buffer.samples[((top + y) * w + (left + x)) * c + ch]) /
                        T(255);
                }
            }
        }
        set.patches.push_back(std::move(patch));
    }
    return set;
}

template <typename T>
std::vector<std::pair<Tensor<T>, Tensor<T>>> make_batches(
    const std::vector<std::pair<Tensor<T>, Tensor<T>>>& pairs, std::size_t batch_size,
    std::uint64_t seed) {
    if (pairs.empty()) throw std::invalid_argument("make_batches: empty input");
    if (batch_size == 0) throw std::invalid_argument("make_batches: batch size 0");
    const auto& ref_a = pairs.front().first.dims();
    const auto& ref_b = pairs.front().second.dims();
    for (const auto& [a, b] : pairs) {
        if (a.dims() != ref_a || b.dims() != ref_b) {
            throw std::invalid_argument("make_batches: mixed shapes");
        }
    }

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_below(rng, i)]);
    }

    auto stack = [](const std::vector<const Tensor<T>*>& parts) {
        std::vector<std::size_t> dims = parts.front()->dims();
        dims.insert(dims.begin(), parts.size());
        Tensor<T> out(dims);
        const std::size_t stride = parts.front()->size();
        for (std::size_t i = 0; i < parts.size(); ++i) {
            std::memcpy(out.data().data() + i * stride, parts[i]->data().data(),
                        stride * sizeof(T));
        }
        return out;
    };

    std::vector<std::pair<Tensor<T>, Tensor<T>>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t stop = std::min(order.size(), start + batch_size);
        std::vector<const Tensor<T>*> as, bs;
        for (std::size_t i = start; i < stop; ++i) {
            as.push_back(&pairs[order[i]].first);
            bs.push_back(&pairs[order[i]].second);
        }
        batches.emplace_back(stack(as), stack(bs));
    }
    return batches;
}

#define RTFNET_IMAGE_INSTANTIATE(T)                                           \
    template Tensor<T> to_tensor(const ImageBuffer&);                        \
    template ImageBuffer from_tensor(const Tensor<T>&, bool);                \
    template PatchSet<T> extract_patches(const ImageBuffer&, std::size_t,    \
                                         std::size_t, std::uint64_t);        \
    template std::vector<std::pair<Tensor<T>, Tensor<T>>> make_batches(      \
        const std::vector<std::pair<Tensor<T>, Tensor<T>>>&, std::size_t, std::uint64_t);

RTFNET_IMAGE_INSTANTIATE(float)
RTFNET_IMAGE_INSTANTIATE(double)
#undef RTFNET_IMAGE_INSTANTIATE

}  // namespace rtfnet
