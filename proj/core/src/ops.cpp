// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include "rtfnet/ops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>
#include <type_traits>

#include "gemm.hpp"

namespace rtfnet {

namespace {

constexpr double kNormEps = 1e-5;

std::string shape_str(const std::vector<std::size_t>& dims) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << "x";
        os << dims[i];
    }
    os << "]";
    return os.str();
}

void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

template <typename T>
void check_same_dims(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    check(a.dims() == b.dims(), std::string(op) + ": shape mismatch " +
                                    shape_str(a.dims()) + " vs " + shape_str(b.dims()));
}

// col layout: row = (c*k + ky)*k + kx, column = oy*w_out + ox.
template <typename T>
void im2col(const T* x, std::size_t c_in, std::size_t h, std::size_t w, std::size_t k,
            std::size_t stride, std::size_t pad, std::size_t h_out, std::size_t w_out,
            T* col) {
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                T* dst = col + ((c * k + ky) * k + kx) * (h_out * w_out);
                for (std::size_t oy = 0; oy < h_out; ++oy) {
                    const std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * stride + ky) -
                        static_cast<std::ptrdiff_t>(pad);
                    T* drow = dst + oy * w_out;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                        std::fill(drow, drow + w_out, T(0));
                        continue;
                    }
                    const T* xrow = x + (c * h + static_cast<std::size_t>(iy)) * w;
                    if (stride == 1) {
                        // valid ox range is contiguous: ix = ox + kx - pad in [0, w)
                        const std::size_t ox0 = pad > kx ? pad - kx : 0;
                        const std::size_t ox1 =
                            std::min<std::size_t>(w_out, w + pad < kx ? 0 : w + pad - kx);
                        std::fill(drow, drow + std::min(ox0, w_out), T(0));
                        for (std::size_t ox = ox0; ox < ox1; ++ox) {
                            drow[ox] = xrow[ox + kx - pad];
                        }
                        if (ox1 < w_out) std::fill(drow + ox1, drow + w_out, T(0));
                    } else {
                        for (std::size_t ox = 0; ox < w_out; ++ox) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                static_cast<std::ptrdiff_t>(pad);
                            drow[ox] = (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w))
                                           ? xrow[ix]
                                           : T(0);
                        }
                    }
                }
            }
        }
    }
}

// Per-element gather form of col2im: each dx element sums its own kernel
// footprint in a fixed (ky, kx) order, which keeps accumulation deterministic.
// The stride-1 path applies the same (ky, kx)-ordered contributions as
// contiguous row adds; each element still accumulates in that order because
// every (ky, kx) pair touches it exactly once.
template <typename T>
void col2im_gather(const T* dcol, std::size_t c_in, std::size_t h, std::size_t w,
                   std::size_t k, std::size_t stride, std::size_t pad, std::size_t h_out,
                   std::size_t w_out, T* dx_accum) {
    if (stride == 1) {
        for (std::size_t c = 0; c < c_in; ++c) {
            for (std::size_t ky = 0; ky < k; ++ky) {
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const T* src = dcol + ((c * k + ky) * k + kx) * (h_out * w_out);
                    // iy = oy + ky - pad, ix = ox + kx - pad
                    for (std::size_t oy = 0; oy < h_out; ++oy) {
                        const std::ptrdiff_t iy = std::ptrdiff_t(oy + ky) -
                                                  std::ptrdiff_t(pad);
                        if (iy < 0 || iy >= std::ptrdiff_t(h)) continue;
                        const std::size_t ox0 = pad > kx ? pad - kx : 0;
                        const std::size_t ox1 =
                            std::min<std::size_t>(w_out, w + pad < kx ? 0 : w + pad - kx);
                        if (ox1 <= ox0) continue;
                        const std::size_t ix0 = ox0 + kx - pad;
                        const T* srow = src + oy * w_out + ox0;
                        T* drow = dx_accum + (c * h + std::size_t(iy)) * w + ix0;
                        for (std::size_t t = 0; t < ox1 - ox0; ++t) drow[t] += srow[t];
                    }
                }
            }
        }
        return;
    }
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t iy = 0; iy < h; ++iy) {
            for (std::size_t ix = 0; ix < w; ++ix) {
                T acc = T(0);
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const std::size_t oy_num = iy + pad;
                    if (oy_num < ky) continue;
                    const std::size_t oy_off = oy_num - ky;
                    if (oy_off % stride != 0) continue;
                    const std::size_t oy = oy_off / stride;
                    if (oy >= h_out) continue;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const std::size_t ox_num = ix + pad;
                        if (ox_num < kx) continue;
                        const std::size_t ox_off = ox_num - kx;
                        if (ox_off % stride != 0) continue;
                        const std::size_t ox = ox_off / stride;
                        if (ox >= w_out) continue;
                        acc += dcol[((c * k + ky) * k + kx) * (h_out * w_out) +
                                    oy * w_out + ox];
                    }
                }
                dx_accum[(c * h + iy) * w + ix] += acc;
            }
        }
    }
}

template <typename T>
std::vector<T>& conv_col_scratch() {
    static thread_local std::vector<T> buf;
    return buf;
}

template <typename T>
std::vector<T>& conv_dcol_scratch() {
    static thread_local std::vector<T> buf;
    return buf;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride, std::size_t padding) {
    check(x.rank() == 4, "conv2d: input must be NxCxHxW, got " + shape_str(x.dims()));
    check(weight.rank() == 4,
          "conv2d: weight must be CoutxCinxkxk, got " + shape_str(weight.dims()));
    const std::size_t n = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t c_out = weight.dim(0), k = weight.dim(2);
    check(weight.dim(2) == weight.dim(3), "conv2d: kernel must be square");
    check(weight.dim(1) == c_in, "conv2d: channel mismatch, input " + shape_str(x.dims()) +
                                     " vs weight " + shape_str(weight.dims()));
    if (bias.defined()) {
        check(bias.rank() == 1 && bias.dim(0) == c_out,
              "conv2d: bias must have one value per output channel");
    }
    check(stride >= 1, "conv2d: stride must be >= 1");
    check(h + 2 * padding >= k && w + 2 * padding >= k,
          "conv2d: kernel does not fit padded input");
    check((h + 2 * padding - k) % stride == 0 && (w + 2 * padding - k) % stride == 0,
          "conv2d: non-integral output extent");
    const std::size_t h_out = (h + 2 * padding - k) / stride + 1;
    const std::size_t w_out = (w + 2 * padding - k) / stride + 1;
    const std::size_t spatial = h_out * w_out;
    const std::size_t ckk = c_in * k * k;

    Tensor<T> out({n, c_out, h_out, w_out});
    auto& col = conv_col_scratch<T>();
    col.resize(ckk * spatial);
    const T* xp = x.data().data();
    const T* wp = weight.data().data();
    T* op = out.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        im2col(xp + i * c_in * h * w, c_in, h, w, k, stride, padding, h_out, w_out,
               col.data());
        detail::gemm_nn(wp, col.data(), op + i * c_out * spatial, c_out, ckk, spatial,
                        /*accumulate=*/false);
        if (bias.defined()) {
            const T* bp = bias.data().data();
            for (std::size_t c = 0; c < c_out; ++c) {
                T* row = op + (i * c_out + c) * spatial;
                const T bv = bp[c];
                for (std::size_t s = 0; s < spatial; ++s) row[s] += bv;
            }
        }
    }

    const bool needs = x.requires_grad() || weight.requires_grad() ||
                       (bias.defined() && bias.requires_grad());
    if (tape && needs) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, wc = weight, bc = bias, oc = out;
        tape->record([xc, wc, bc, oc, stride, padding, n, c_in, h, w, c_out, k, h_out,
                      w_out]() mutable {
            if (!oc.has_grad()) return;
            const std::size_t spatial = h_out * w_out;
            const std::size_t ckk = c_in * k * k;
            const T* go = oc.grad().data();
            if (bc.defined() && bc.requires_grad()) {
                T* gb = bc.grad().data();
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t c = 0; c < c_out; ++c) {
                        const T* row = go + (i * c_out + c) * spatial;
                        T acc = T(0);
                        for (std::size_t s = 0; s < spatial; ++s) acc += row[s];
                        gb[c] += acc;
                    }
                }
            }
            if (wc.requires_grad()) {
                auto& col = conv_col_scratch<T>();
                col.resize(ckk * spatial);
                const T* xp = xc.data().data();
                T* gw = wc.grad().data();
                for (std::size_t i = 0; i < n; ++i) {
                    im2col(xp + i * c_in * h * w, c_in, h, w, k, stride, padding, h_out,
                           w_out, col.data());
                    detail::gemm_nt(go + i * c_out * spatial, col.data(), gw, c_out,
                                    spatial, ckk, /*accumulate=*/true);
                }
            }
            if (xc.requires_grad()) {
                auto& dcol = conv_dcol_scratch<T>();
                dcol.resize(ckk * spatial);
                const T* wp = wc.data().data();
                T* gx = xc.grad().data();
                for (std::size_t i = 0; i < n; ++i) {
                    detail::gemm_tn(wp, go + i * c_out * spatial, dcol.data(), ckk, c_out,
                                    spatial, /*accumulate=*/false);
                    col2im_gather(dcol.data(), c_in, h, w, k, stride, padding, h_out,
                                  w_out, gx + i * c_in * h * w);
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x) {
    Tensor<T> out(x.dims());
    const T* xp = x.data().data();
    T* op = out.data().data();
    for (std::size_t i = 0; i < x.size(); ++i) op[i] = xp[i] > T(0) ? xp[i] : T(0);
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            const T* xp = xc.data().data();
            T* gx = xc.grad().data();
            for (std::size_t i = 0; i < xc.size(); ++i) {
                if (xp[i] > T(0)) gx[i] += go[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> gelu(Tape<T>* tape, const Tensor<T>& x) {
    Tensor<T> out(x.dims());
    const T* xp = x.data().data();
    T* op = out.data().data();
    const T inv_sqrt2 = T(1) / std::sqrt(T(2));
    for (std::size_t i = 0; i < x.size(); ++i) {
        op[i] = T(0.5) * xp[i] * (T(1) + std::erf(xp[i] * inv_sqrt2));
    }
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc, inv_sqrt2]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            const T* xp = xc.data().data();
            T* gx = xc.grad().data();
            const T c = std::sqrt(T(2) / std::numbers::pi_v<T>);
            for (std::size_t i = 0; i < xc.size(); ++i) {
                const T v = xp[i];
                const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
                gx[i] += go[i] * (cdf + T(0.5) * v * c * std::exp(T(-0.5) * v * v));
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> batch_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& scale,
                     const Tensor<T>& shift, BatchNormStats<T>& stats, Mode mode) {
    check(x.rank() == 4, "batch_norm: input must be NxCxHxW");
    const std::size_t n = x.dim(0), c_count = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(scale.rank() == 1 && scale.dim(0) == c_count &&
              shift.rank() == 1 && shift.dim(0) == c_count,
          "batch_norm: scale/shift must have one value per channel");
    check(stats.running_mean.dim(0) == c_count, "batch_norm: stats channel mismatch");
    const std::size_t spatial = h * w;
    const std::size_t m = n * spatial;
    const T eps = T(kNormEps);

    Tensor<T> out(x.dims());
    const T* xp = x.data().data();
    const T* gp = scale.data().data();
    const T* bp = shift.data().data();
    T* op = out.data().data();

    std::vector<T> mean(c_count, T(0));
    std::vector<T> invstd(c_count, T(0));

    if (mode == Mode::kTrain) {
        std::vector<T> var(c_count, T(0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const T* row = xp + (i * c_count + c) * spatial;
                T acc = T(0);
                for (std::size_t s = 0; s < spatial; ++s) acc += row[s];
                mean[c] += acc;
            }
        }
        for (std::size_t c = 0; c < c_count; ++c) mean[c] /= T(m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const T* row = xp + (i * c_count + c) * spatial;
                T acc = T(0);
                for (std::size_t s = 0; s < spatial; ++s) {
                    const T d = row[s] - mean[c];
                    acc += d * d;
                }
                var[c] += acc;
            }
        }
        for (std::size_t c = 0; c < c_count; ++c) {
            var[c] /= T(m);
            invstd[c] = T(1) / std::sqrt(var[c] + eps);
        }
        // Running stats use the unbiased variance (PyTorch convention).
        const T momentum = T(0.1);
        T* rm = stats.running_mean.data().data();
        T* rv = stats.running_var.data().data();
        for (std::size_t c = 0; c < c_count; ++c) {
            const T var_u = m > 1 ? var[c] * T(m) / T(m - 1) : var[c];
            rm[c] = (T(1) - momentum) * rm[c] + momentum * mean[c];
            rv[c] = (T(1) - momentum) * rv[c] + momentum * var_u;
        }
        stats.initialized = true;
    } else {
        if (!stats.initialized) {
            throw std::runtime_error(
                "batch_norm: eval mode requested with no accumulated running stats");
        }
        const T* rm = stats.running_mean.data().data();
        const T* rv = stats.running_var.data().data();
        for (std::size_t c = 0; c < c_count; ++c) {
            mean[c] = rm[c];
            invstd[c] = T(1) / std::sqrt(rv[c] + eps);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < c_count; ++c) {
            const T* row = xp + (i * c_count + c) * spatial;
            T* orow = op + (i * c_count + c) * spatial;
            const T mu = mean[c], is = invstd[c], ga = gp[c], be = bp[c];
            for (std::size_t s = 0; s < spatial; ++s) {
                orow[s] = (row[s] - mu) * is * ga + be;
            }
        }
    }

    const bool needs = x.requires_grad() || scale.requires_grad() || shift.requires_grad();
    if (tape && needs) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, gc = scale, bc = shift, oc = out;
        const bool train = mode == Mode::kTrain;
        tape->record([xc, gc, bc, oc, mean, invstd, train, n, c_count, spatial]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            const T* xp = xc.data().data();
            const T* gp = gc.data().data();
            const std::size_t m = n * spatial;

            std::vector<T> sum_dy(c_count, T(0));
            std::vector<T> sum_dy_xhat(c_count, T(0));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t c = 0; c < c_count; ++c) {
                    const T* grow = go + (i * c_count + c) * spatial;
                    const T* xrow = xp + (i * c_count + c) * spatial;
                    T s0 = T(0), s1 = T(0);
                    for (std::size_t s = 0; s < spatial; ++s) {
                        const T xhat = (xrow[s] - mean[c]) * invstd[c];
                        s0 += grow[s];
                        s1 += grow[s] * xhat;
                    }
                    sum_dy[c] += s0;
                    sum_dy_xhat[c] += s1;
                }
            }
            if (bc.requires_grad()) {
                T* gb = bc.grad().data();
                for (std::size_t c = 0; c < c_count; ++c) gb[c] += sum_dy[c];
            }
            if (gc.requires_grad()) {
                T* gg = gc.grad().data();
                for (std::size_t c = 0; c < c_count; ++c) gg[c] += sum_dy_xhat[c];
            }
            if (xc.requires_grad()) {
                T* gx = xc.grad().data();
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t c = 0; c < c_count; ++c) {
                        const T* grow = go + (i * c_count + c) * spatial;
                        const T* xrow = xp + (i * c_count + c) * spatial;
                        T* gxr = gx + (i * c_count + c) * spatial;
                        const T ga = gp[c], is = invstd[c], mu = mean[c];
                        if (train) {
                            const T mean_dy = sum_dy[c] / T(m);
                            const T mean_dy_xhat = sum_dy_xhat[c] / T(m);
                            for (std::size_t s = 0; s < spatial; ++s) {
                                const T xhat = (xrow[s] - mu) * is;
                                gxr[s] += ga * is * (grow[s] - mean_dy - xhat * mean_dy_xhat);
                            }
                        } else {
                            for (std::size_t s = 0; s < spatial; ++s) {
                                gxr[s] += ga * is * grow[s];
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> layer_norm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& scale,
                     const Tensor<T>& shift) {
    check(x.rank() == 4, "layer_norm: input must be NxCxHxW");
    const std::size_t n = x.dim(0), c_count = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(scale.rank() == 1 && scale.dim(0) == c_count &&
              shift.rank() == 1 && shift.dim(0) == c_count,
          "layer_norm: scale/shift must have one value per channel");
    const std::size_t spatial = h * w;
    const T eps = T(kNormEps);

    Tensor<T> out(x.dims());
    const T* xp = x.data().data();
    const T* gp = scale.data().data();
    const T* bp = shift.data().data();
    T* op = out.data().data();

    std::vector<T> mean(n * spatial);
    std::vector<T> invstd(n * spatial);
    for (std::size_t i = 0; i < n; ++i) {
        const T* base = xp + i * c_count * spatial;
        for (std::size_t s = 0; s < spatial; ++s) {
            T mu = T(0);
            for (std::size_t c = 0; c < c_count; ++c) mu += base[c * spatial + s];
            mu /= T(c_count);
            T var = T(0);
            for (std::size_t c = 0; c < c_count; ++c) {
                const T d = base[c * spatial + s] - mu;
                var += d * d;
            }
            var /= T(c_count);
            const T is = T(1) / std::sqrt(var + eps);
            mean[i * spatial + s] = mu;
            invstd[i * spatial + s] = is;
            T* obase = op + i * c_count * spatial;
            for (std::size_t c = 0; c < c_count; ++c) {
                obase[c * spatial + s] = (base[c * spatial + s] - mu) * is * gp[c] + bp[c];
            }
        }
    }

    const bool needs = x.requires_grad() || scale.requires_grad() || shift.requires_grad();
    if (tape && needs) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, gc = scale, bc = shift, oc = out;
        tape->record([xc, gc, bc, oc, mean, invstd, n, c_count, spatial]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            const T* xp = xc.data().data();
            const T* gp = gc.data().data();
            T* gx = xc.requires_grad() ? xc.grad().data() : nullptr;
            T* gg = gc.requires_grad() ? gc.grad().data() : nullptr;
            T* gb = bc.requires_grad() ? bc.grad().data() : nullptr;
            for (std::size_t i = 0; i < n; ++i) {
                const T* xbase = xp + i * c_count * spatial;
                const T* gbase = go + i * c_count * spatial;
                for (std::size_t s = 0; s < spatial; ++s) {
                    const T mu = mean[i * spatial + s];
                    const T is = invstd[i * spatial + s];
                    T s1 = T(0), s2 = T(0);
                    for (std::size_t c = 0; c < c_count; ++c) {
                        const T xhat = (xbase[c * spatial + s] - mu) * is;
                        const T dxhat = gbase[c * spatial + s] * gp[c];
                        s1 += dxhat;
                        s2 += dxhat * xhat;
                        if (gg) gg[c] += gbase[c * spatial + s] * xhat;
                        if (gb) gb[c] += gbase[c * spatial + s];
                    }
                    if (gx) {
                        T* gxbase = gx + i * c_count * spatial;
                        for (std::size_t c = 0; c < c_count; ++c) {
                            const T xhat = (xbase[c * spatial + s] - mu) * is;
                            const T dxhat = gbase[c * spatial + s] * gp[c];
                            gxbase[c * spatial + s] +=
                                is * (dxhat - s1 / T(c_count) - xhat * s2 / T(c_count));
                        }
                    }
                }
            }
        });
    }
    return out;
}

namespace {

// Shared shape logic for batched matmul: batch dims must match, or one side
// may be rank-2 and broadcast against the other.
template <typename T>
struct MatmulShape {
    std::size_t batches, m, k, n;
    bool a_broadcast, b_broadcast;
    std::vector<std::size_t> out_dims;
};

template <typename T>
MatmulShape<T> matmul_shape(const Tensor<T>& a, const Tensor<T>& b) {
    check(a.rank() >= 2 && b.rank() >= 2, "matmul: operands must have rank >= 2");
    const std::size_t m = a.dim(a.rank() - 2), ka = a.dim(a.rank() - 1);
    const std::size_t kb = b.dim(b.rank() - 2), nn = b.dim(b.rank() - 1);
    check(ka == kb, "matmul: inner extents disagree, " + shape_str(a.dims()) + " vs " +
                        shape_str(b.dims()));
    std::vector<std::size_t> abatch(a.dims().begin(), a.dims().end() - 2);
    std::vector<std::size_t> bbatch(b.dims().begin(), b.dims().end() - 2);
    MatmulShape<T> s{};
    s.m = m;
    s.k = ka;
    s.n = nn;
    if (abatch == bbatch) {
        s.a_broadcast = s.b_broadcast = false;
        s.out_dims = abatch;
    } else if (bbatch.empty()) {
        s.b_broadcast = true;
        s.a_broadcast = false;
        s.out_dims = abatch;
    } else if (abatch.empty()) {
        s.a_broadcast = true;
        s.b_broadcast = false;
        s.out_dims = bbatch;
    } else {
        throw std::invalid_argument("matmul: batch extents disagree, " +
                                    shape_str(a.dims()) + " vs " + shape_str(b.dims()));
    }
    s.batches = 1;
    for (auto d : s.out_dims) s.batches *= d;
    s.out_dims.push_back(m);
    s.out_dims.push_back(nn);
    return s;
}

}  // namespace

namespace {

template <typename T>
std::vector<T>& matmul_scratch_a() {
    static thread_local std::vector<T> buf;
    return buf;
}

template <typename T>
std::vector<T>& matmul_scratch_b() {
    static thread_local std::vector<T> buf;
    return buf;
}

// Skinny operands (attention head dim) make the plain kernels loop over a
// handful of columns; transposing the narrow side lets the dot/sweep run over
// the long axis instead. The cutover is heuristic; every path keeps a fixed
// per-element accumulation order.
constexpr std::size_t kNarrow = 16;
constexpr std::size_t kLongAxis = 64;

}  // namespace

template <typename T>
Tensor<T> matmul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    const auto s = matmul_shape(a, b);
    Tensor<T> out(s.out_dims);
    const T* ap = a.data().data();
    const T* bp = b.data().data();
    T* op = out.data().data();
    const bool narrow_n = s.n <= kNarrow && s.k >= kLongAxis;
    if (narrow_n) matmul_scratch_b<T>().resize(s.k * s.n);
    for (std::size_t i = 0; i < s.batches; ++i) {
        const T* ai = ap + (s.a_broadcast ? 0 : i * s.m * s.k);
        const T* bi = bp + (s.b_broadcast ? 0 : i * s.k * s.n);
        if (narrow_n) {
            T* bt = matmul_scratch_b<T>().data();
            detail::transpose_into(bi, bt, s.k, s.n);
            detail::gemm_nt(ai, bt, op + i * s.m * s.n, s.m, s.k, s.n, false);
        } else {
            detail::gemm_nn(ai, bi, op + i * s.m * s.n, s.m, s.k, s.n, false);
        }
    }
    if (tape && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        tape->record([ac, bc, oc, s]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            if (ac.requires_grad()) {
                T* ga = ac.grad().data();
                const T* bp = bc.data().data();
                const bool short_dots = s.n <= kNarrow && s.k >= kLongAxis;
                if (short_dots) matmul_scratch_b<T>().resize(s.n * s.k);
                for (std::size_t i = 0; i < s.batches; ++i) {
                    const T* bi = bp + (s.b_broadcast ? 0 : i * s.k * s.n);
                    T* gai = ga + (s.a_broadcast ? 0 : i * s.m * s.k);
                    if (short_dots) {
                        // dA = dY * B^T as a wide NN product
                        T* bt = matmul_scratch_b<T>().data();
                        detail::transpose_into(bi, bt, s.k, s.n);
                        detail::gemm_nn(go + i * s.m * s.n, bt, gai, s.m, s.n, s.k, true);
                    } else {
                        detail::gemm_nt(go + i * s.m * s.n, bi, gai, s.m, s.n, s.k, true);
                    }
                }
            }
            if (bc.requires_grad()) {
                T* gb = bc.grad().data();
                const T* ap = ac.data().data();
                const bool narrow_cols = s.n <= kNarrow && s.m >= kLongAxis && s.k >= kLongAxis;
                if (narrow_cols) {
                    matmul_scratch_a<T>().resize(s.n * s.m);
                    matmul_scratch_b<T>().resize(s.n * s.k);
                }
                for (std::size_t i = 0; i < s.batches; ++i) {
                    const T* ai = ap + (s.a_broadcast ? 0 : i * s.m * s.k);
                    T* gbi = gb + (s.b_broadcast ? 0 : i * s.k * s.n);
                    if (narrow_cols) {
                        // dB^T = dY^T * A as a wide NN product, then fold back
                        T* gyt = matmul_scratch_a<T>().data();
                        T* dbt = matmul_scratch_b<T>().data();
                        detail::transpose_into(go + i * s.m * s.n, gyt, s.m, s.n);
                        detail::gemm_nn(gyt, ai, dbt, s.n, s.m, s.k, false);
                        for (std::size_t kk = 0; kk < s.k; ++kk) {
                            for (std::size_t nn = 0; nn < s.n; ++nn) {
                                gbi[kk * s.n + nn] += dbt[nn * s.k + kk];
                            }
                        }
                    } else {
                        detail::gemm_tn(ai, go + i * s.m * s.n, gbi, s.k, s.m, s.n, true);
                    }
                }
            }
        });
    }
    return out;
}

namespace {

// Polynomial expf for non-positive arguments (Cephes coefficients, ~2e-7
// relative error). Softmax feeds max-subtracted values, so v <= 0 always.
// Everything here is branch-free integer/float arithmetic: gcc will not
// vectorize libm expf or float min/max clamps, and the exponentials dominate
// attention cost on the float path. The clamp at -87 works as an unsigned
// compare because bit patterns of negative floats grow with magnitude; the
// round-to-nearest comes from the 1.5*2^23 bias trick.
inline float fast_expf_nonpos(float v) {
    constexpr std::uint32_t kCapBits = 0xC2AE0000u;  // -87.0f, exp(-87) ~ 1.6e-38
    std::uint32_t u = std::bit_cast<std::uint32_t>(v);
    u = u > kCapBits ? kCapBits : u;
    v = std::bit_cast<float>(u);
    const float bias = 12582912.0f;
    const float t = v * 1.44269504088896341f + bias;
    const auto n = static_cast<std::int32_t>(std::bit_cast<std::uint32_t>(t) -
                                             std::bit_cast<std::uint32_t>(bias));
    const float z = t - bias;
    float r = v - z * 0.693359375f;
    r = r - z * -2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    const float y = p * r * r + r + 1.0f;
    const auto bits = std::bit_cast<std::uint32_t>(y) +
                      (static_cast<std::uint32_t>(n) << 23);
    return std::bit_cast<float>(bits);
}

template <typename T>
T softmax_exp(T v) {
    if constexpr (std::is_same_v<T, float>) {
        return fast_expf_nonpos(v);
    } else {
        return std::exp(v);
    }
}

}  // namespace

template <typename T>
Tensor<T> softmax(Tape<T>* tape, const Tensor<T>& x) {
    const std::size_t cols = x.dim(x.rank() - 1);
    const std::size_t rows = x.size() / cols;
    Tensor<T> out(x.dims());
    const T* xp = x.data().data();
    T* op = out.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = xp + r * cols;
        T* orow = op + r * cols;
        T mx = xr[0];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
        // fused exponentiation and lane-split sum: fixed order, deterministic
        constexpr std::size_t kLanes = 16;
        T lanes[kLanes] = {};
        std::size_t c = 0;
        for (; c + kLanes <= cols; c += kLanes) {
            for (std::size_t l = 0; l < kLanes; ++l) {
                const T e = softmax_exp(xr[c + l] - mx);
                orow[c + l] = e;
                lanes[l] += e;
            }
        }
        T z = T(0);
        for (; c < cols; ++c) {
            const T e = softmax_exp(xr[c] - mx);
            orow[c] = e;
            z += e;
        }
        for (std::size_t l = 0; l < kLanes; ++l) z += lanes[l];
        const T inv = T(1) / z;
        for (std::size_t c2 = 0; c2 < cols; ++c2) orow[c2] *= inv;
    }
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc, rows, cols]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            const T* yp = oc.data().data();
            T* gx = xc.grad().data();
            for (std::size_t r = 0; r < rows; ++r) {
                const T* grow = go + r * cols;
                const T* yrow = yp + r * cols;
                T dot = T(0);
                for (std::size_t c = 0; c < cols; ++c) dot += grow[c] * yrow[c];
                T* gxr = gx + r * cols;
                for (std::size_t c = 0; c < cols; ++c) {
                    gxr[c] += yrow[c] * (grow[c] - dot);
                }
            }
        });
    }
    return out;
}

namespace {

// dir=false: unshuffle src NxCxHxW into dst NxC*r^2xH/rxW/r.
// dir=true: inverse move (used for gradients and pixel_shuffle).
template <typename T>
void shuffle_move(const T* src, T* dst, std::size_t n, std::size_t c_small,
                  std::size_t h_small, std::size_t w_small, std::size_t r, bool to_big,
                  bool accumulate) {
    // "small" names the high-resolution side (C, H, W); "big" the unshuffled
    // side (C*r^2, H/r, W/r). h_small/w_small are the high-res extents.
    const std::size_t h_big = h_small / r, w_big = w_small / r;
    const std::size_t cr2 = c_small * r * r;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < c_small; ++c) {
            for (std::size_t dy = 0; dy < r; ++dy) {
                for (std::size_t dx = 0; dx < r; ++dx) {
                    const std::size_t cb = c * r * r + dy * r + dx;
                    for (std::size_t y = 0; y < h_big; ++y) {
                        const T* srow;
                        T* drow;
                        std::size_t sstep, dstep;
                        const std::size_t big_off = ((i * cr2 + cb) * h_big + y) * w_big;
                        const std::size_t small_off =
                            ((i * c_small + c) * h_small + y * r + dy) * w_small + dx;
                        if (to_big) {
                            srow = src + small_off;
                            sstep = r;
                            drow = dst + big_off;
                            dstep = 1;
                        } else {
                            srow = src + big_off;
                            sstep = 1;
                            drow = dst + small_off;
                            dstep = r;
                        }
                        for (std::size_t xcol = 0; xcol < w_big; ++xcol) {
                            if (accumulate) {
                                drow[xcol * dstep] += srow[xcol * sstep];
                            } else {
                                drow[xcol * dstep] = srow[xcol * sstep];
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

template <typename T>
Tensor<T> pixel_unshuffle(Tape<T>* tape, const Tensor<T>& x, std::size_t r) {
    check(x.rank() == 4, "pixel_unshuffle: input must be NxCxHxW");
    check(r >= 1, "pixel_unshuffle: factor must be >= 1");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(h % r == 0 && w % r == 0,
          "pixel_unshuffle: spatial extents " + shape_str(x.dims()) +
              " not divisible by factor " + std::to_string(r));
    Tensor<T> out({n, c * r * r, h / r, w / r});
    shuffle_move(x.data().data(), out.data().data(), n, c, h, w, r, /*to_big=*/true,
                 false);
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc, n, c, h, w, r]() mutable {
            if (!oc.has_grad()) return;
            shuffle_move(oc.grad().data(), xc.grad().data(), n, c, h, w, r,
                         /*to_big=*/false, true);
        });
    }
    return out;
}

template <typename T>
Tensor<T> pixel_shuffle(Tape<T>* tape, const Tensor<T>& x, std::size_t r) {
    check(x.rank() == 4, "pixel_shuffle: input must be NxCxHxW");
    check(r >= 1, "pixel_shuffle: factor must be >= 1");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(c % (r * r) == 0, "pixel_shuffle: channel count " + std::to_string(c) +
                                " not divisible by r^2 = " + std::to_string(r * r));
    const std::size_t c_out = c / (r * r);
    Tensor<T> out({n, c_out, h * r, w * r});
    shuffle_move(x.data().data(), out.data().data(), n, c_out, h * r, w * r, r,
                 /*to_big=*/false, false);
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc, n, c_out, h, w, r]() mutable {
            if (!oc.has_grad()) return;
            shuffle_move(oc.grad().data(), xc.grad().data(), n, c_out, h * r, w * r, r,
                         /*to_big=*/true, true);
        });
    }
    return out;
}

namespace {

template <typename T, typename Fwd, typename Bwd>
Tensor<T> binary_elementwise(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b,
                             const char* name, Fwd fwd, Bwd bwd) {
    check_same_dims(a, b, name);
    Tensor<T> out(a.dims());
    const T* ap = a.data().data();
    const T* bp = b.data().data();
    T* op = out.data().data();
    for (std::size_t i = 0; i < a.size(); ++i) op[i] = fwd(ap[i], bp[i]);
    if (tape && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        tape->record([ac, bc, oc, bwd]() mutable {
            if (!oc.has_grad()) return;
            bwd(ac, bc, oc);
        });
    }
    return out;
}

}  // namespace

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    return binary_elementwise<T>(
        tape, a, b, "add", [](T x, T y) { return x + y; },
        [](Tensor<T>& ac, Tensor<T>& bc, Tensor<T>& oc) {
            const T* go = oc.grad().data();
            if (ac.requires_grad()) {
                T* ga = ac.grad().data();
                for (std::size_t i = 0; i < ac.size(); ++i) ga[i] += go[i];
            }
            if (bc.requires_grad()) {
                T* gb = bc.grad().data();
                for (std::size_t i = 0; i < bc.size(); ++i) gb[i] += go[i];
            }
        });
}

template <typename T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    return binary_elementwise<T>(
        tape, a, b, "sub", [](T x, T y) { return x - y; },
        [](Tensor<T>& ac, Tensor<T>& bc, Tensor<T>& oc) {
            const T* go = oc.grad().data();
            if (ac.requires_grad()) {
                T* ga = ac.grad().data();
                for (std::size_t i = 0; i < ac.size(); ++i) ga[i] += go[i];
            }
            if (bc.requires_grad()) {
                T* gb = bc.grad().data();
                for (std::size_t i = 0; i < bc.size(); ++i) gb[i] -= go[i];
            }
        });
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    return binary_elementwise<T>(
        tape, a, b, "mul", [](T x, T y) { return x * y; },
        [](Tensor<T>& ac, Tensor<T>& bc, Tensor<T>& oc) {
            const T* go = oc.grad().data();
            const T* ap = ac.data().data();
            const T* bp = bc.data().data();
            if (ac.requires_grad()) {
                T* ga = ac.grad().data();
                for (std::size_t i = 0; i < ac.size(); ++i) ga[i] += go[i] * bp[i];
            }
            if (bc.requires_grad()) {
                T* gb = bc.grad().data();
                for (std::size_t i = 0; i < bc.size(); ++i) gb[i] += go[i] * ap[i];
            }
        });
}

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& x, T factor) {
    Tensor<T> out(x.dims());
    const T* xp = x.data().data();
    T* op = out.data().data();
    for (std::size_t i = 0; i < x.size(); ++i) op[i] = xp[i] * factor;
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc, factor]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            T* gx = xc.grad().data();
            for (std::size_t i = 0; i < xc.size(); ++i) gx[i] += go[i] * factor;
        });
    }
    return out;
}

template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x) {
    T acc = T(0);
    for (T v : x.data()) acc += v;
    Tensor<T> out = Tensor<T>::scalar(acc);
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc]() mutable {
            if (!oc.has_grad()) return;
            const T g = oc.grad()[0];
            T* gx = xc.grad().data();
            for (std::size_t i = 0; i < xc.size(); ++i) gx[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& x, std::vector<std::size_t> dims) {
    Tensor<T> out(dims, std::vector<T>(x.data().begin(), x.data().end()));
    check(out.size() == x.size(), "reshape: element count mismatch " +
                                      shape_str(x.dims()) + " -> " + shape_str(dims));
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            T* gx = xc.grad().data();
            for (std::size_t i = 0; i < xc.size(); ++i) gx[i] += go[i];
        });
    }
    return out;
}

namespace {

template <typename T>
void transpose_copy(const T* src, T* dst, std::size_t batches, std::size_t rows,
                    std::size_t cols, bool accumulate) {
    for (std::size_t b = 0; b < batches; ++b) {
        const T* s = src + b * rows * cols;
        T* d = dst + b * rows * cols;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                if (accumulate) {
                    d[c * rows + r] += s[r * cols + c];
                } else {
                    d[c * rows + r] = s[r * cols + c];
                }
            }
        }
    }
}

}  // namespace

template <typename T>
Tensor<T> transpose_last2(Tape<T>* tape, const Tensor<T>& x) {
    check(x.rank() >= 2, "transpose_last2: rank must be >= 2");
    const std::size_t rows = x.dim(x.rank() - 2), cols = x.dim(x.rank() - 1);
    const std::size_t batches = x.size() / (rows * cols);
    std::vector<std::size_t> dims = x.dims();
    std::swap(dims[dims.size() - 1], dims[dims.size() - 2]);
    Tensor<T> out(dims);
    transpose_copy(x.data().data(), out.data().data(), batches, rows, cols, false);
    if (tape && x.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record([xc, oc, batches, rows, cols]() mutable {
            if (!oc.has_grad()) return;
            transpose_copy(oc.grad().data(), xc.grad().data(), batches, cols, rows, true);
        });
    }
    return out;
}

template <typename T>
Tensor<T> concat_last(Tape<T>* tape, const std::vector<Tensor<T>>& parts) {
    check(!parts.empty(), "concat_last: no inputs");
    const auto& first = parts.front().dims();
    std::size_t total_last = 0;
    bool needs = false;
    for (const auto& p : parts) {
        check(p.rank() == parts.front().rank(), "concat_last: rank mismatch");
        for (std::size_t i = 0; i + 1 < p.rank(); ++i) {
            check(p.dim(i) == first[i], "concat_last: leading extent mismatch");
        }
        total_last += p.dim(p.rank() - 1);
        needs = needs || p.requires_grad();
    }
    std::vector<std::size_t> dims = first;
    dims.back() = total_last;
    Tensor<T> out(dims);
    const std::size_t rows = out.size() / total_last;
    T* op = out.data().data();
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const std::size_t last = p.dim(p.rank() - 1);
        const T* pp = p.data().data();
        for (std::size_t r = 0; r < rows; ++r) {
            std::memcpy(op + r * total_last + offset, pp + r * last, last * sizeof(T));
        }
        offset += last;
    }
    if (tape && needs) {
        out.set_requires_grad(true);
        std::vector<Tensor<T>> pc = parts;
        Tensor<T> oc = out;
        tape->record([pc, oc, rows, total_last]() mutable {
            if (!oc.has_grad()) return;
            const T* go = oc.grad().data();
            std::size_t offset = 0;
            for (auto& p : pc) {
                const std::size_t last = p.dim(p.rank() - 1);
                if (p.requires_grad()) {
                    T* gp = p.grad().data();
                    for (std::size_t r = 0; r < rows; ++r) {
                        const T* src = go + r * total_last + offset;
                        T* dst = gp + r * last;
                        for (std::size_t c = 0; c < last; ++c) dst[c] += src[c];
                    }
                }
                offset += last;
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> mse_loss(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    check_same_dims(a, b, "mse_loss");
    const T* ap = a.data().data();
    const T* bp = b.data().data();
    T acc = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const T d = ap[i] - bp[i];
        acc += d * d;
    }
    const T inv_n = T(1) / T(a.size());
    Tensor<T> out = Tensor<T>::scalar(acc * inv_n);
    if (tape && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        tape->record([ac, bc, oc, inv_n]() mutable {
            if (!oc.has_grad()) return;
            const T g = oc.grad()[0];
            const T* ap = ac.data().data();
            const T* bp = bc.data().data();
            const T c = T(2) * g * inv_n;
            if (ac.requires_grad()) {
                T* ga = ac.grad().data();
                for (std::size_t i = 0; i < ac.size(); ++i) ga[i] += c * (ap[i] - bp[i]);
            }
            if (bc.requires_grad()) {
                T* gb = bc.grad().data();
                for (std::size_t i = 0; i < bc.size(); ++i) gb[i] -= c * (ap[i] - bp[i]);
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> reflect_pad_hw(Tape<T>* tape, const Tensor<T>& x, std::size_t pad_h,
                         std::size_t pad_w) {
    check(x.rank() == 4, "reflect_pad_hw: input must be NxCxHxW");
    if (tape) {
        throw std::invalid_argument("reflect_pad_hw: forward-only utility, no tape");
    }
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(pad_h < h || h == 1, "reflect_pad_hw: pad exceeds mirrorable height");
    check(pad_w < w || w == 1, "reflect_pad_hw: pad exceeds mirrorable width");
    const std::size_t ho = h + pad_h, wo = w + pad_w;
    Tensor<T> out({n, c, ho, wo});
    const T* xp = x.data().data();
    T* op = out.data().data();
    for (std::size_t i = 0; i < n * c; ++i) {
        const T* plane = xp + i * h * w;
        T* oplane = op + i * ho * wo;
        for (std::size_t y = 0; y < ho; ++y) {
            // mirror about the last row, excluding the edge itself
            std::size_t sy = y < h ? y : (h >= 2 ? 2 * h - 2 - y : 0);
            const T* srow = plane + sy * w;
            T* drow = oplane + y * wo;
            std::memcpy(drow, srow, w * sizeof(T));
            for (std::size_t t = 0; t < pad_w; ++t) {
                const std::size_t sx = w >= 2 ? w - 2 - t : 0;
                drow[w + t] = srow[sx];
            }
        }
    }
    return out;
}

template <typename T>
Tensor<T> crop_hw(Tape<T>* tape, const Tensor<T>& x, std::size_t h, std::size_t w) {
    check(x.rank() == 4, "crop_hw: input must be NxCxHxW");
    if (tape) {
        throw std::invalid_argument("crop_hw: forward-only utility, no tape");
    }
    const std::size_t n = x.dim(0), c = x.dim(1), hi = x.dim(2), wi = x.dim(3);
    check(h <= hi && w <= wi, "crop_hw: window exceeds input");
    Tensor<T> out({n, c, h, w});
    const T* xp = x.data().data();
    T* op = out.data().data();
    for (std::size_t i = 0; i < n * c; ++i) {
        for (std::size_t y = 0; y < h; ++y) {
            std::memcpy(op + (i * h + y) * w, xp + (i * hi + y) * wi, w * sizeof(T));
        }
    }
    return out;
}

#define RTFNET_OPS_INSTANTIATE(T)                                                  \
    template Tensor<T> conv2d(Tape<T>*, const Tensor<T>&, const Tensor<T>&,       \
                              const Tensor<T>&, std::size_t, std::size_t);        \
    template Tensor<T> relu(Tape<T>*, const Tensor<T>&);                          \
    template Tensor<T> gelu(Tape<T>*, const Tensor<T>&);                          \
    template Tensor<T> batch_norm(Tape<T>*, const Tensor<T>&, const Tensor<T>&,   \
                                  const Tensor<T>&, BatchNormStats<T>&, Mode);    \
    template Tensor<T> layer_norm(Tape<T>*, const Tensor<T>&, const Tensor<T>&,   \
                                  const Tensor<T>&);                              \
    template Tensor<T> matmul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);      \
    template Tensor<T> softmax(Tape<T>*, const Tensor<T>&);                       \
    template Tensor<T> pixel_unshuffle(Tape<T>*, const Tensor<T>&, std::size_t);  \
    template Tensor<T> pixel_shuffle(Tape<T>*, const Tensor<T>&, std::size_t);    \
    template Tensor<T> add(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> sub(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> mul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> scale(Tape<T>*, const Tensor<T>&, T);                      \
    template Tensor<T> sum(Tape<T>*, const Tensor<T>&);                           \
    template Tensor<T> reshape(Tape<T>*, const Tensor<T>&,                        \
                               std::vector<std::size_t>);                         \
    template Tensor<T> transpose_last2(Tape<T>*, const Tensor<T>&);               \
    template Tensor<T> concat_last(Tape<T>*, const std::vector<Tensor<T>>&);      \
    template Tensor<T> mse_loss(Tape<T>*, const Tensor<T>&, const Tensor<T>&);    \
    template Tensor<T> reflect_pad_hw(Tape<T>*, const Tensor<T>&, std::size_t,    \
                                      std::size_t);                               \
    template Tensor<T> crop_hw(Tape<T>*, const Tensor<T>&, std::size_t, std::size_t);

RTFNET_OPS_INSTANTIATE(float)
RTFNET_OPS_INSTANTIATE(double)
#undef RTFNET_OPS_INSTANTIATE

}  // namespace rtfnet
