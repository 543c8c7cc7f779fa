// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

// Row-major GEMM kernels, register-tiled so the accumulators live in vector
// registers across the k loop (the naive memory-round-trip form is 2-4x
// slower on the convolution and attention shapes this project runs). Every
// output element accumulates its reduction in a fixed index order, so results
// are bit-identical across runs regardless of tiling.

namespace rtfnet::detail {

inline constexpr std::size_t kTileRows = 4;
inline constexpr std::size_t kTileCols = 32;

// C(MxN) = A(MxK) * B(KxN), optionally accumulating into C.
template <typename T>
void gemm_nn(const T* __restrict a, const T* __restrict b, T* __restrict c,
             std::size_t m_count, std::size_t k_count, std::size_t n_count,
             bool accumulate) {
    constexpr std::size_t MR = kTileRows, NR = kTileCols;
    std::size_t m = 0;
    for (; m + MR <= m_count; m += MR) {
        std::size_t n0 = 0;
        for (; n0 + NR <= n_count; n0 += NR) {
            T acc[MR][NR];
            for (std::size_t i = 0; i < MR; ++i) {
                T* cr = c + (m + i) * n_count + n0;
                for (std::size_t j = 0; j < NR; ++j) acc[i][j] = accumulate ? cr[j] : T(0);
            }
            for (std::size_t k = 0; k < k_count; ++k) {
                const T* __restrict br = b + k * n_count + n0;
                const T a0 = a[(m + 0) * k_count + k];
                const T a1 = a[(m + 1) * k_count + k];
                const T a2 = a[(m + 2) * k_count + k];
                const T a3 = a[(m + 3) * k_count + k];
                for (std::size_t j = 0; j < NR; ++j) {
                    const T bv = br[j];
                    acc[0][j] += a0 * bv;
                    acc[1][j] += a1 * bv;
                    acc[2][j] += a2 * bv;
                    acc[3][j] += a3 * bv;
                }
            }
            for (std::size_t i = 0; i < MR; ++i) {
                T* cr = c + (m + i) * n_count + n0;
                for (std::size_t j = 0; j < NR; ++j) cr[j] = acc[i][j];
            }
        }
        if (n0 < n_count) {
            const std::size_t nt = n_count - n0;
            T acc[MR][NR];
            for (std::size_t i = 0; i < MR; ++i) {
                T* cr = c + (m + i) * n_count + n0;
                for (std::size_t j = 0; j < nt; ++j) acc[i][j] = accumulate ? cr[j] : T(0);
            }
            for (std::size_t k = 0; k < k_count; ++k) {
                const T* __restrict br = b + k * n_count + n0;
                const T a0 = a[(m + 0) * k_count + k];
                const T a1 = a[(m + 1) * k_count + k];
                const T a2 = a[(m + 2) * k_count + k];
                const T a3 = a[(m + 3) * k_count + k];
                for (std::size_t j = 0; j < nt; ++j) {
                    const T bv = br[j];
                    acc[0][j] += a0 * bv;
                    acc[1][j] += a1 * bv;
                    acc[2][j] += a2 * bv;
                    acc[3][j] += a3 * bv;
                }
            }
            for (std::size_t i = 0; i < MR; ++i) {
                T* cr = c + (m + i) * n_count + n0;
                for (std::size_t j = 0; j < nt; ++j) cr[j] = acc[i][j];
            }
        }
    }
    for (; m < m_count; ++m) {
        T* cr = c + m * n_count;
        if (!accumulate) {
            for (std::size_t n = 0; n < n_count; ++n) cr[n] = T(0);
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            const T av = a[m * k_count + k];
            const T* __restrict br = b + k * n_count;
            for (std::size_t n = 0; n < n_count; ++n) cr[n] += av * br[n];
        }
    }
}

// C(MxN) = A(MxK) * B(NxK)^T. Dot products in 4x2 blocks with lane-split
// accumulators; the lane order is fixed, so results stay deterministic.
template <typename T>
void gemm_nt(const T* __restrict a, const T* __restrict b, T* __restrict c,
             std::size_t m_count, std::size_t k_count, std::size_t n_count,
             bool accumulate) {
    constexpr std::size_t kLanes = 16;
    constexpr std::size_t MB = 4, NB = 2;
    auto dot_block = [&](std::size_t m, std::size_t n, std::size_t mb, std::size_t nb) {
        T lanes[MB * NB][kLanes] = {};
        std::size_t k = 0;
        for (; k + kLanes <= k_count; k += kLanes) {
            for (std::size_t i = 0; i < mb; ++i) {
                const T* __restrict ar = a + (m + i) * k_count + k;
                for (std::size_t j = 0; j < nb; ++j) {
                    const T* __restrict br = b + (n + j) * k_count + k;
                    T* __restrict lane = lanes[i * NB + j];
                    for (std::size_t l = 0; l < kLanes; ++l) lane[l] += ar[l] * br[l];
                }
            }
        }
        for (std::size_t i = 0; i < mb; ++i) {
            for (std::size_t j = 0; j < nb; ++j) {
                T tail = T(0);
                for (std::size_t kk = k; kk < k_count; ++kk) {
                    tail += a[(m + i) * k_count + kk] * b[(n + j) * k_count + kk];
                }
                T dot = T(0);
                for (std::size_t l = 0; l < kLanes; ++l) dot += lanes[i * NB + j][l];
                dot += tail;
                T& dst = c[(m + i) * n_count + n + j];
                dst = accumulate ? dst + dot : dot;
            }
        }
    };
    for (std::size_t m = 0; m < m_count; m += MB) {
        const std::size_t mb = m + MB <= m_count ? MB : m_count - m;
        for (std::size_t n = 0; n < n_count; n += NB) {
            const std::size_t nb = n + NB <= n_count ? NB : n_count - n;
            dot_block(m, n, mb, nb);
        }
    }
}

// C(MxN) = A(KxM)^T * B(KxN).
template <typename T>
void gemm_tn(const T* __restrict a, const T* __restrict b, T* __restrict c,
             std::size_t m_count, std::size_t k_count, std::size_t n_count,
             bool accumulate) {
    constexpr std::size_t MR = kTileRows, NR = kTileCols;
    std::size_t m = 0;
    for (; m + MR <= m_count; m += MR) {
        std::size_t n0 = 0;
        for (; n0 + NR <= n_count; n0 += NR) {
            T acc[MR][NR];
            for (std::size_t i = 0; i < MR; ++i) {
                T* cr = c + (m + i) * n_count + n0;
                for (std::size_t j = 0; j < NR; ++j) acc[i][j] = accumulate ? cr[j] : T(0);
            }
            for (std::size_t k = 0; k < k_count; ++k) {
                const T* __restrict br = b + k * n_count + n0;
                const T a0 = a[k * m_count + m + 0];
                const T a1 = a[k * m_count + m + 1];
                const T a2 = a[k * m_count + m + 2];
                const T a3 = a[k * m_count + m + 3];
                for (std::size_t j = 0; j < NR; ++j) {
                    const T bv = br[j];
                    acc[0][j] += a0 * bv;
                    acc[1][j] += a1 * bv;
                    acc[2][j] += a2 * bv;
                    acc[3][j] += a3 * bv;
                }
            }
            for (std::size_t i = 0; i < MR; ++i) {
                T* cr = c + (m + i) * n_count + n0;
                for (std::size_t j = 0; j < NR; ++j) cr[j] = acc[i][j];
            }
        }
        if (n0 < n_count) {
            const std::size_t nt = n_count - n0;
            T acc[MR][NR];
            for (std::size_t i = 0; i < MR; ++i) {
                T* cr = c + (m + i) * n_count + n0;
                for (std::size_t j = 0; j < nt; ++j) acc[i][j] = accumulate ? cr[j] : T(0);
            }
            for (std::size_t k = 0; k < k_count; ++k) {
                const T* __restrict br = b + k * n_count + n0;
                const T a0 = a[k * m_count + m + 0];
                const T a1 = a[k * m_count + m + 1];
                const T a2 = a[k * m_count + m + 2];
                const T a3 = a[k * m_count + m + 3];
                for (std::size_t j = 0; j < nt; ++j) {
                    const T bv = br[j];
                    acc[0][j] += a0 * bv;
                    acc[1][j] += a1 * bv;
                    acc[2][j] += a2 * bv;
                    acc[3][j] += a3 * bv;
                }
            }
            for (std::size_t i = 0; i < MR; ++i) {
                T* cr = c + (m + i) * n_count + n0;
                for (std::size_t j = 0; j < nt; ++j) cr[j] = acc[i][j];
            }
        }
    }
    for (; m < m_count; ++m) {
        T* cr = c + m * n_count;
        if (!accumulate) {
            for (std::size_t n = 0; n < n_count; ++n) cr[n] = T(0);
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            const T av = a[k * m_count + m];
            const T* __restrict br = b + k * n_count;
            for (std::size_t n = 0; n < n_count; ++n) cr[n] += av * br[n];
        }
    }
}

// dst(cols x rows) = src(rows x cols)^T.
template <typename T>
void transpose_into(const T* __restrict src, T* __restrict dst, std::size_t rows,
                    std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

}  // namespace rtfnet::detail
