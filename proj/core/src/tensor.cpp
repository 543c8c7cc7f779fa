// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include "rtfnet/tensor.hpp"

#include <cmath>

namespace rtfnet {

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (T v : t.data()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template bool all_finite(const Tensor<float>&);
template bool all_finite(const Tensor<double>&);

}  // namespace rtfnet
