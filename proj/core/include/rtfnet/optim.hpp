// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rtfnet/tensor.hpp"

namespace rtfnet {

/// Named, ordered view of a model's learnable tensors. Handles share storage
/// with the model; the order is the model's fixed enumeration order.
template <typename T>
using NamedParams = std::vector<std::pair<std::string, Tensor<T>>>;

/// Fills parameters in place, in enumeration order, from one seeded stream:
/// rank-4 conv weights Kaiming-uniform over [-sqrt(2/fan_in), sqrt(2/fan_in)),
/// rank-2 projection weights Xavier-uniform, biases/shifts zero, scales one.
/// Also marks every parameter requires_grad.
template <typename T>
void init_params(NamedParams<T>& params, std::uint64_t seed);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Adam accumulator state: first/second moment per parameter, shape-locked at
/// init, plus the shared step counter.
template <typename T>
struct AdamState {
    struct Slot {
        std::vector<T> m;
        std::vector<T> v;
    };
    std::vector<Slot> slots;
    std::uint64_t t = 0;

    static AdamState init(const NamedParams<T>& params) {
        AdamState s;
        s.slots.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            s.slots[i].m.assign(params[i].second.size(), T(0));
            s.slots[i].v.assign(params[i].second.size(), T(0));
        }
        return s;
    }
};

/// One Adam update over all parameters from their accumulated gradients.
/// Aborts (throws, no mutation) on shape mismatch or a non-finite gradient.
template <typename T>
void adam_step(NamedParams<T>& params, AdamState<T>& state, T lr);

/// Step-decay learning-rate schedule.
struct LrSchedule {
    double base_lr = 1e-3;
    std::uint32_t step_size = 6;
    double gamma = 0.5;
};

/// base_lr * gamma^floor(epoch / step_size).
double lr_at(const LrSchedule& schedule, std::uint32_t epoch);

extern template void init_params(NamedParams<float>&, std::uint64_t);
extern template void init_params(NamedParams<double>&, std::uint64_t);
extern template void adam_step(NamedParams<float>&, AdamState<float>&, float);
extern template void adam_step(NamedParams<double>&, AdamState<double>&, double);

}  // namespace rtfnet
