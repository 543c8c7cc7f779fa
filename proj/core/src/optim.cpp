// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#include "rtfnet/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "rtfnet/rng.hpp"

namespace rtfnet {

template <typename T>
void init_params(NamedParams<T>& params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& [name, p] : params) {
        p.set_requires_grad(true);
        auto d = p.data();
        if (p.rank() == 4) {
            const double fan_in =
                static_cast<double>(p.dim(1) * p.dim(2) * p.dim(3));
            const double bound = std::sqrt(2.0 / fan_in);
            for (auto& v : d) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
        } else if (p.rank() == 2) {
            const double fan_in = static_cast<double>(p.dim(0));
            const double fan_out = static_cast<double>(p.dim(1));
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            for (auto& v : d) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
        } else {
            const bool is_scale = name.size() >= 5 &&
                                  name.compare(name.size() - 5, 5, "gamma") == 0;
            const T fill = is_scale ? T(1) : T(0);
            for (auto& v : d) v = fill;
        }
    }
}

template <typename T>
void adam_step(NamedParams<T>& params, AdamState<T>& state, T lr) {
    if (state.slots.size() != params.size()) {
        throw std::invalid_argument("adam_step: state/parameter count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].second;
        if (state.slots[i].m.size() != p.size()) {
            throw std::invalid_argument("adam_step: shape mismatch for parameter " +
                                        params[i].first);
        }
        for (T g : p.grad()) {
            if (!std::isfinite(g)) {
                throw std::runtime_error("adam_step: non-finite gradient in " +
                                         params[i].first + "; step aborted");
            }
        }
    }

    state.t += 1;
    const T b1 = T(kAdamBeta1), b2 = T(kAdamBeta2), eps = T(kAdamEps);
    const T bc1 = T(1) - static_cast<T>(std::pow(kAdamBeta1, double(state.t)));
    const T bc2 = T(1) - static_cast<T>(std::pow(kAdamBeta2, double(state.t)));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].second;
        auto dat = p.data();
        auto grd = p.grad();
        auto& m = state.slots[i].m;
        auto& v = state.slots[i].v;
        for (std::size_t j = 0; j < dat.size(); ++j) {
            const T g = grd[j];
            m[j] = b1 * m[j] + (T(1) - b1) * g;
            v[j] = b2 * v[j] + (T(1) - b2) * g * g;
            const T mhat = m[j] / bc1;
            const T vhat = v[j] / bc2;
            dat[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double lr_at(const LrSchedule& schedule, std::uint32_t epoch) {
    if (schedule.base_lr <= 0 || schedule.step_size == 0 || schedule.gamma <= 0 ||
        schedule.gamma >= 1) {
        throw std::invalid_argument("lr_at: invalid schedule");
    }
    return schedule.base_lr *
           std::pow(schedule.gamma, static_cast<double>(epoch / schedule.step_size));
}

template void init_params(NamedParams<float>&, std::uint64_t);
template void init_params(NamedParams<double>&, std::uint64_t);
template void adam_step(NamedParams<float>&, AdamState<float>&, float);
template void adam_step(NamedParams<double>&, AdamState<double>&, double);

}  // namespace rtfnet
