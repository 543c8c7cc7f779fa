// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtfnet {

/// Dense N-dimensional tensor with value semantics over shared storage.
///
/// 4-D activations use batch x channels x height x width order, row-major.
/// Instantiated for float (training) and double (oracle / gradient-check
/// tolerances). A tensor owns an optional gradient buffer of the same shape;
/// gradients accumulate additively during Tape::backward.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> dims, T fill = T(0))
        : s_(std::make_shared<Storage>()) {
        check_dims(dims);
        s_->dims = std::move(dims);
        s_->data.assign(count(s_->dims), fill);
    }

    Tensor(std::vector<std::size_t> dims, std::vector<T> data)
        : s_(std::make_shared<Storage>()) {
        check_dims(dims);
        if (count(dims) != data.size()) {
            throw std::invalid_argument(
                "tensor: data length " + std::to_string(data.size()) +
                " does not match shape (" + std::to_string(count(dims)) + " elements)");
        }
        s_->dims = std::move(dims);
        s_->data = std::move(data);
    }

    static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

    bool defined() const { return s_ != nullptr; }
    const std::vector<std::size_t>& dims() const { return s_->dims; }
    std::size_t rank() const { return s_->dims.size(); }
    std::size_t dim(std::size_t i) const { return s_->dims.at(i); }
    std::size_t size() const { return s_->data.size(); }

    std::span<T> data() { return s_->data; }
    std::span<const T> data() const { return s_->data; }

    T item() const {
        if (size() != 1) throw std::invalid_argument("item: tensor is not a scalar");
        return s_->data[0];
    }

    bool requires_grad() const { return s_->requires_grad; }
    Tensor& set_requires_grad(bool v) {
        s_->requires_grad = v;
        return *this;
    }

    bool has_grad() const { return !s_->grad.empty(); }

    /// Gradient buffer, allocated (zero) on first access.
    std::span<T> grad() {
        if (s_->grad.empty()) s_->grad.assign(s_->data.size(), T(0));
        return s_->grad;
    }
    std::span<const T> grad() const {
        if (s_->grad.empty()) s_->grad.assign(s_->data.size(), T(0));
        return s_->grad;
    }

    void zero_grad() {
        if (!s_->grad.empty()) s_->grad.assign(s_->data.size(), T(0));
    }

    /// Deep copy of values; gradient buffer and flags are not copied.
    Tensor clone() const {
        Tensor out;
        out.s_ = std::make_shared<Storage>();
        out.s_->dims = s_->dims;
        out.s_->data = s_->data;
        return out;
    }

    /// True when both handles view the same storage.
    bool same_storage(const Tensor& other) const { return s_ == other.s_; }

private:
    struct Storage {
        std::vector<std::size_t> dims;
        std::vector<T> data;
        mutable std::vector<T> grad;  // empty until touched
        bool requires_grad = false;
    };

    static std::size_t count(const std::vector<std::size_t>& dims) {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }

    static void check_dims(const std::vector<std::size_t>& dims) {
        if (dims.empty()) throw std::invalid_argument("tensor: rank 0 shape");
        for (auto d : dims) {
            if (d == 0) throw std::invalid_argument("tensor: zero extent in shape");
        }
    }

    std::shared_ptr<Storage> s_;
};

/// Reverse-mode autodiff tape.
///
/// Operations append one node per call; nodes hold a closure that pulls the
/// output gradient and accumulates into the inputs. Replaying the tape in
/// reverse touches each node exactly once. A tape is confined to one thread.
template <typename T>
class Tape {
public:
    /// Appends a backward node. Recording after a backward pass starts a
    /// fresh graph.
    void record(std::function<void()> backward_fn) {
        if (consumed_) consumed_ = false;
        nodes_.push_back(std::move(backward_fn));
    }

    /// Runs reverse-mode accumulation from a scalar loss. The tape is cleared
    /// afterward; calling backward again without recording a new forward pass
    /// is an error.
    void backward(Tensor<T>& loss) {
        if (consumed_) {
            throw std::runtime_error("backward: tape already consumed; run a new forward pass");
        }
        if (loss.size() != 1) {
            throw std::invalid_argument("backward: loss must be a scalar tensor");
        }
        loss.grad()[0] += T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
        nodes_.clear();
        consumed_ = true;
    }

    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    void reset() {
        nodes_.clear();
        consumed_ = false;
    }

private:
    std::vector<std::function<void()>> nodes_;
    bool consumed_ = false;
};

/// True when every element is finite (no NaN/Inf).
template <typename T>
bool all_finite(const Tensor<T>& t);

extern template bool all_finite(const Tensor<float>&);
extern template bool all_finite(const Tensor<double>&);

}  // namespace rtfnet
