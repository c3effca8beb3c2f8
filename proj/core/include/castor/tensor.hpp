#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace castor {

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroVector : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major tensor.  double in tests and gradient checks, float in
// training and inference.
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<T> data_)
        : shape(std::move(shape_)), data(std::move(data_)) {
        if (data.size() != numel_of(shape)) {
            throw ShapeMismatch("tensor data size " + std::to_string(data.size()) +
                                " does not match shape (expects " +
                                std::to_string(numel_of(shape)) + ")");
        }
    }

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = numel_of(shape);
        return Tensor(std::move(shape), std::vector<T>(n, T(0)));
    }

    static Tensor full(std::vector<std::size_t> shape, T value) {
        std::size_t n = numel_of(shape);
        return Tensor(std::move(shape), std::vector<T>(n, value));
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }

    T& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    T at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (T v : t.data) {
        if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
}

template <typename T>
void require_finite(const Tensor<T>& t, const char* what) {
    if (!all_finite(t)) throw NonFinite(std::string(what) + " contains a non-finite value");
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeMismatch(std::string(what) + ": shapes differ");
}

}  // namespace castor
