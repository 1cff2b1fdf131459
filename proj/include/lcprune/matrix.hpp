#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace lcprune {

/// Dense row-major matrix. One row per sample.
template <typename T>
struct BasicMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> values;

    BasicMatrix() = default;
    BasicMatrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), values(r * c, fill) {}
    BasicMatrix(std::size_t r, std::size_t c, std::vector<T> v) : rows(r), cols(c), values(std::move(v)) {}

    std::span<const T> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    std::span<T> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    T operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    T& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }

    bool operator==(const BasicMatrix&) const = default;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

/// Euclidean distance between two equally sized rows, accumulated in double.
template <typename A, typename B>
double l2_distance(std::span<const A> a, std::span<const B> b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

template <typename A, typename B>
double squared_l2(std::span<const A> a, std::span<const B> b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        acc += diff * diff;
    }
    return acc;
}

}  // namespace lcprune
