#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qoc {

// Dense row-major matrix. Kernels operate on raw row pointers.
template <typename T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), v(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    T* row(std::size_t r) { return v.data() + r * cols; }
    const T* row(std::size_t r) const { return v.data() + r * cols; }

    std::span<T> row_span(std::size_t r) { return {row(r), cols}; }
    std::span<const T> row_span(std::size_t r) const { return {row(r), cols}; }

    bool empty() const { return rows == 0 || cols == 0; }

    bool operator==(const Mat&) const = default;
};

using MatF = Mat<float>;
using MatD = Mat<double>;

}  // namespace qoc
