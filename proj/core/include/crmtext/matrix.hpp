#ifndef CRMTEXT_MATRIX_HPP
#define CRMTEXT_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "crmtext/errors.hpp"

namespace crmtext {

/// Dense row-major matrix of doubles. Column vectors are shaped n x 1.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix column(std::size_t n, double fill = 0.0) { return Matrix(n, 1, fill); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void fill(double v) { data_.assign(data_.size(), v); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

/// y += W * x, with W of shape |y| x |x|.
inline void gemv_acc(const Matrix& w, std::span<const double> x, std::span<double> y) {
    if (w.cols() != x.size() || w.rows() != y.size()) throw ShapeError("gemv_acc: shape mismatch");
    for (std::size_t r = 0; r < w.rows(); ++r) y[r] += dot(w.row(r), x);
}

/// y += W^T * x, with W of shape |x| x |y|.
inline void gemv_t_acc(const Matrix& w, std::span<const double> x, std::span<double> y) {
    if (w.rows() != x.size() || w.cols() != y.size()) throw ShapeError("gemv_t_acc: shape mismatch");
    for (std::size_t r = 0; r < w.rows(); ++r) axpy(x[r], w.row(r), y);
}

/// W += col * row^T, with W of shape |col| x |row|.
inline void outer_acc(Matrix& w, std::span<const double> col, std::span<const double> row) {
    if (w.rows() != col.size() || w.cols() != row.size()) throw ShapeError("outer_acc: shape mismatch");
    for (std::size_t r = 0; r < w.rows(); ++r) axpy(col[r], row, w.row(r));
}

}  // namespace crmtext

#endif  // CRMTEXT_MATRIX_HPP
