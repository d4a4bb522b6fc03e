#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hem {

/// Dense row-major matrix of doubles. Every tensor in the library is small
/// and dense, so this is the only storage type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const;

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;

    Matrix transposed() const;
    Matrix row_block(std::size_t first, std::size_t count) const;
    Matrix col_block(std::size_t first, std::size_t count) const;

    void add_inplace(const Matrix& other);
    void scale_inplace(double factor);
    /// Adds v to every column; v.size() must equal rows().
    void add_to_columns(std::span<const double> v);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard matrix product; throws std::invalid_argument naming both shapes
/// when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

/// Row-wise softmax with per-row max subtraction. Each output row is
/// non-negative and sums to 1.
Matrix softmax_rows(const Matrix& m);

/// Cosine similarity dot(u,v)/(|u||v|), clamped to [-1,1] against rounding.
/// Throws std::invalid_argument on length mismatch or an all-zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

/// Column-wise concatenation of uniformly shaped parts.
Matrix hcat(const std::vector<Matrix>& parts);

}  // namespace hem
