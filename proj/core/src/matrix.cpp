#include "hem/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hem {

namespace {

std::string shape_str(std::size_t rows, std::size_t cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str(rows_, cols_));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m.at(i, i) = 1.0;
    }
    return m;
}

std::span<const double> Matrix::row(std::size_t r) const {
    return std::span<const double>(data_.data() + r * cols_, cols_);
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            out.at(c, r) = at(r, c);
        }
    }
    return out;
}

Matrix Matrix::row_block(std::size_t first, std::size_t count) const {
    if (first + count > rows_) {
        throw std::invalid_argument("Matrix::row_block: rows [" + std::to_string(first) + "," +
                                    std::to_string(first + count) + ") out of range for " +
                                    shape_str(rows_, cols_));
    }
    Matrix out(count, cols_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_,
                out.data_.begin());
    return out;
}

Matrix Matrix::col_block(std::size_t first, std::size_t count) const {
    if (first + count > cols_) {
        throw std::invalid_argument("Matrix::col_block: cols [" + std::to_string(first) + "," +
                                    std::to_string(first + count) + ") out of range for " +
                                    shape_str(rows_, cols_));
    }
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < count; ++c) {
            out.at(r, c) = at(r, first + c);
        }
    }
    return out;
}

void Matrix::add_inplace(const Matrix& other) {
    if (other.rows_ != rows_ || other.cols_ != cols_) {
        throw std::invalid_argument("Matrix::add_inplace: shape mismatch (" +
                                    shape_str(rows_, cols_) + " vs " +
                                    shape_str(other.rows_, other.cols_) + ")");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
}

void Matrix::scale_inplace(double factor) {
    for (double& v : data_) {
        v *= factor;
    }
}

void Matrix::add_to_columns(std::span<const double> v) {
    if (v.size() != rows_) {
        throw std::invalid_argument("Matrix::add_to_columns: vector length " +
                                    std::to_string(v.size()) + " does not match row count " +
                                    std::to_string(rows_));
    }
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            at(r, c) += v[r];
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: dimension mismatch (" + shape_str(a.rows(), a.cols()) +
                                    " vs " + shape_str(b.rows(), b.cols()) + ")");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out.at(i, j) += aik * b.at(k, j);
            }
        }
    }
    return out;
}

Matrix softmax_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double max = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < m.cols(); ++c) {
            max = std::max(max, m.at(r, c));
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double e = std::exp(m.at(r, c) - max);
            out.at(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out.at(r, c) /= sum;
        }
    }
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine: length mismatch (" + std::to_string(u.size()) +
                                    " vs " + std::to_string(v.size()) + ")");
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        throw std::invalid_argument("cosine: zero vector has no direction");
    }
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

Matrix hcat(const std::vector<Matrix>& parts) {
    if (parts.empty()) {
        return Matrix();
    }
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const Matrix& p : parts) {
        if (p.rows() != rows) {
            throw std::invalid_argument("hcat: row count mismatch (" + std::to_string(rows) +
                                        " vs " + std::to_string(p.rows()) + ")");
        }
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::size_t offset = 0;
    for (const Matrix& p : parts) {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < p.cols(); ++c) {
                out.at(r, offset + c) = p.at(r, c);
            }
        }
        offset += p.cols();
    }
    return out;
}

}  // namespace hem
