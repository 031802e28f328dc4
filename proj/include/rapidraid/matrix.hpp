#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rapidraid/galois.hpp"

namespace rapidraid {

/// Dense matrix of field words. Geometry only; arithmetic takes the field
/// explicitly so a matrix can be reused across coefficient assignments.
class Matrix {
public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }

    uint16_t& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
    uint16_t at(size_t r, size_t c) const { return data_[r * cols_ + c]; }

    uint16_t* row(size_t r) { return data_.data() + r * cols_; }
    const uint16_t* row(size_t r) const { return data_.data() + r * cols_; }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    /// Rows picked out by index, preserving the given order.
    Matrix select_rows(const std::vector<uint32_t>& indices) const {
        Matrix out(indices.size(), cols_);
        for (size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] >= rows_)
                throw std::out_of_range("matrix: row index out of range");
            for (size_t c = 0; c < cols_; ++c)
                out.at(i, c) = at(indices[i], c);
        }
        return out;
    }

    static Matrix identity(size_t n) {
        Matrix m(n, n);
        for (size_t i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }

    friend Matrix multiply(const GaloisField& gf, const Matrix& a,
                           const Matrix& b) {
        if (a.cols() != b.rows())
            throw std::invalid_argument("matrix: dimension mismatch");
        Matrix out(a.rows(), b.cols());
        for (size_t i = 0; i < a.rows(); ++i)
            for (size_t j = 0; j < b.cols(); ++j) {
                uint32_t s = 0;
                for (size_t t = 0; t < a.cols(); ++t)
                    s ^= gf.mul(a.at(i, t), b.at(t, j));
                out.at(i, j) = static_cast<uint16_t>(s);
            }
        return out;
    }

private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<uint16_t> data_;
};

}  // namespace rapidraid
